#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "audiodict/errors.hpp"

namespace audiodict {

// Compact binary matrix: 8-byte magic, u32 version, u64 rows, u64 cols, then
// rows*cols little-endian 64-bit floats in column-major order.
void write_matrix(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(const std::string& path);

// Feature CSV: one row per clip, label first, then values at full precision.
void write_features_csv(const std::string& path, const Eigen::MatrixXd& features,
                        const std::vector<int>& labels);
std::pair<Eigen::MatrixXd, std::vector<int>> read_features_csv(const std::string& path);

// Plain label list, one integer per line.
void write_labels(const std::string& path, const std::vector<int>& labels);
std::vector<int> read_labels(const std::string& path);

}  // namespace audiodict
