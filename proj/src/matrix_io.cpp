#include "audiodict/matrix_io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace audiodict {

namespace {

constexpr char kMatrixMagic[8] = {'A', 'D', 'L', 'M', 'A', 'T', 'R', 'X'};
constexpr std::uint32_t kMatrixVersion = 1;

}  // namespace

void write_matrix(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(kMatrixMagic, sizeof(kMatrixMagic));
    const std::uint32_t version = kMatrixVersion;
    const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
    const std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
    f.write(reinterpret_cast<const char*>(&version), sizeof(version));
    f.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    f.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    // Eigen's default storage is column-major, matching the format.
    f.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!f) throw IoError("write failed: " + path);
}

Eigen::MatrixXd read_matrix(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    char magic[8];
    std::uint32_t version = 0;
    std::uint64_t rows = 0, cols = 0;
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMatrixMagic, sizeof(magic)) != 0) {
        throw CorruptFile("bad matrix magic: " + path);
    }
    f.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!f) throw CorruptFile("truncated matrix header: " + path);
    if (version != kMatrixVersion) {
        throw VersionMismatch("matrix format version " + std::to_string(version) +
                              " not supported");
    }
    f.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    f.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (!f) throw CorruptFile("truncated matrix header: " + path);
    if (rows > (1ULL << 32) || cols > (1ULL << 32)) throw CorruptFile("absurd matrix shape");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    f.read(reinterpret_cast<char*>(m.data()),
           static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!f) throw CorruptFile("truncated matrix payload: " + path);
    return m;
}

void write_features_csv(const std::string& path, const Eigen::MatrixXd& features,
                        const std::vector<int>& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != features.cols()) {
        throw DimensionMismatch("label count mismatch");
    }
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    char buf[40];
    for (Eigen::Index n = 0; n < features.cols(); ++n) {
        f << labels[static_cast<std::size_t>(n)];
        for (Eigen::Index i = 0; i < features.rows(); ++i) {
            std::snprintf(buf, sizeof(buf), ",%.17g", features(i, n));
            f << buf;
        }
        f << '\n';
    }
    if (!f) throw IoError("write failed: " + path);
}

std::pair<Eigen::MatrixXd, std::vector<int>> read_features_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        if (!std::getline(ss, cell, ',')) throw CorruptFile("bad CSV row in " + path);
        labels.push_back(std::stoi(cell));
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        if (!rows.empty() && vals.size() != rows.front().size()) {
            throw CorruptFile("ragged CSV in " + path);
        }
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw CorruptFile("empty feature CSV: " + path);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.front().size()),
                      static_cast<Eigen::Index>(rows.size()));
    for (std::size_t n = 0; n < rows.size(); ++n) {
        for (std::size_t i = 0; i < rows[n].size(); ++i) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n)) = rows[n][i];
        }
    }
    return {std::move(m), std::move(labels)};
}

void write_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    for (int v : labels) f << v << '\n';
    if (!f) throw IoError("write failed: " + path);
}

std::vector<int> read_labels(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    std::vector<int> labels;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        labels.push_back(std::stoi(line));
    }
    return labels;
}

}  // namespace audiodict
