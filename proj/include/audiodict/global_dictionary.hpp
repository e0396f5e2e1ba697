#pragma once

#include <Eigen/Dense>
#include <vector>

#include "audiodict/errors.hpp"

namespace audiodict {

// Concatenation of per-class dictionaries: atoms is M x (C*K') with class c
// occupying columns [c*K', (c+1)*K'). Atoms are constrained to the unit ball.
class GlobalDictionary {
public:
    GlobalDictionary() = default;

    GlobalDictionary(Eigen::MatrixXd atoms, int num_classes)
        : atoms_(std::move(atoms)), num_classes_(num_classes) {
        if (num_classes_ <= 0 || atoms_.cols() % num_classes_ != 0) {
            throw DimensionMismatch("atom count must be a multiple of the class count");
        }
    }

    static GlobalDictionary from_class_dicts(const std::vector<Eigen::MatrixXd>& dicts) {
        if (dicts.empty()) throw DimensionMismatch("no class dictionaries");
        const Eigen::Index m = dicts.front().rows();
        const Eigen::Index kp = dicts.front().cols();
        Eigen::MatrixXd atoms(m, kp * static_cast<Eigen::Index>(dicts.size()));
        for (std::size_t c = 0; c < dicts.size(); ++c) {
            if (dicts[c].rows() != m || dicts[c].cols() != kp) {
                throw DimensionMismatch("class dictionaries must share dimensions");
            }
            atoms.middleCols(static_cast<Eigen::Index>(c) * kp, kp) = dicts[c];
        }
        return GlobalDictionary(std::move(atoms), static_cast<int>(dicts.size()));
    }

    Eigen::Index feature_dim() const { return atoms_.rows(); }
    int num_classes() const { return num_classes_; }
    Eigen::Index atoms_per_class() const {
        return num_classes_ > 0 ? atoms_.cols() / num_classes_ : 0;
    }
    Eigen::Index total_atoms() const { return atoms_.cols(); }

    const Eigen::MatrixXd& atoms() const { return atoms_; }
    Eigen::MatrixXd& atoms() { return atoms_; }

    auto class_block(int c) const {
        return atoms_.middleCols(static_cast<Eigen::Index>(c) * atoms_per_class(),
                                 atoms_per_class());
    }
    auto class_block(int c) {
        return atoms_.middleCols(static_cast<Eigen::Index>(c) * atoms_per_class(),
                                 atoms_per_class());
    }

    double max_atom_norm() const {
        double m = 0.0;
        for (Eigen::Index k = 0; k < atoms_.cols(); ++k) {
            m = std::max(m, atoms_.col(k).norm());
        }
        return m;
    }

    void validate() const {
        if (!atoms_.allFinite()) throw InvalidParam("dictionary contains non-finite entries");
        if (max_atom_norm() > 1.0 + 1e-10) {
            throw InvalidParam("dictionary atom exceeds the unit-norm constraint");
        }
    }

private:
    Eigen::MatrixXd atoms_;
    int num_classes_ = 0;
};

}  // namespace audiodict
