#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "audiodict/errors.hpp"

namespace audiodict {

struct KernelSpec {
    enum class Type { linear, polynomial };
    Type type = Type::linear;
    int degree = 2;
    double coef0 = 1.0;

    double eval(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
    std::string name() const { return type == Type::linear ? "linear" : "polynomial"; }
};

// Soft-margin binary SVM in dual form. coefs holds alpha_n * y_n for the
// stored support vectors; decision(a) = sum coefs_n k(sv_n, a) + bias.
struct BinarySvm {
    Eigen::MatrixXd support_vectors;  // one column per support vector
    Eigen::VectorXd coefs;
    double bias = 0.0;
    KernelSpec kernel;
    double c_svm = 1.0;
    Eigen::Index input_dim = 0;
    bool converged = true;
    long iterations = 0;
    Eigen::VectorXd linear_weights;  // collapsed weights, linear kernel only

    double decision(const Eigen::VectorXd& a) const;
};

// Trains on samples as columns of X with labels in {-1, +1}. SMO with
// maximal-violating-pair selection; deterministic (ties broken by index).
BinarySvm svm_train_binary(const Eigen::MatrixXd& X, const std::vector<int>& y, double c_svm,
                           const KernelSpec& kernel, double tol = 1e-3);

struct OvaSvmModel {
    std::vector<BinarySvm> machines;  // machine c separates class c from the rest
    Eigen::Index input_dim = 0;

    int num_classes() const { return static_cast<int>(machines.size()); }
    Eigen::VectorXd decision_values(const Eigen::VectorXd& a) const;
};

// One-against-all training; labels in 0..C-1, every class present, C >= 2.
OvaSvmModel ova_train(const Eigen::MatrixXd& X, const std::vector<int>& y, double c_svm,
                      const KernelSpec& kernel, double tol = 1e-3);

// argmax_c h^(c)(a); ties resolved toward the smaller class index.
int ova_predict(const OvaSvmModel& model, const Eigen::VectorXd& a);

std::vector<int> ova_predict_batch(const OvaSvmModel& model, const Eigen::MatrixXd& A);

}  // namespace audiodict
