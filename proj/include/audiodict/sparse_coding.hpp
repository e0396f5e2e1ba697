#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "audiodict/global_dictionary.hpp"

namespace audiodict {

// Sparse coefficient vector over the global dictionary, partitioned into C
// per-class blocks of K' coefficients. Solver diagnostics ride along so a
// non-converged solve can hand back its best iterate.
struct SparseCode {
    Eigen::VectorXd coeffs;
    Eigen::Index block_size = 0;
    int num_classes = 0;

    double kkt = 0.0;
    bool converged = false;
    int sweeps = 0;

    auto block(int c) const {
        return coeffs.segment(static_cast<Eigen::Index>(c) * block_size, block_size);
    }
};

struct CodingParams {
    double lambda = 0.1;
    double gamma1 = 0.0;
    double tol = 1e-6;
    int max_iter = 10000;
    // Called after every full coordinate-descent sweep with the current
    // objective value; used by monotonicity checks.
    std::function<void(int sweep, double objective)> iteration_callback;
};

// label present selects the supervised objective
//   ||x - D a||^2 + ||x - D_c' a_c'||^2 + gamma1 (||a||^2 - ||a_c'||^2) + lambda ||a||_1
// label absent selects the plain Lasso ||x - D a||^2 + lambda ||a||_1.
struct CodingProblem {
    Eigen::VectorXd x;
    const GlobalDictionary* dictionary = nullptr;
    std::optional<int> label;
    CodingParams params;
};

// Shares the Gram matrix of one dictionary across many solves; solve() is
// const and thread-safe for concurrent samples.
class BatchCoder {
public:
    explicit BatchCoder(const GlobalDictionary& dict);

    SparseCode solve(const Eigen::VectorXd& x, std::optional<int> label,
                     const CodingParams& params,
                     const Eigen::VectorXd* warm_start = nullptr) const;

    const GlobalDictionary& dictionary() const { return *dict_; }

private:
    const GlobalDictionary* dict_;
    Eigen::MatrixXd gram_;
    Eigen::VectorXd atom_norms2_;
};

SparseCode lasso_code(const Eigen::VectorXd& x, const GlobalDictionary& dict, double lambda,
                      double tol = 1e-6, int max_iter = 10000);

SparseCode supervised_code(const CodingProblem& problem);

// Maximal violation of the subgradient optimality conditions, computed from
// first-principles residuals (independent of the solver's cached quantities).
double kkt_residual(const CodingProblem& problem, const SparseCode& code);

// Codes every column of X with the plain Lasso; returns codes as columns.
Eigen::MatrixXd lasso_code_matrix(const Eigen::MatrixXd& X, const GlobalDictionary& dict,
                                  const CodingParams& params, int threads = 1);

}  // namespace audiodict
