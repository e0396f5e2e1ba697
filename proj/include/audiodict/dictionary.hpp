#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "audiodict/global_dictionary.hpp"
#include "audiodict/sparse_coding.hpp"

namespace audiodict {

struct Hyperparams {
    double lambda = 0.1;   // sparsity weight on J3
    double gamma1 = 0.1;   // cross-class coefficient suppression, J4
    double gamma2 = 0.1;   // pairwise dictionary orthogonality, J5
    int kprime = 10;       // atoms per class
    int iterations = 200;  // outer alternations (T)
    double eta0 = 1e-3;    // initial proximal step size
    double alpha = 0.5;    // backtracking shrink factor
    double coding_tol = 1e-6;
    int coding_max_iter = 10000;
    int max_backtracks = 30;

    void validate() const {
        if (lambda < 0 || gamma1 < 0 || gamma2 < 0) {
            throw InvalidParam("regularization weights must be nonnegative");
        }
        if (kprime < 1 || iterations < 1 || max_backtracks < 1) {
            throw InvalidParam("kprime, iterations and max_backtracks must be >= 1");
        }
        if (eta0 <= 0 || alpha <= 0 || alpha >= 1) {
            throw InvalidParam("require eta0 > 0 and alpha in (0,1)");
        }
        if (coding_tol <= 0 || coding_max_iter < 1) {
            throw InvalidParam("bad coding tolerances");
        }
    }
};

// J = J1 + J2 + lambda*J3 + gamma1*J4 + gamma2*J5; j3..j5 are stored
// unweighted.
struct ObjectiveBreakdown {
    double j1 = 0, j2 = 0, j3 = 0, j4 = 0, j5 = 0;
    double total = 0;
};

// Scratch shared by per-class gradient evaluations: the global reconstruction
// residual and the dictionary Gram matrix. prepare() must be called whenever
// D or the codes change.
struct GradientWorkspace {
    Eigen::MatrixXd residual;  // X - D A, M x N
    Eigen::MatrixXd gram;      // D^T D, K x K

    void prepare(const GlobalDictionary& dict, const Eigen::MatrixXd& codes,
                 const Eigen::MatrixXd& X) {
        residual.noalias() = X - dict.atoms() * codes;
        gram.noalias() = dict.atoms().transpose() * dict.atoms();
    }
};

struct FitIteration {
    ObjectiveBreakdown after_coding;  // J(D_{t-1}, A_t)
    ObjectiveBreakdown after_step;    // J(D_t, A_t)
    int backtracks = 0;               // step-size shrinks before acceptance
    bool step_accepted = false;
};

struct FitReport {
    std::vector<FitIteration> trace;
    double final_kkt_max = 0.0;
    double final_kkt_mean = 0.0;
};

struct FitResult {
    GlobalDictionary dictionary;
    Eigen::MatrixXd codes;  // K x N, columns aligned with X
    FitReport report;
};

// Exact evaluation of the class-based objective. X is M x N, codes K x N,
// labels in 0..C-1. N = 0 is allowed (only J5 is then nonzero).
ObjectiveBreakdown objective(const GlobalDictionary& dict, const Eigen::MatrixXd& codes,
                             const Eigen::MatrixXd& X, const std::vector<int>& labels,
                             const Hyperparams& hp);

// Gradient of the objective with respect to class dictionary p. ws must have
// been prepared for exactly (dict, codes, X).
Eigen::MatrixXd grad_dictionary(int p, const GlobalDictionary& dict,
                                const Eigen::MatrixXd& codes, const Eigen::MatrixXd& X,
                                const std::vector<int>& labels, const Hyperparams& hp,
                                const GradientWorkspace& ws);

// Convenience overload preparing its own workspace.
Eigen::MatrixXd grad_dictionary(int p, const GlobalDictionary& dict,
                                const Eigen::MatrixXd& codes, const Eigen::MatrixXd& X,
                                const std::vector<int>& labels, const Hyperparams& hp);

// Rescales every atom with norm > 1 back to the unit sphere.
GlobalDictionary prox_normalize(GlobalDictionary dict);

// Per-class K-SVD initialization: greedy coding with a small sparsity budget
// alternated with rank-1 atom updates. Deterministic for a fixed seed.
GlobalDictionary ksvd_init(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                           int kprime, int iters, std::uint64_t seed);

// Alternating optimization: supervised sparse coding followed by a proximal
// gradient step on all class dictionaries with backtracking line search.
FitResult fit(const Eigen::MatrixXd& X, const std::vector<int>& labels, const Hyperparams& hp,
              const std::optional<GlobalDictionary>& init, std::uint64_t seed,
              int threads = 1);

// Entry (c, c') = Frobenius norm of D_c^T D_c'.
Eigen::MatrixXd dictionary_similarity(const GlobalDictionary& dict);

}  // namespace audiodict
