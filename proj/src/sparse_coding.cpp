#include "audiodict/sparse_coding.hpp"

#include <cmath>

#include "audiodict/parallel.hpp"

namespace audiodict {

namespace {

constexpr double kMinUpdate = 1e-8;   // coordinate-update stopping threshold
constexpr double kDeadAtom2 = 1e-20;  // squared norm below which an atom is dead

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

}  // namespace

BatchCoder::BatchCoder(const GlobalDictionary& dict) : dict_(&dict) {
    if (dict.total_atoms() < 1) throw DimensionMismatch("dictionary has no atoms");
    gram_.noalias() = dict.atoms().transpose() * dict.atoms();
    atom_norms2_ = gram_.diagonal();
}

SparseCode BatchCoder::solve(const Eigen::VectorXd& x, std::optional<int> label,
                             const CodingParams& params,
                             const Eigen::VectorXd* warm_start) const {
    const GlobalDictionary& dict = *dict_;
    if (x.size() != dict.feature_dim()) {
        throw DimensionMismatch("feature dimension does not match the dictionary");
    }
    if (label && (*label < 0 || *label >= dict.num_classes())) {
        throw LabelOutOfRange("label outside 0..C-1");
    }
    if (params.lambda < 0.0 || params.gamma1 < 0.0) {
        throw InvalidParam("lambda and gamma1 must be nonnegative");
    }
    if (params.tol <= 0.0 || params.max_iter < 1) {
        throw InvalidParam("tol must be positive and max_iter >= 1");
    }

    const Eigen::Index num_atoms = dict.total_atoms();
    const Eigen::Index block = dict.atoms_per_class();
    const bool supervised = label.has_value();
    const Eigen::Index off = supervised ? static_cast<Eigen::Index>(*label) * block : 0;
    const double lambda = params.lambda;
    const double gamma1 = supervised ? params.gamma1 : 0.0;
    const double half_lambda = lambda / 2.0;

    const Eigen::VectorXd corr = dict.atoms().transpose() * x;
    const double xsq = x.squaredNorm();

    Eigen::VectorXd a;
    if (warm_start != nullptr && warm_start->size() == num_atoms) {
        a = *warm_start;
    } else {
        a = Eigen::VectorXd::Zero(num_atoms);
    }

    Eigen::VectorXd u = gram_ * a;  // G a, kept incrementally up to date
    Eigen::VectorXd uc;             // class-block Gram times class-block coefficients
    if (supervised) {
        uc = gram_.block(off, off, block, block) * a.segment(off, block);
    }

    auto cached_kkt = [&]() {
        double worst = 0.0;
        for (Eigen::Index k = 0; k < num_atoms; ++k) {
            double g = 2.0 * (u[k] - corr[k]);
            if (supervised) {
                if (k >= off && k < off + block) {
                    g += 2.0 * (uc[k - off] - corr[k]);
                } else {
                    g += 2.0 * gamma1 * a[k];
                }
            }
            double viol = a[k] != 0.0 ? std::abs(g + (a[k] > 0.0 ? lambda : -lambda))
                                      : std::max(std::abs(g) - lambda, 0.0);
            worst = std::max(worst, viol);
        }
        return worst;
    };

    auto cached_objective = [&]() {
        double obj = xsq - 2.0 * a.dot(corr) + a.dot(u);
        if (supervised) {
            const auto ab = a.segment(off, block);
            obj += xsq - 2.0 * ab.dot(corr.segment(off, block)) + ab.dot(uc);
            obj += gamma1 * (a.squaredNorm() - ab.squaredNorm());
        }
        obj += lambda * a.lpNorm<1>();
        return obj;
    };

    int sweeps = 0;
    bool converged = false;
    while (sweeps < params.max_iter) {
        ++sweeps;
        double max_delta = 0.0;
        for (Eigen::Index k = 0; k < num_atoms; ++k) {
            const double nd2 = atom_norms2_[k];
            const bool in_class = supervised && k >= off && k < off + block;
            double delta;
            if (nd2 <= kDeadAtom2) {
                if (a[k] == 0.0) continue;
                delta = -a[k];  // dead atoms carry no coefficient
                a[k] = 0.0;
            } else {
                double p = corr[k] - u[k] + nd2 * a[k];
                double q = nd2;
                if (in_class) {
                    p += corr[k] - uc[k - off] + nd2 * a[k];
                    q += nd2;
                } else if (supervised) {
                    q += gamma1;
                }
                const double next = soft_threshold(p, half_lambda) / q;
                delta = next - a[k];
                if (delta == 0.0) continue;
                a[k] = next;
            }
            u += delta * gram_.col(k);
            if (in_class) uc += delta * gram_.col(k).segment(off, block);
            max_delta = std::max(max_delta, std::abs(delta));
        }
        if (params.iteration_callback) params.iteration_callback(sweeps, cached_objective());
        if (max_delta < kMinUpdate) break;
        if (cached_kkt() <= params.tol) {
            converged = true;
            break;
        }
    }

    // Refresh the caches before certifying; incremental updates drift a little.
    u.noalias() = gram_ * a;
    if (supervised) {
        uc.noalias() = gram_.block(off, off, block, block) * a.segment(off, block);
    }
    SparseCode code;
    code.block_size = block;
    code.num_classes = dict.num_classes();
    code.sweeps = sweeps;
    code.kkt = cached_kkt();
    code.converged = code.kkt <= params.tol;
    code.coeffs = std::move(a);
    return code;
}

SparseCode lasso_code(const Eigen::VectorXd& x, const GlobalDictionary& dict, double lambda,
                      double tol, int max_iter) {
    CodingParams params;
    params.lambda = lambda;
    params.tol = tol;
    params.max_iter = max_iter;
    return BatchCoder(dict).solve(x, std::nullopt, params);
}

SparseCode supervised_code(const CodingProblem& problem) {
    if (problem.dictionary == nullptr) throw InvalidParam("coding problem has no dictionary");
    if (!problem.label) throw MissingLabel("supervised coding requires a class label");
    return BatchCoder(*problem.dictionary).solve(problem.x, problem.label, problem.params);
}

double kkt_residual(const CodingProblem& problem, const SparseCode& code) {
    if (problem.dictionary == nullptr) throw InvalidParam("coding problem has no dictionary");
    const GlobalDictionary& dict = *problem.dictionary;
    if (problem.x.size() != dict.feature_dim() || code.coeffs.size() != dict.total_atoms()) {
        throw DimensionMismatch("problem/code dimensions do not match the dictionary");
    }
    const double lambda = problem.params.lambda;
    const Eigen::VectorXd& a = code.coeffs;

    Eigen::VectorXd g = -2.0 * (dict.atoms().transpose() * (problem.x - dict.atoms() * a));
    if (problem.label) {
        const int c = *problem.label;
        if (c < 0 || c >= dict.num_classes()) throw LabelOutOfRange("label outside 0..C-1");
        const Eigen::Index block = dict.atoms_per_class();
        const Eigen::Index off = static_cast<Eigen::Index>(c) * block;
        const auto Db = dict.class_block(c);
        const Eigen::VectorXd rc = problem.x - Db * a.segment(off, block);
        g.segment(off, block) -= 2.0 * (Db.transpose() * rc);
        for (Eigen::Index k = 0; k < a.size(); ++k) {
            if (k < off || k >= off + block) g[k] += 2.0 * problem.params.gamma1 * a[k];
        }
    }

    double worst = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        double viol = a[k] != 0.0 ? std::abs(g[k] + (a[k] > 0.0 ? lambda : -lambda))
                                  : std::max(std::abs(g[k]) - lambda, 0.0);
        worst = std::max(worst, viol);
    }
    return worst;
}

Eigen::MatrixXd lasso_code_matrix(const Eigen::MatrixXd& X, const GlobalDictionary& dict,
                                  const CodingParams& params, int threads) {
    if (X.rows() != dict.feature_dim()) {
        throw DimensionMismatch("feature dimension does not match the dictionary");
    }
    BatchCoder coder(dict);
    Eigen::MatrixXd codes(dict.total_atoms(), X.cols());
    parallel_for(static_cast<std::size_t>(X.cols()), threads, [&](std::size_t n) {
        codes.col(static_cast<Eigen::Index>(n)) =
            coder.solve(X.col(static_cast<Eigen::Index>(n)), std::nullopt, params).coeffs;
    });
    return codes;
}

}  // namespace audiodict
