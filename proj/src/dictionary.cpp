#include "audiodict/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "audiodict/parallel.hpp"
#include "audiodict/rng.hpp"

namespace audiodict {

namespace {

void check_problem_dims(const GlobalDictionary& dict, const Eigen::MatrixXd& codes,
                        const Eigen::MatrixXd& X, const std::vector<int>& labels) {
    if (X.rows() != dict.feature_dim()) throw DimensionMismatch("feature dim mismatch");
    if (codes.rows() != dict.total_atoms()) throw DimensionMismatch("code dim mismatch");
    if (codes.cols() != X.cols()) throw DimensionMismatch("sample count mismatch");
    if (static_cast<Eigen::Index>(labels.size()) != X.cols()) {
        throw DimensionMismatch("label count mismatch");
    }
    for (int c : labels) {
        if (c < 0 || c >= dict.num_classes()) throw LabelOutOfRange("label outside 0..C-1");
    }
}

// Core evaluation reusing a precomputed residual and Gram matrix.
ObjectiveBreakdown objective_impl(const GlobalDictionary& dict, const Eigen::MatrixXd& codes,
                                  const Eigen::MatrixXd& X, const std::vector<int>& labels,
                                  const Hyperparams& hp, const Eigen::MatrixXd& residual,
                                  const Eigen::MatrixXd& gram) {
    const Eigen::Index block = dict.atoms_per_class();
    ObjectiveBreakdown out;
    out.j1 = residual.squaredNorm();
    for (Eigen::Index n = 0; n < X.cols(); ++n) {
        const int c = labels[static_cast<std::size_t>(n)];
        const auto ac = codes.col(n).segment(static_cast<Eigen::Index>(c) * block, block);
        out.j2 += (X.col(n) - dict.class_block(c) * ac).squaredNorm();
        out.j4 += codes.col(n).squaredNorm() - ac.squaredNorm();
    }
    out.j3 = codes.lpNorm<1>();
    // J5 sums ||D_c^T D_c'||_F^2 over ordered pairs c != c'.
    double diag = 0.0;
    for (int c = 0; c < dict.num_classes(); ++c) {
        diag += gram.block(static_cast<Eigen::Index>(c) * block,
                           static_cast<Eigen::Index>(c) * block, block, block)
                    .squaredNorm();
    }
    out.j5 = gram.squaredNorm() - diag;
    out.total = out.j1 + out.j2 + hp.lambda * out.j3 + hp.gamma1 * out.j4 + hp.gamma2 * out.j5;
    return out;
}

Eigen::MatrixXd grad_impl(int p, const GlobalDictionary& dict, const Eigen::MatrixXd& codes,
                          const Eigen::MatrixXd& X, const std::vector<int>& labels,
                          const Hyperparams& hp, const Eigen::MatrixXd& residual,
                          const Eigen::MatrixXd& gram) {
    const Eigen::Index block = dict.atoms_per_class();
    const Eigen::Index off = static_cast<Eigen::Index>(p) * block;
    const auto Dp = dict.class_block(p);
    const auto Ap = codes.middleRows(off, block);

    // J1: with x~_n = x_n - sum_{c != p} D_c a_nc the terms telescope to
    // -2 (X - D A) A_p^T.
    Eigen::MatrixXd grad = -2.0 * (residual * Ap.transpose());

    // J2: only samples of class p contribute.
    std::vector<Eigen::Index> members;
    for (Eigen::Index n = 0; n < X.cols(); ++n) {
        if (labels[static_cast<std::size_t>(n)] == p) members.push_back(n);
    }
    if (!members.empty()) {
        Eigen::MatrixXd Xp(X.rows(), static_cast<Eigen::Index>(members.size()));
        Eigen::MatrixXd App(block, static_cast<Eigen::Index>(members.size()));
        for (std::size_t i = 0; i < members.size(); ++i) {
            Xp.col(static_cast<Eigen::Index>(i)) = X.col(members[i]);
            App.col(static_cast<Eigen::Index>(i)) = Ap.col(members[i]);
        }
        grad.noalias() += -2.0 * ((Xp - Dp * App) * App.transpose());
    }

    // J5: 4 sum_{c != p} D_c (D_c^T D_p), assembled as D (G[:, p-block]) minus
    // the c = p term.
    if (hp.gamma2 != 0.0) {
        Eigen::MatrixXd cross = dict.atoms() * gram.middleCols(off, block);
        cross.noalias() -= Dp * gram.block(off, off, block, block);
        grad.noalias() += (4.0 * hp.gamma2) * cross;
    }
    return grad;
}

// Greedy orthogonal matching pursuit against a small per-class dictionary.
Eigen::VectorXd omp_code(const Eigen::VectorXd& x, const Eigen::MatrixXd& atoms, int budget) {
    const Eigen::Index k = atoms.cols();
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd r = x;
    std::vector<Eigen::Index> sel;
    for (int step = 0; step < budget; ++step) {
        double best = 1e-12;
        Eigen::Index best_k = -1;
        for (Eigen::Index j = 0; j < k; ++j) {
            if (std::find(sel.begin(), sel.end(), j) != sel.end()) continue;
            if (atoms.col(j).squaredNorm() <= 1e-20) continue;
            const double corr = std::abs(atoms.col(j).dot(r));
            if (corr > best) {
                best = corr;
                best_k = j;
            }
        }
        if (best_k < 0) break;
        sel.push_back(best_k);
        Eigen::MatrixXd sub(atoms.rows(), static_cast<Eigen::Index>(sel.size()));
        for (std::size_t i = 0; i < sel.size(); ++i) sub.col(static_cast<Eigen::Index>(i)) = atoms.col(sel[i]);
        Eigen::VectorXd c = sub.colPivHouseholderQr().solve(x);
        r = x - sub * c;
        coef.setZero();
        for (std::size_t i = 0; i < sel.size(); ++i) coef[sel[i]] = c[static_cast<Eigen::Index>(i)];
    }
    return coef;
}

// Flips sign so the first non-negligible coordinate is positive.
void sign_normalize(Eigen::Ref<Eigen::VectorXd> atom, Eigen::Ref<Eigen::RowVectorXd> coefs) {
    for (Eigen::Index i = 0; i < atom.size(); ++i) {
        if (std::abs(atom[i]) > 1e-12) {
            if (atom[i] < 0.0) {
                atom = -atom;
                coefs = -coefs;
            }
            return;
        }
    }
}

}  // namespace

ObjectiveBreakdown objective(const GlobalDictionary& dict, const Eigen::MatrixXd& codes,
                             const Eigen::MatrixXd& X, const std::vector<int>& labels,
                             const Hyperparams& hp) {
    check_problem_dims(dict, codes, X, labels);
    GradientWorkspace ws;
    ws.prepare(dict, codes, X);
    return objective_impl(dict, codes, X, labels, hp, ws.residual, ws.gram);
}

Eigen::MatrixXd grad_dictionary(int p, const GlobalDictionary& dict,
                                const Eigen::MatrixXd& codes, const Eigen::MatrixXd& X,
                                const std::vector<int>& labels, const Hyperparams& hp,
                                const GradientWorkspace& ws) {
    check_problem_dims(dict, codes, X, labels);
    if (p < 0 || p >= dict.num_classes()) throw LabelOutOfRange("class index outside 0..C-1");
    if (ws.residual.rows() != X.rows() || ws.residual.cols() != X.cols() ||
        ws.gram.rows() != dict.total_atoms()) {
        throw DimensionMismatch("workspace not prepared for these inputs");
    }
    return grad_impl(p, dict, codes, X, labels, hp, ws.residual, ws.gram);
}

Eigen::MatrixXd grad_dictionary(int p, const GlobalDictionary& dict,
                                const Eigen::MatrixXd& codes, const Eigen::MatrixXd& X,
                                const std::vector<int>& labels, const Hyperparams& hp) {
    GradientWorkspace ws;
    ws.prepare(dict, codes, X);
    return grad_dictionary(p, dict, codes, X, labels, hp, ws);
}

GlobalDictionary prox_normalize(GlobalDictionary dict) {
    Eigen::MatrixXd& atoms = dict.atoms();
    for (Eigen::Index k = 0; k < atoms.cols(); ++k) {
        const double norm = atoms.col(k).norm();
        if (norm > 1.0) atoms.col(k) /= norm;
    }
    return dict;
}

GlobalDictionary ksvd_init(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                           int kprime, int iters, std::uint64_t seed) {
    if (kprime < 1) throw InvalidParam("kprime must be >= 1");
    if (X.cols() < 1) throw InsufficientSamples("no samples");
    if (static_cast<Eigen::Index>(labels.size()) != X.cols()) {
        throw DimensionMismatch("label count mismatch");
    }
    const int num_classes = 1 + *std::max_element(labels.begin(), labels.end());
    if (*std::min_element(labels.begin(), labels.end()) < 0) {
        throw LabelOutOfRange("negative label");
    }

    std::vector<std::vector<Eigen::Index>> class_members(static_cast<std::size_t>(num_classes));
    for (Eigen::Index n = 0; n < X.cols(); ++n) {
        class_members[static_cast<std::size_t>(labels[static_cast<std::size_t>(n)])].push_back(n);
    }
    for (int c = 0; c < num_classes; ++c) {
        if (static_cast<int>(class_members[static_cast<std::size_t>(c)].size()) < kprime) {
            throw InsufficientSamples("class " + std::to_string(c) + " has fewer than K' samples");
        }
    }

    std::vector<Eigen::MatrixXd> dicts;
    dicts.reserve(static_cast<std::size_t>(num_classes));
    const int budget = std::min(3, kprime);

    for (int c = 0; c < num_classes; ++c) {
        const auto& members = class_members[static_cast<std::size_t>(c)];
        const auto nc = static_cast<Eigen::Index>(members.size());
        Eigen::MatrixXd Xc(X.rows(), nc);
        for (Eigen::Index i = 0; i < nc; ++i) Xc.col(i) = X.col(members[static_cast<std::size_t>(i)]);

        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c), 0x6b737664ULL));
        std::vector<Eigen::Index> pool(static_cast<std::size_t>(nc));
        std::iota(pool.begin(), pool.end(), 0);
        rng.shuffle(pool);

        Eigen::MatrixXd atoms(X.rows(), kprime);
        for (int k = 0; k < kprime; ++k) {
            Eigen::VectorXd a = Xc.col(pool[static_cast<std::size_t>(k)]);
            const double norm = a.norm();
            if (norm > 1e-12) a /= norm;
            atoms.col(k) = a;
        }
        Eigen::MatrixXd coefs = Eigen::MatrixXd::Zero(kprime, nc);

        for (int it = 0; it < iters; ++it) {
            for (Eigen::Index n = 0; n < nc; ++n) coefs.col(n) = omp_code(Xc.col(n), atoms, budget);

            for (int k = 0; k < kprime; ++k) {
                std::vector<Eigen::Index> users;
                for (Eigen::Index n = 0; n < nc; ++n) {
                    if (coefs(k, n) != 0.0) users.push_back(n);
                }
                if (users.empty()) {
                    // Dead atom: adopt the worst-reconstructed sample.
                    double worst = -1.0;
                    Eigen::Index worst_n = 0;
                    for (Eigen::Index n = 0; n < nc; ++n) {
                        const double err = (Xc.col(n) - atoms * coefs.col(n)).squaredNorm();
                        if (err > worst) {
                            worst = err;
                            worst_n = n;
                        }
                    }
                    Eigen::VectorXd a = Xc.col(worst_n);
                    const double norm = a.norm();
                    if (norm > 1e-12) a /= norm;
                    atoms.col(k) = a;
                    continue;
                }
                const auto nu = static_cast<Eigen::Index>(users.size());
                Eigen::MatrixXd err(X.rows(), nu);
                Eigen::RowVectorXd krow(nu);
                for (Eigen::Index i = 0; i < nu; ++i) {
                    const Eigen::Index n = users[static_cast<std::size_t>(i)];
                    err.col(i) = Xc.col(n) - atoms * coefs.col(n) + atoms.col(k) * coefs(k, n);
                    krow[i] = coefs(k, n);
                }
                // Rank-1 refinement by power iteration, seeded from the
                // current atom for determinism.
                Eigen::VectorXd u = atoms.col(k);
                if (u.norm() <= 1e-12) u = err.col(0);
                Eigen::VectorXd v;
                double sigma = 0.0;
                for (int pit = 0; pit < 25; ++pit) {
                    v = err.transpose() * u;
                    sigma = v.norm();
                    if (sigma <= 1e-15) break;
                    u = err * (v / sigma);
                    const double un = u.norm();
                    if (un <= 1e-15) {
                        sigma = 0.0;
                        break;
                    }
                    u /= un;
                }
                if (sigma <= 1e-15) continue;
                v = err.transpose() * u;
                atoms.col(k) = u;
                krow = v.transpose();
                sign_normalize(atoms.col(k), krow);
                for (Eigen::Index i = 0; i < nu; ++i) coefs(k, users[static_cast<std::size_t>(i)]) = krow[i];
            }
        }
        for (int k = 0; k < kprime; ++k) {
            Eigen::RowVectorXd row = coefs.row(k);
            sign_normalize(atoms.col(k), row);
        }
        dicts.push_back(std::move(atoms));
    }
    return GlobalDictionary::from_class_dicts(dicts);
}

FitResult fit(const Eigen::MatrixXd& X, const std::vector<int>& labels, const Hyperparams& hp,
              const std::optional<GlobalDictionary>& init, std::uint64_t seed, int threads) {
    hp.validate();
    if (X.cols() < 1) throw InsufficientSamples("need at least one sample");
    if (static_cast<Eigen::Index>(labels.size()) != X.cols()) {
        throw DimensionMismatch("label count mismatch");
    }
    const int num_classes = 1 + *std::max_element(labels.begin(), labels.end());
    for (int c = 0; c < num_classes; ++c) {
        if (std::find(labels.begin(), labels.end(), c) == labels.end()) {
            throw InsufficientSamples("class " + std::to_string(c) + " has no samples");
        }
    }

    GlobalDictionary dict = init ? *init : ksvd_init(X, labels, hp.kprime, 10, seed);
    if (dict.feature_dim() != X.rows() || dict.num_classes() != num_classes) {
        throw DimensionMismatch("initial dictionary does not match the data");
    }
    dict = prox_normalize(std::move(dict));

    const Eigen::Index num_atoms = dict.total_atoms();
    const Eigen::Index n_samples = X.cols();
    Eigen::MatrixXd codes = Eigen::MatrixXd::Zero(num_atoms, n_samples);
    std::vector<double> kkts(static_cast<std::size_t>(n_samples), 0.0);

    CodingParams cp;
    cp.lambda = hp.lambda;
    cp.gamma1 = hp.gamma1;
    cp.tol = hp.coding_tol;
    cp.max_iter = hp.coding_max_iter;

    FitResult result;
    result.report.trace.reserve(static_cast<std::size_t>(hp.iterations));
    GradientWorkspace ws;
    Eigen::MatrixXd grad(X.rows(), num_atoms);

    for (int t = 0; t < hp.iterations; ++t) {
        // Sparse coding at fixed dictionaries, warm-started from the previous
        // codes so the coordinate descent only ever lowers the objective.
        BatchCoder coder(dict);
        parallel_for(static_cast<std::size_t>(n_samples), threads, [&](std::size_t n) {
            const auto col = static_cast<Eigen::Index>(n);
            const Eigen::VectorXd warm = codes.col(col);
            SparseCode code = coder.solve(X.col(col), labels[n], cp, &warm);
            codes.col(col) = code.coeffs;
            kkts[n] = code.kkt;
        });

        ws.prepare(dict, codes, X);
        const ObjectiveBreakdown pre =
            objective_impl(dict, codes, X, labels, hp, ws.residual, ws.gram);
        if (!std::isfinite(pre.total)) {
            throw NonFiniteObjective("objective became non-finite at iteration " +
                                     std::to_string(t));
        }

        for (int p = 0; p < num_classes; ++p) {
            grad.middleCols(static_cast<Eigen::Index>(p) * dict.atoms_per_class(),
                            dict.atoms_per_class()) =
                grad_impl(p, dict, codes, X, labels, hp, ws.residual, ws.gram);
        }

        FitIteration record;
        record.after_coding = pre;
        record.after_step = pre;
        double eta = hp.eta0;
        for (int bt = 0; bt < hp.max_backtracks; ++bt) {
            GlobalDictionary trial =
                prox_normalize(GlobalDictionary(dict.atoms() - eta * grad, num_classes));
            GradientWorkspace trial_ws;
            trial_ws.prepare(trial, codes, X);
            const ObjectiveBreakdown after =
                objective_impl(trial, codes, X, labels, hp, trial_ws.residual, trial_ws.gram);
            if (std::isfinite(after.total) && after.total < pre.total) {
                dict = std::move(trial);
                record.after_step = after;
                record.step_accepted = true;
                record.backtracks = bt;
                break;
            }
            eta *= hp.alpha;
        }
        if (!record.step_accepted) record.backtracks = hp.max_backtracks;
        result.report.trace.push_back(record);
    }

    double kkt_max = 0.0, kkt_sum = 0.0;
    for (double k : kkts) {
        kkt_max = std::max(kkt_max, k);
        kkt_sum += k;
    }
    result.report.final_kkt_max = kkt_max;
    result.report.final_kkt_mean = n_samples > 0 ? kkt_sum / static_cast<double>(n_samples) : 0.0;
    result.dictionary = std::move(dict);
    result.codes = std::move(codes);
    return result;
}

Eigen::MatrixXd dictionary_similarity(const GlobalDictionary& dict) {
    const int num_classes = dict.num_classes();
    const Eigen::Index block = dict.atoms_per_class();
    Eigen::MatrixXd gram = dict.atoms().transpose() * dict.atoms();
    Eigen::MatrixXd sim(num_classes, num_classes);
    for (int c = 0; c < num_classes; ++c) {
        for (int d = c; d < num_classes; ++d) {
            const double v = gram
                                 .block(static_cast<Eigen::Index>(c) * block,
                                        static_cast<Eigen::Index>(d) * block, block, block)
                                 .norm();
            sim(c, d) = v;
            sim(d, c) = v;
        }
    }
    return sim;
}

}  // namespace audiodict
