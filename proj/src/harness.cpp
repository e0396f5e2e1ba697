#include "audiodict/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "audiodict/parallel.hpp"
#include "audiodict/rng.hpp"
#include "audiodict/sparse_coding.hpp"

namespace audiodict {

namespace {

using nlohmann::json;

std::vector<std::vector<int>> group_by_class(const std::vector<int>& labels) {
    int num_classes = 0;
    for (int v : labels) {
        if (v < 0) throw LabelOutOfRange("negative label");
        num_classes = std::max(num_classes, v + 1);
    }
    std::vector<std::vector<int>> per_class(static_cast<std::size_t>(num_classes));
    for (std::size_t n = 0; n < labels.size(); ++n) {
        per_class[static_cast<std::size_t>(labels[n])].push_back(static_cast<int>(n));
    }
    return per_class;
}

// Per class: shuffles and sends round(fraction * count) indices to the first
// part, clamped so both parts stay nonempty.
std::pair<std::vector<int>, std::vector<int>> stratified_partition(
    const std::vector<std::vector<int>>& per_class, double fraction, Rng& rng) {
    std::vector<int> first, second;
    for (const auto& members : per_class) {
        const auto count = static_cast<long>(members.size());
        if (count < 2) throw ClassTooSmall("every class needs at least 2 samples");
        std::vector<int> idx = members;
        rng.shuffle(idx);
        long take = std::lround(fraction * static_cast<double>(count));
        take = std::clamp(take, 1L, count - 1);
        first.insert(first.end(), idx.begin(), idx.begin() + take);
        second.insert(second.end(), idx.begin() + take, idx.end());
    }
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    return {std::move(first), std::move(second)};
}

Eigen::MatrixXd gather_cols(const Eigen::MatrixXd& X, const std::vector<int>& idx) {
    Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out.col(static_cast<Eigen::Index>(i)) = X.col(idx[i]);
    }
    return out;
}

std::vector<int> gather(const std::vector<int>& v, const std::vector<int>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(v[static_cast<std::size_t>(i)]);
    return out;
}

double accuracy_of(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size() || pred.empty()) throw DimensionMismatch("prediction size");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

template <typename T>
std::vector<T> sorted_copy(std::vector<T> v) {
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

std::vector<Split> make_splits(const std::vector<int>& labels, const SplitProtocol& protocol) {
    if (protocol.num_splits < 1) throw InvalidParam("num_splits must be >= 1");
    if (protocol.train_fraction <= 0.0 || protocol.train_fraction >= 1.0) {
        throw InvalidParam("train_fraction must lie in (0, 1)");
    }
    const auto per_class = group_by_class(labels);
    std::vector<Split> splits;
    splits.reserve(static_cast<std::size_t>(protocol.num_splits));
    for (int s = 0; s < protocol.num_splits; ++s) {
        Rng rng(derive_seed(protocol.seed, static_cast<std::uint64_t>(s), 0x73706c74ULL));
        auto [train, test] = stratified_partition(per_class, protocol.train_fraction, rng);
        splits.push_back({std::move(train), std::move(test)});
    }
    return splits;
}

std::vector<double> log_spaced(double lo, double hi, int n) {
    if (n < 1 || lo <= 0.0 || hi <= lo) throw InvalidParam("bad log-spaced range");
    std::vector<double> out(static_cast<std::size_t>(n));
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    const double step = (std::log10(hi) - std::log10(lo)) / (n - 1);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::pow(10.0, std::log10(lo) + i * step);
    return out;
}

GridChoice grid_search(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                       const SearchGrid& grid, const Hyperparams& base_hp, int resamples,
                       std::uint64_t seed, int threads, double svm_tol) {
    if (grid.lambdas.empty() || grid.gamma1s.empty() || grid.gamma2s.empty() ||
        grid.kprimes.empty() || grid.c_svms.empty()) {
        throw InvalidParam("empty search grid");
    }
    if (resamples < 1) throw InvalidParam("resamples must be >= 1");

    const auto kprimes = sorted_copy(grid.kprimes);
    const auto lambdas = sorted_copy(grid.lambdas);
    const auto gamma1s = sorted_copy(grid.gamma1s);
    const auto gamma2s = sorted_copy(grid.gamma2s);
    const auto c_svms = sorted_copy(grid.c_svms);

    struct Config {
        int kprime;
        double lambda, gamma1, gamma2;
    };
    std::vector<Config> configs;
    for (int kp : kprimes)
        for (double l : lambdas)
            for (double g1 : gamma1s)
                for (double g2 : gamma2s) configs.push_back({kp, l, g1, g2});

    const auto per_class = group_by_class(labels);
    std::vector<std::pair<std::vector<int>, std::vector<int>>> halves;
    halves.reserve(static_cast<std::size_t>(resamples));
    for (int r = 0; r < resamples; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r), 0x7265736dULL));
        halves.push_back(stratified_partition(per_class, 0.5, rng));
    }

    const std::size_t n_tasks = configs.size() * static_cast<std::size_t>(resamples);
    // scores[config][c_svm index] accumulated over resamples
    std::vector<std::vector<double>> task_scores(n_tasks);

    parallel_for(n_tasks, threads, [&](std::size_t task) {
        const std::size_t ci = task / static_cast<std::size_t>(resamples);
        const int r = static_cast<int>(task % static_cast<std::size_t>(resamples));
        const Config& cfg = configs[ci];

        std::vector<double>& scores = task_scores[task];
        scores.assign(c_svms.size(), 0.0);

        const auto& [learn_idx, val_idx] = halves[static_cast<std::size_t>(r)];
        const Eigen::MatrixXd Xl = gather_cols(X, learn_idx);
        const Eigen::MatrixXd Xv = gather_cols(X, val_idx);
        const std::vector<int> yl = gather(labels, learn_idx);
        const std::vector<int> yv = gather(labels, val_idx);

        Hyperparams hp = base_hp;
        hp.kprime = cfg.kprime;
        hp.lambda = cfg.lambda;
        hp.gamma1 = cfg.gamma1;
        hp.gamma2 = cfg.gamma2;
        try {
            FitResult fitted = fit(Xl, yl, hp, std::nullopt,
                                   derive_seed(seed, 0x666974ULL, ci, static_cast<std::uint64_t>(r)),
                                   1);
            CodingParams cp;
            cp.lambda = hp.lambda;
            cp.tol = hp.coding_tol;
            cp.max_iter = hp.coding_max_iter;
            const Eigen::MatrixXd codes_l = lasso_code_matrix(Xl, fitted.dictionary, cp, 1);
            const Eigen::MatrixXd codes_v = lasso_code_matrix(Xv, fitted.dictionary, cp, 1);
            KernelSpec linear;
            for (std::size_t k = 0; k < c_svms.size(); ++k) {
                OvaSvmModel svm = ova_train(codes_l, yl, c_svms[k], linear, svm_tol);
                scores[k] = accuracy_of(ova_predict_batch(svm, codes_v), yv);
            }
        } catch (const std::exception& e) {
            std::cerr << "grid config (K'=" << cfg.kprime << ", lambda=" << cfg.lambda
                      << ", gamma1=" << cfg.gamma1 << ", gamma2=" << cfg.gamma2
                      << ") resample " << r << " failed: " << e.what() << "\n";
        }
    });

    GridChoice best;
    best.validation_accuracy = -1.0;
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
        for (std::size_t k = 0; k < c_svms.size(); ++k) {
            double mean = 0.0;
            for (int r = 0; r < resamples; ++r) {
                mean += task_scores[ci * static_cast<std::size_t>(resamples) +
                                    static_cast<std::size_t>(r)][k];
            }
            mean /= static_cast<double>(resamples);
            if (mean > best.validation_accuracy) {
                best.validation_accuracy = mean;
                best.hp = base_hp;
                best.hp.kprime = configs[ci].kprime;
                best.hp.lambda = configs[ci].lambda;
                best.hp.gamma1 = configs[ci].gamma1;
                best.hp.gamma2 = configs[ci].gamma2;
                best.c_svm = c_svms[k];
            }
        }
    }
    return best;
}

GridChoice grid_search_csvm(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                            const std::vector<double>& c_svms, const KernelSpec& kernel,
                            int resamples, std::uint64_t seed, int threads, double svm_tol) {
    if (c_svms.empty()) throw InvalidParam("empty C_svm grid");
    if (resamples < 1) throw InvalidParam("resamples must be >= 1");
    const auto cs = sorted_copy(c_svms);
    const auto per_class = group_by_class(labels);

    std::vector<std::vector<double>> scores(static_cast<std::size_t>(resamples));
    parallel_for(static_cast<std::size_t>(resamples), threads, [&](std::size_t r) {
        Rng rng(derive_seed(seed, r, 0x7265736dULL));
        auto [learn_idx, val_idx] = stratified_partition(per_class, 0.5, rng);
        const Eigen::MatrixXd Xl_raw = gather_cols(X, learn_idx);
        const Eigen::MatrixXd Xv_raw = gather_cols(X, val_idx);
        const std::vector<int> yl = gather(labels, learn_idx);
        const std::vector<int> yv = gather(labels, val_idx);
        auto [mean, dev] = standardize_stats(Xl_raw);
        const Eigen::MatrixXd Xl = apply_standardization(Xl_raw, mean, dev);
        const Eigen::MatrixXd Xv = apply_standardization(Xv_raw, mean, dev);

        scores[r].assign(cs.size(), 0.0);
        for (std::size_t k = 0; k < cs.size(); ++k) {
            try {
                OvaSvmModel svm = ova_train(Xl, yl, cs[k], kernel, svm_tol);
                scores[r][k] = accuracy_of(ova_predict_batch(svm, Xv), yv);
            } catch (const std::exception& e) {
                std::cerr << "C_svm=" << cs[k] << " resample " << r << " failed: " << e.what()
                          << "\n";
            }
        }
    });

    GridChoice best;
    best.validation_accuracy = -1.0;
    for (std::size_t k = 0; k < cs.size(); ++k) {
        double mean = 0.0;
        for (int r = 0; r < resamples; ++r) mean += scores[static_cast<std::size_t>(r)][k];
        mean /= static_cast<double>(resamples);
        if (mean > best.validation_accuracy) {
            best.validation_accuracy = mean;
            best.c_svm = cs[k];
        }
    }
    return best;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> standardize_stats(const Eigen::MatrixXd& X) {
    Eigen::VectorXd mean = X.rowwise().mean();
    Eigen::VectorXd var = (X.colwise() - mean).array().square().matrix().rowwise().mean();
    Eigen::VectorXd dev = var.array().sqrt();
    for (Eigen::Index i = 0; i < dev.size(); ++i) {
        if (dev[i] <= 0.0) dev[i] = 1.0;  // constant dimension
    }
    return {std::move(mean), std::move(dev)};
}

Eigen::MatrixXd apply_standardization(const Eigen::MatrixXd& X, const Eigen::VectorXd& mean,
                                      const Eigen::VectorXd& dev) {
    if (X.rows() != mean.size() || X.rows() != dev.size()) {
        throw DimensionMismatch("standardization stats do not match the features");
    }
    return (X.colwise() - mean).array().colwise() / dev.array();
}

Eigen::MatrixXd normalize_columns(Eigen::MatrixXd X) {
    for (Eigen::Index n = 0; n < X.cols(); ++n) {
        const double norm = X.col(n).norm();
        if (norm > 0.0) X.col(n) /= norm;
    }
    return X;
}

ExperimentReport run_experiment(const FeatureSet& data, const ExperimentConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& labels = data.labels;
    if (static_cast<Eigen::Index>(labels.size()) != data.features.cols()) {
        throw DimensionMismatch("label count mismatch");
    }
    const auto per_class = group_by_class(labels);
    const int num_classes = static_cast<int>(per_class.size());

    SplitProtocol protocol = config.protocol;
    protocol.seed = config.seed;
    const auto splits = make_splits(labels, protocol);

    Hyperparams hp_grid = config.base_hp;
    if (config.grid_iterations > 0) hp_grid.iterations = config.grid_iterations;

    // Dictionary learning consumes unit-norm feature vectors; this keeps the
    // regularization grids and the step size on a data-independent scale.
    Eigen::MatrixXd Xn;
    if (config.method == Method::dictionary_learning) Xn = normalize_columns(data.features);

    ExperimentReport report;
    report.method = to_string(config.method);
    report.feature = to_string(data.kind);
    report.kernel = config.method == Method::baseline ? config.baseline_kernel.name() : "linear";
    report.seed = config.seed;
    report.protocol = protocol;
    report.class_names = data.class_names;
    report.confusion = Eigen::MatrixXi::Zero(num_classes, num_classes);

    for (std::size_t s = 0; s < splits.size(); ++s) {
        const auto& split = splits[s];
        const std::vector<int> y_train = gather(labels, split.train);
        const std::vector<int> y_test = gather(labels, split.test);
        const std::uint64_t gs_seed = derive_seed(config.seed, s, 0x67726964ULL);
        const std::uint64_t fit_seed = derive_seed(config.seed, s, 0x66697421ULL);

        SplitOutcome outcome;
        std::vector<int> preds;
        if (config.method == Method::dictionary_learning) {
            const Eigen::MatrixXd X_train = gather_cols(Xn, split.train);
            const Eigen::MatrixXd X_test = gather_cols(Xn, split.test);
            GridChoice choice =
                grid_search(X_train, y_train, config.grid, hp_grid,
                            protocol.validation_resamples, gs_seed, config.threads,
                            config.svm_tol);
            Hyperparams hp = choice.hp;
            hp.iterations = config.base_hp.iterations;
            FitResult fitted = fit(X_train, y_train, hp, std::nullopt, fit_seed, config.threads);
            CodingParams cp;
            cp.lambda = hp.lambda;
            cp.tol = hp.coding_tol;
            cp.max_iter = hp.coding_max_iter;
            const Eigen::MatrixXd codes_train =
                lasso_code_matrix(X_train, fitted.dictionary, cp, config.threads);
            const Eigen::MatrixXd codes_test =
                lasso_code_matrix(X_test, fitted.dictionary, cp, config.threads);
            KernelSpec linear;
            OvaSvmModel svm = ova_train(codes_train, y_train, choice.c_svm, linear, config.svm_tol);
            preds = ova_predict_batch(svm, codes_test);
            outcome.hp = hp;
            outcome.c_svm = choice.c_svm;
            outcome.validation_accuracy = choice.validation_accuracy;
        } else {
            const Eigen::MatrixXd X_train = gather_cols(data.features, split.train);
            const Eigen::MatrixXd X_test = gather_cols(data.features, split.test);
            GridChoice choice =
                grid_search_csvm(X_train, y_train, config.grid.c_svms, config.baseline_kernel,
                                 protocol.validation_resamples, gs_seed, config.threads,
                                 config.svm_tol);
            auto [mean, dev] = standardize_stats(X_train);
            OvaSvmModel svm = ova_train(apply_standardization(X_train, mean, dev), y_train,
                                        choice.c_svm, config.baseline_kernel, config.svm_tol);
            preds = ova_predict_batch(svm, apply_standardization(X_test, mean, dev));
            outcome.hp = config.base_hp;
            outcome.c_svm = choice.c_svm;
            outcome.validation_accuracy = choice.validation_accuracy;
        }

        outcome.accuracy = accuracy_of(preds, y_test);
        for (std::size_t i = 0; i < preds.size(); ++i) {
            report.confusion(y_test[i], preds[i]) += 1;
        }
        report.per_split_accuracy.push_back(outcome.accuracy);
        report.splits.push_back(outcome);
    }

    double mean = 0.0;
    for (double a : report.per_split_accuracy) mean += a;
    mean /= static_cast<double>(report.per_split_accuracy.size());
    double var = 0.0;
    for (double a : report.per_split_accuracy) var += (a - mean) * (a - mean);
    report.mean_accuracy = mean;
    report.std_accuracy = report.per_split_accuracy.size() > 1
                              ? std::sqrt(var / (static_cast<double>(report.per_split_accuracy.size()) - 1.0))
                              : 0.0;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

ModelArchive train_model(const FeatureSet& data, const ExperimentConfig& config,
                         GridChoice* chosen) {
    Hyperparams hp_grid = config.base_hp;
    if (config.grid_iterations > 0) hp_grid.iterations = config.grid_iterations;

    ModelArchive model;
    model.method = config.method;
    model.feature_kind = data.kind;
    model.class_names = data.class_names;

    if (config.method == Method::dictionary_learning) {
        const Eigen::MatrixXd Xn = normalize_columns(data.features);
        GridChoice choice = grid_search(Xn, data.labels, config.grid, hp_grid,
                                        config.protocol.validation_resamples,
                                        derive_seed(config.seed, 0, 0x67726964ULL),
                                        config.threads, config.svm_tol);
        Hyperparams hp = choice.hp;
        hp.iterations = config.base_hp.iterations;
        FitResult fitted = fit(Xn, data.labels, hp, std::nullopt,
                               derive_seed(config.seed, 0, 0x66697421ULL), config.threads);
        CodingParams cp;
        cp.lambda = hp.lambda;
        cp.tol = hp.coding_tol;
        cp.max_iter = hp.coding_max_iter;
        const Eigen::MatrixXd codes = lasso_code_matrix(Xn, fitted.dictionary, cp, config.threads);
        KernelSpec linear;
        model.hp = hp;
        model.c_svm = choice.c_svm;
        model.dictionary = std::move(fitted.dictionary);
        model.svm = ova_train(codes, data.labels, choice.c_svm, linear, config.svm_tol);
        if (chosen) *chosen = choice;
    } else {
        GridChoice choice = grid_search_csvm(data.features, data.labels, config.grid.c_svms,
                                             config.baseline_kernel,
                                             config.protocol.validation_resamples,
                                             derive_seed(config.seed, 0, 0x67726964ULL),
                                             config.threads, config.svm_tol);
        auto [mean, dev] = standardize_stats(data.features);
        model.hp = config.base_hp;
        model.c_svm = choice.c_svm;
        model.standardized = true;
        model.feat_mean = mean;
        model.feat_std = dev;
        model.svm = ova_train(apply_standardization(data.features, mean, dev), data.labels,
                              choice.c_svm, config.baseline_kernel, config.svm_tol);
        if (chosen) *chosen = choice;
    }
    return model;
}

std::string report_to_json(const ExperimentReport& report, bool include_timing) {
    json j;
    j["method"] = report.method;
    j["feature"] = report.feature;
    j["kernel"] = report.kernel;
    j["seed"] = report.seed;
    j["protocol"] = {{"num_splits", report.protocol.num_splits},
                     {"train_fraction", report.protocol.train_fraction},
                     {"validation_resamples", report.protocol.validation_resamples}};
    j["class_names"] = report.class_names;
    j["per_split_accuracy"] = report.per_split_accuracy;
    j["mean_accuracy"] = report.mean_accuracy;
    j["std_accuracy"] = report.std_accuracy;
    json splits = json::array();
    for (const auto& s : report.splits) {
        splits.push_back({{"accuracy", s.accuracy},
                          {"validation_accuracy", s.validation_accuracy},
                          {"lambda", s.hp.lambda},
                          {"gamma1", s.hp.gamma1},
                          {"gamma2", s.hp.gamma2},
                          {"kprime", s.hp.kprime},
                          {"c_svm", s.c_svm}});
    }
    j["splits"] = splits;
    json confusion = json::array();
    for (Eigen::Index r = 0; r < report.confusion.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < report.confusion.cols(); ++c) {
            row.push_back(report.confusion(r, c));
        }
        confusion.push_back(row);
    }
    j["confusion_matrix"] = confusion;
    if (include_timing) j["wall_clock_seconds"] = report.wall_seconds;
    return j.dump(2);
}

void write_report(const std::string& path, const ExperimentReport& report) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << report_to_json(report) << '\n';
    if (!f) throw IoError("write failed: " + path);
}

void write_fit_report_csv(const std::string& path, const FitReport& report) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "iteration,j1,j2,j3,j4,j5,total,backtracks\n";
    char buf[256];
    for (std::size_t t = 0; t < report.trace.size(); ++t) {
        const auto& o = report.trace[t].after_step;
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", t, o.j1,
                      o.j2, o.j3, o.j4, o.j5, o.total, report.trace[t].backtracks);
        f << buf;
    }
    if (!f) throw IoError("write failed: " + path);
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path);
    std::map<std::string, std::string> out;
    std::string line;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return std::string();
        const auto b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    };
    while (std::getline(f, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) out[key] = value;
    }
    return out;
}

}  // namespace audiodict
