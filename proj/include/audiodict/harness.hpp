#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "audiodict/dataset.hpp"
#include "audiodict/dictionary.hpp"
#include "audiodict/model_archive.hpp"
#include "audiodict/svm.hpp"

namespace audiodict {

struct SplitProtocol {
    int num_splits = 10;
    double train_fraction = 2.0 / 3.0;
    int validation_resamples = 2;
    std::uint64_t seed = 0;

    // 20 splits at 80% train, 5 model-selection resamples.
    static SplitProtocol casr(std::uint64_t seed = 0) { return {20, 0.80, 5, seed}; }
    // 10 splits at 2/3 train, 2 model-selection resamples.
    static SplitProtocol chord(std::uint64_t seed = 0) { return {10, 2.0 / 3.0, 2, seed}; }
};

struct Split {
    std::vector<int> train;
    std::vector<int> test;
};

// Stratified splits: per class, round(train_fraction * count) samples go to
// train (at least 1 on each side). Deterministic per protocol seed.
std::vector<Split> make_splits(const std::vector<int>& labels, const SplitProtocol& protocol);

std::vector<double> log_spaced(double lo, double hi, int n);

struct SearchGrid {
    std::vector<double> lambdas{0.1, 0.2, 0.3};
    std::vector<double> gamma1s{0.1, 0.2, 0.3};
    std::vector<double> gamma2s{0.1, 0.2, 0.3};
    std::vector<int> kprimes{10, 20, 30};
    std::vector<double> c_svms = log_spaced(0.001, 100.0, 10);
};

struct GridChoice {
    Hyperparams hp;
    double c_svm = 1.0;
    double validation_accuracy = 0.0;
};

// Full search over (K', lambda, gamma1, gamma2, C_svm) maximizing mean
// validation accuracy over stratified half/half resamples of the given
// training data. Ties break toward the smaller value in that field order.
// Configurations that fail to train score 0 and are reported on stderr.
GridChoice grid_search(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                       const SearchGrid& grid, const Hyperparams& base_hp, int resamples,
                       std::uint64_t seed, int threads = 0, double svm_tol = 1e-3);

// C_svm-only search for baseline features (standardized per resample).
GridChoice grid_search_csvm(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                            const std::vector<double>& c_svms, const KernelSpec& kernel,
                            int resamples, std::uint64_t seed, int threads = 0,
                            double svm_tol = 1e-3);

struct ExperimentConfig {
    Method method = Method::dictionary_learning;
    FeatureKind feature_kind = FeatureKind::spectrogram_pool;
    KernelSpec baseline_kernel;
    SplitProtocol protocol = SplitProtocol::chord();
    SearchGrid grid;
    Hyperparams base_hp;      // iterations/eta0/alpha/tolerances for final fits
    int grid_iterations = 0;  // T during grid search; 0 means base_hp.iterations
    std::uint64_t seed = 0;
    int threads = 0;
    double svm_tol = 1e-3;
};

struct SplitOutcome {
    double accuracy = 0.0;
    Hyperparams hp;
    double c_svm = 1.0;
    double validation_accuracy = 0.0;
};

struct ExperimentReport {
    std::string method;
    std::string feature;
    std::string kernel;
    std::uint64_t seed = 0;
    SplitProtocol protocol;
    std::vector<std::string> class_names;
    std::vector<SplitOutcome> splits;
    std::vector<double> per_split_accuracy;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    Eigen::MatrixXi confusion;  // rows: true class, cols: predicted, all splits
    double wall_seconds = 0.0;
};

// Full protocol: per split, model selection on the training part only, final
// training, evaluation on the held-out part.
ExperimentReport run_experiment(const FeatureSet& data, const ExperimentConfig& config);

// Grid search plus final fit on the entire feature set; used by the train CLI.
ModelArchive train_model(const FeatureSet& data, const ExperimentConfig& config,
                         GridChoice* chosen = nullptr);

std::string report_to_json(const ExperimentReport& report, bool include_timing = true);
void write_report(const std::string& path, const ExperimentReport& report);

void write_fit_report_csv(const std::string& path, const FitReport& report);

// Per-dimension train statistics; zero-variance dimensions get unit scale.
std::pair<Eigen::VectorXd, Eigen::VectorXd> standardize_stats(const Eigen::MatrixXd& X);
Eigen::MatrixXd apply_standardization(const Eigen::MatrixXd& X, const Eigen::VectorXd& mean,
                                      const Eigen::VectorXd& std);

// Per-sample unit l2 normalization used on dictionary-learning inputs.
Eigen::MatrixXd normalize_columns(Eigen::MatrixXd X);

// Flat key = value configuration file ('#' starts a comment).
std::map<std::string, std::string> read_config_file(const std::string& path);

}  // namespace audiodict
