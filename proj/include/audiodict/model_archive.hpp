#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "audiodict/dictionary.hpp"
#include "audiodict/features.hpp"
#include "audiodict/svm.hpp"

namespace audiodict {

enum class Method { dictionary_learning, baseline };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

// Self-describing, versioned bundle of everything needed to reproduce
// predictions: feature spec, dictionaries, the one-vs-all SVM, and (for
// baselines) the standardization statistics.
struct ModelArchive {
    std::uint32_t version = 1;
    Method method = Method::dictionary_learning;
    FeatureKind feature_kind = FeatureKind::spectrogram_pool;
    Hyperparams hp;
    double c_svm = 1.0;
    GlobalDictionary dictionary;  // unused for baseline models
    OvaSvmModel svm;
    bool standardized = false;
    Eigen::VectorXd feat_mean;
    Eigen::VectorXd feat_std;
    std::vector<std::string> class_names;
};

void save_model(const ModelArchive& model, const std::string& path);
ModelArchive load_model(const std::string& path);

// Maps raw feature columns into classifier inputs: Lasso codes over the
// learned dictionary, or standardized features for baselines.
Eigen::MatrixXd encode_features(const ModelArchive& model, const Eigen::MatrixXd& X,
                                int threads = 1);

// C x N matrix of one-vs-all decision values.
Eigen::MatrixXd decision_matrix(const ModelArchive& model, const Eigen::MatrixXd& X,
                                int threads = 1);

std::vector<int> predict(const ModelArchive& model, const Eigen::MatrixXd& X, int threads = 1);

// Writes dictionary_similarity(model.dictionary) as CSV with class-name
// header row and column.
void export_similarity(const ModelArchive& model, const std::string& path);

}  // namespace audiodict
