#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "audiodict/chordgen.hpp"
#include "audiodict/features.hpp"
#include "audiodict/signal.hpp"

namespace audiodict {

struct LabeledSignals {
    std::vector<Signal> signals;
    std::vector<int> labels;  // 0..C-1
    std::vector<std::string> class_names;
};

// Loads a directory tree with one subdirectory per class; class indices
// follow the lexicographic order of the subdirectory names.
LabeledSignals ingest_wav_dir(const std::string& root_path);

LabeledSignals to_labeled_signals(const ChordDataset& dataset);

struct FeatureSet {
    Eigen::MatrixXd features;  // M x N, one column per clip
    std::vector<int> labels;
    std::vector<std::string> class_names;
    FeatureKind kind = FeatureKind::spectrogram_pool;
};

FeatureSet extract_features(const LabeledSignals& data, FeatureKind kind, int threads = 0,
                            int window_size = 4096, int hop = 32);

// Extracts several feature kinds from one spectrogram pass per clip.
std::vector<FeatureSet> extract_features_multi(const LabeledSignals& data,
                                               const std::vector<FeatureKind>& kinds,
                                               int threads = 0, int window_size = 4096,
                                               int hop = 32);

}  // namespace audiodict
