#include "audiodict/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>

#include "audiodict/parallel.hpp"
#include "audiodict/wav.hpp"

namespace audiodict {

namespace fs = std::filesystem;

LabeledSignals ingest_wav_dir(const std::string& root_path) {
    if (!fs::is_directory(root_path)) throw IoError("not a directory: " + root_path);

    std::vector<std::string> class_dirs;
    for (const auto& entry : fs::directory_iterator(root_path)) {
        if (entry.is_directory()) class_dirs.push_back(entry.path().filename().string());
    }
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.empty()) throw EmptyClassDir("no class subdirectories in " + root_path);

    LabeledSignals out;
    out.class_names = class_dirs;
    for (std::size_t c = 0; c < class_dirs.size(); ++c) {
        std::vector<std::string> wavs;
        for (const auto& entry : fs::directory_iterator(fs::path(root_path) / class_dirs[c])) {
            if (!entry.is_regular_file()) continue;
            std::string ext = entry.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(),
                           [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
            if (ext == ".wav") wavs.push_back(entry.path().string());
        }
        std::sort(wavs.begin(), wavs.end());
        if (wavs.empty()) throw EmptyClassDir("class directory has no WAV files: " + class_dirs[c]);
        for (const auto& path : wavs) {
            out.signals.push_back(read_wav(path));
            out.labels.push_back(static_cast<int>(c));
        }
    }
    return out;
}

LabeledSignals to_labeled_signals(const ChordDataset& dataset) {
    LabeledSignals out;
    out.class_names = dataset.class_names;
    out.signals.reserve(dataset.clips.size());
    out.labels.reserve(dataset.clips.size());
    for (const auto& clip : dataset.clips) {
        out.signals.push_back(clip.signal);
        out.labels.push_back(clip.label);
    }
    return out;
}

FeatureSet extract_features(const LabeledSignals& data, FeatureKind kind, int threads,
                            int window_size, int hop) {
    auto sets = extract_features_multi(data, {kind}, threads, window_size, hop);
    return std::move(sets.front());
}

std::vector<FeatureSet> extract_features_multi(const LabeledSignals& data,
                                               const std::vector<FeatureKind>& kinds,
                                               int threads, int window_size, int hop) {
    if (data.signals.empty()) throw InsufficientSamples("no signals to extract from");
    if (kinds.empty()) throw InvalidParam("no feature kinds requested");

    const auto n = static_cast<Eigen::Index>(data.signals.size());
    std::vector<FeatureSet> sets(kinds.size());
    for (std::size_t k = 0; k < kinds.size(); ++k) {
        sets[k].kind = kinds[k];
        sets[k].labels = data.labels;
        sets[k].class_names = data.class_names;
    }

    std::vector<std::vector<Eigen::VectorXd>> columns(kinds.size());
    for (auto& cols : columns) cols.resize(static_cast<std::size_t>(n));

    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
        const Spectrogram spec = spectrogram(data.signals[i], window_size, hop);
        for (std::size_t k = 0; k < kinds.size(); ++k) {
            switch (kinds[k]) {
                case FeatureKind::spectrogram_pool:
                    columns[k][i] = pool_spectrogram(spec).values;
                    break;
                case FeatureKind::chroma:
                    columns[k][i] = chroma(spec).values;
                    break;
                case FeatureKind::interp_psd:
                    columns[k][i] = interpolated_psd(spec).values;
                    break;
            }
        }
    });

    for (std::size_t k = 0; k < kinds.size(); ++k) {
        const auto dim = columns[k].front().size();
        sets[k].features.resize(dim, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            sets[k].features.col(i) = columns[k][static_cast<std::size_t>(i)];
        }
    }
    return sets;
}

}  // namespace audiodict
