#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "audiodict/signal.hpp"

namespace audiodict {

// Magnitude short-time spectrum. magnitudes is bins x frames with
// bins = window_size/2 + 1; bin_freqs[b] = b * sample_rate / window_size.
struct Spectrogram {
    Eigen::MatrixXd magnitudes;
    std::vector<double> bin_freqs;
    int window_size = 0;
    int hop = 0;
    int sample_rate = 0;

    Eigen::Index bins() const { return magnitudes.rows(); }
    Eigen::Index frames() const { return magnitudes.cols(); }
};

enum class FeatureKind { spectrogram_pool, chroma, interp_psd };

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);

struct FeatureVector {
    Eigen::VectorXd values;
    FeatureKind kind = FeatureKind::spectrogram_pool;
};

// Hann-windowed magnitude spectrogram. Frames that would overrun the signal
// are dropped, so frames = floor((len - window_size)/hop) + 1.
Spectrogram spectrogram(const Signal& signal, int window_size = 4096, int hop = 32);

// Per-bin mean magnitude over frames; dimension = bins.
FeatureVector pool_spectrogram(const Spectrogram& spec);

// 12-dimensional pitch-class energy profile, index 0 = C. Each non-DC bin
// contributes its time-averaged power to the pitch class of its center
// frequency.
FeatureVector chroma(const Spectrogram& spec);

// Number of note frequencies sampled by interpolated_psd (MIDI 24..119).
constexpr int kInterpPsdNotes = 96;
constexpr int kInterpPsdFirstMidi = 24;

double midi_to_freq(double midi);

// Time-averaged power spectral density linearly interpolated at the 96 note
// frequencies of MIDI 24..119.
FeatureVector interpolated_psd(const Spectrogram& spec);

}  // namespace audiodict
