#include "audiodict/features.hpp"

#include <cmath>
#include <complex>

#include "audiodict/fft.hpp"

namespace audiodict {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

void require_nonempty(const Spectrogram& spec) {
    if (spec.frames() < 1 || spec.bins() < 1) {
        throw EmptySpectrogram("spectrogram has no frames");
    }
}

// Mean over frames of squared magnitude, per bin.
Eigen::VectorXd mean_power(const Spectrogram& spec) {
    return spec.magnitudes.array().square().matrix().rowwise().mean();
}

}  // namespace

std::string to_string(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::spectrogram_pool: return "spectrogram_pool";
        case FeatureKind::chroma: return "chroma";
        case FeatureKind::interp_psd: return "interp_psd";
    }
    return "unknown";
}

FeatureKind feature_kind_from_string(const std::string& name) {
    if (name == "spectrogram_pool") return FeatureKind::spectrogram_pool;
    if (name == "chroma") return FeatureKind::chroma;
    if (name == "interp_psd") return FeatureKind::interp_psd;
    throw InvalidParam("unknown feature kind: " + name);
}

double midi_to_freq(double midi) { return 440.0 * std::pow(2.0, (midi - 69.0) / 12.0); }

Spectrogram spectrogram(const Signal& signal, int window_size, int hop) {
    signal.validate();
    if (hop <= 0) throw InvalidParam("hop must be >= 1");
    if (window_size <= 0 || window_size % 2 != 0) {
        throw InvalidParam("window_size must be a positive even number");
    }
    const std::size_t len = signal.samples.size();
    const std::size_t window = static_cast<std::size_t>(window_size);
    if (len < window) throw SignalTooShort("signal shorter than analysis window");

    const Eigen::Index bins = window_size / 2 + 1;
    const Eigen::Index frames =
        static_cast<Eigen::Index>((len - window) / static_cast<std::size_t>(hop)) + 1;

    std::vector<double> hann(window);
    for (std::size_t i = 0; i < window; ++i) {
        hann[i] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / window_size));
    }

    Spectrogram spec;
    spec.window_size = window_size;
    spec.hop = hop;
    spec.sample_rate = signal.sample_rate;
    spec.magnitudes.resize(bins, frames);
    spec.bin_freqs.resize(static_cast<std::size_t>(bins));
    for (Eigen::Index b = 0; b < bins; ++b) {
        spec.bin_freqs[static_cast<std::size_t>(b)] =
            static_cast<double>(b) * signal.sample_rate / window_size;
    }

    std::vector<std::complex<double>> buf(window);
    const bool pow2 = is_power_of_two(window);
    std::vector<double> frame(window);
    for (Eigen::Index t = 0; t < frames; ++t) {
        const std::size_t off = static_cast<std::size_t>(t) * static_cast<std::size_t>(hop);
        if (pow2) {
            for (std::size_t i = 0; i < window; ++i) {
                buf[i] = std::complex<double>(signal.samples[off + i] * hann[i], 0.0);
            }
            fft_radix2(buf);
            for (Eigen::Index b = 0; b < bins; ++b) {
                spec.magnitudes(b, t) = std::abs(buf[static_cast<std::size_t>(b)]);
            }
        } else {
            for (std::size_t i = 0; i < window; ++i) frame[i] = signal.samples[off + i] * hann[i];
            auto full = dft_real(frame);
            for (Eigen::Index b = 0; b < bins; ++b) {
                spec.magnitudes(b, t) = std::abs(full[static_cast<std::size_t>(b)]);
            }
        }
    }
    return spec;
}

FeatureVector pool_spectrogram(const Spectrogram& spec) {
    require_nonempty(spec);
    FeatureVector fv;
    fv.kind = FeatureKind::spectrogram_pool;
    fv.values = spec.magnitudes.rowwise().mean();
    return fv;
}

FeatureVector chroma(const Spectrogram& spec) {
    require_nonempty(spec);
    const Eigen::VectorXd power = mean_power(spec);
    FeatureVector fv;
    fv.kind = FeatureKind::chroma;
    fv.values = Eigen::VectorXd::Zero(12);
    for (Eigen::Index b = 0; b < spec.bins(); ++b) {
        const double f = spec.bin_freqs[static_cast<std::size_t>(b)];
        if (f <= 0.0) continue;  // DC carries no pitch
        // Semitone distance from A4, folded to a pitch class with C at 0.
        const long rel_a = std::lround(12.0 * std::log2(f / 440.0));
        const long idx = ((rel_a + 9) % 12 + 12) % 12;
        fv.values[idx] += power[b];
    }
    return fv;
}

FeatureVector interpolated_psd(const Spectrogram& spec) {
    require_nonempty(spec);
    const double nyquist = spec.sample_rate / 2.0;
    const Eigen::VectorXd power = mean_power(spec);
    const double bin_width = static_cast<double>(spec.sample_rate) / spec.window_size;

    FeatureVector fv;
    fv.kind = FeatureKind::interp_psd;
    fv.values = Eigen::VectorXd::Zero(kInterpPsdNotes);
    for (int j = 0; j < kInterpPsdNotes; ++j) {
        const double f = midi_to_freq(kInterpPsdFirstMidi + j);
        if (f > nyquist) {
            throw NoteAboveNyquist("note frequency " + std::to_string(f) +
                                   " Hz exceeds Nyquist " + std::to_string(nyquist) + " Hz");
        }
        const double pos = f / bin_width;
        const auto lo = static_cast<Eigen::Index>(pos);
        if (lo >= spec.bins() - 1) {
            fv.values[j] = power[spec.bins() - 1];
        } else {
            const double w = pos - static_cast<double>(lo);
            fv.values[j] = (1.0 - w) * power[lo] + w * power[lo + 1];
        }
    }
    return fv;
}

}  // namespace audiodict
