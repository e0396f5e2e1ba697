#include <doctest.h>

#include <cmath>

#include "audiodict/features.hpp"
#include "oracles.hpp"

using namespace audiodict;

namespace {

Signal sine(double freq, int rate, std::size_t len, double amp = 0.5) {
    Signal s;
    s.sample_rate = rate;
    s.samples.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
        s.samples[i] = amp * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / rate);
    }
    return s;
}

Signal zeros(int rate, std::size_t len) {
    Signal s;
    s.sample_rate = rate;
    s.samples.assign(len, 0.0);
    return s;
}

}  // namespace

TEST_CASE("spectrogram framing arithmetic") {
    // 2 s at 44100 Hz with the default window/hop.
    auto spec = spectrogram(zeros(44100, 88200));
    CHECK(spec.bins() == 2049);
    CHECK(spec.frames() == 2629);
    CHECK(spec.magnitudes.maxCoeff() == 0.0);
    CHECK(spec.bin_freqs[0] == 0.0);
    CHECK(spec.bin_freqs[2048] == doctest::Approx(22050.0));
}

TEST_CASE("spectrogram rejects bad input") {
    CHECK_THROWS_AS(spectrogram(zeros(44100, 1000), 4096, 32), SignalTooShort);
    CHECK_THROWS_AS(spectrogram(zeros(44100, 9000), 4096, 0), InvalidParam);
    CHECK_THROWS_AS(spectrogram(zeros(44100, 9000), 4095, 32), InvalidParam);
    Signal empty;
    empty.sample_rate = 44100;
    CHECK_THROWS_AS(spectrogram(empty), InvalidParam);
}

TEST_CASE("pure sine lands on the expected DFT bin") {
    // 440 Hz: 440 * 4096 / 44100 = 40.86 -> bin 41.
    auto spec = spectrogram(sine(440.0, 44100, 4096 + 32 * 8));
    for (Eigen::Index t = 0; t < spec.frames(); ++t) {
        Eigen::Index argmax;
        spec.magnitudes.col(t).maxCoeff(&argmax);
        CHECK(argmax == 41);
    }
}

TEST_CASE("spectrogram matches a direct DFT") {
    auto sig = sine(997.0, 22050, 2048 + 64 * 3, 0.7);
    auto spec = spectrogram(sig, 2048, 64);
    auto ref = oracles::windowed_dft(sig.samples, 64, 2048);

    double energy_fft = 0.0, energy_ref = 0.0;
    for (Eigen::Index b = 0; b < spec.bins(); ++b) {
        const double m = spec.magnitudes(b, 1);
        const double r = std::abs(ref[static_cast<std::size_t>(b)]);
        CHECK(m == doctest::Approx(r).epsilon(1e-9));
        energy_fft += m * m;
        energy_ref += r * r;
    }
    CHECK(energy_fft == doctest::Approx(energy_ref).epsilon(0.05));
}

TEST_CASE("spectrogram works for non power-of-two even windows") {
    auto sig = sine(500.0, 8000, 700, 0.5);
    auto spec = spectrogram(sig, 300, 100);
    CHECK(spec.bins() == 151);
    CHECK(spec.frames() == 5);
    auto ref = oracles::windowed_dft(sig.samples, 0, 300);
    for (Eigen::Index b = 0; b < spec.bins(); ++b) {
        CHECK(spec.magnitudes(b, 0) ==
              doctest::Approx(std::abs(ref[static_cast<std::size_t>(b)])).epsilon(1e-9));
    }
}

TEST_CASE("pool_spectrogram averages frames") {
    Spectrogram spec;
    spec.window_size = 4;
    spec.hop = 1;
    spec.sample_rate = 100;
    spec.bin_freqs = {0.0, 25.0, 50.0};
    spec.magnitudes.resize(3, 2);
    spec.magnitudes.col(0) << 0, 0, 0;
    spec.magnitudes.col(1) << 2, 2, 2;

    auto fv = pool_spectrogram(spec);
    CHECK(fv.kind == FeatureKind::spectrogram_pool);
    CHECK(fv.values.isApprox(Eigen::VectorXd::Ones(3)));

    SUBCASE("identical frames reproduce the frame") {
        spec.magnitudes.col(0) << 1, 2, 3;
        spec.magnitudes.col(1) << 1, 2, 3;
        auto v = pool_spectrogram(spec).values;
        CHECK(v[0] == 1.0);
        CHECK(v[1] == 2.0);
        CHECK(v[2] == 3.0);
    }
    SUBCASE("permutation of frames does not matter") {
        spec.magnitudes.resize(3, 3);
        spec.magnitudes.col(0) << 1, 0, 2;
        spec.magnitudes.col(1) << 5, 1, 0;
        spec.magnitudes.col(2) << 2, 2, 2;
        auto a = pool_spectrogram(spec).values;
        Spectrogram permuted = spec;
        permuted.magnitudes.col(0) = spec.magnitudes.col(2);
        permuted.magnitudes.col(2) = spec.magnitudes.col(0);
        auto b = pool_spectrogram(permuted).values;
        CHECK(a == b);
    }
}

TEST_CASE("pooled width matches the bin count") {
    auto fv = pool_spectrogram(spectrogram(zeros(44100, 6000)));
    CHECK(fv.values.size() == 2049);
}

TEST_CASE("empty spectrogram is rejected by all extractors") {
    Spectrogram spec;
    spec.sample_rate = 44100;
    spec.window_size = 4096;
    CHECK_THROWS_AS(pool_spectrogram(spec), EmptySpectrogram);
    CHECK_THROWS_AS(chroma(spec), EmptySpectrogram);
    CHECK_THROWS_AS(interpolated_psd(spec), EmptySpectrogram);
}

TEST_CASE("chroma maps a 440 Hz sine to pitch class A") {
    auto fv = chroma(spectrogram(sine(440.0, 44100, 4096 + 32 * 4)));
    CHECK(fv.values.size() == 12);
    Eigen::Index argmax;
    fv.values.maxCoeff(&argmax);
    CHECK(argmax == oracles::pitch_class(440.0));
    CHECK(argmax == 9);  // C=0 ... A=9
}

TEST_CASE("chroma is octave equivalent") {
    for (double f : {220.0, 261.63, 440.0, 554.37}) {
        auto lo = chroma(spectrogram(sine(f, 44100, 4096 + 32 * 4)));
        auto hi = chroma(spectrogram(sine(2.0 * f, 44100, 4096 + 32 * 4)));
        Eigen::Index a, b;
        lo.values.maxCoeff(&a);
        hi.values.maxCoeff(&b);
        CHECK(a == b);
        CHECK(a == oracles::pitch_class(f));
    }
}

TEST_CASE("chroma of silence is zero and ignores DC") {
    CHECK(chroma(spectrogram(zeros(44100, 6000))).values.maxCoeff() == 0.0);

    // Hand-built spectrogram with energy only in the DC bin.
    Spectrogram spec;
    spec.window_size = 8;
    spec.hop = 1;
    spec.sample_rate = 44100;
    spec.bin_freqs = {0.0, 5512.5, 11025.0, 16537.5, 22050.0};
    spec.magnitudes = Eigen::MatrixXd::Zero(5, 2);
    spec.magnitudes(0, 0) = 3.0;
    spec.magnitudes(0, 1) = 1.0;
    CHECK(chroma(spec).values.maxCoeff() == 0.0);
}

TEST_CASE("interpolated PSD has 96 entries with MIDI 69 at index 45") {
    auto fv = interpolated_psd(spectrogram(sine(440.0, 44100, 4096 + 32 * 4)));
    CHECK(fv.values.size() == 96);
    Eigen::Index argmax;
    fv.values.maxCoeff(&argmax);
    CHECK(argmax == 45);  // MIDI 69 - 24
}

TEST_CASE("interpolated PSD of silence is zero") {
    auto fv = interpolated_psd(spectrogram(zeros(44100, 6000)));
    CHECK(fv.values.maxCoeff() == 0.0);
    CHECK(fv.values.minCoeff() == 0.0);
}

TEST_CASE("interpolated PSD refuses notes above Nyquist") {
    // MIDI 119 is ~7902 Hz; an 8 kHz sample rate puts Nyquist at 4 kHz.
    auto spec = spectrogram(sine(500.0, 8000, 3000), 1024, 256);
    CHECK_THROWS_AS(interpolated_psd(spec), NoteAboveNyquist);
}

TEST_CASE("interpolated PSD agrees with direct interpolation") {
    auto spec = spectrogram(sine(440.0, 44100, 4096 + 32 * 4));
    auto fv = interpolated_psd(spec);
    Eigen::VectorXd power = spec.magnitudes.array().square().matrix().rowwise().mean();
    const double bin_width = 44100.0 / 4096.0;
    for (int j : {0, 17, 45, 95}) {
        const double f = midi_to_freq(24 + j);
        const auto lo = static_cast<Eigen::Index>(f / bin_width);
        const double w = f / bin_width - static_cast<double>(lo);
        const double expect = (1.0 - w) * power[lo] + w * power[lo + 1];
        CHECK(fv.values[j] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("extractors are deterministic") {
    auto sig = sine(523.25, 44100, 4096 + 32 * 6, 0.4);
    auto a = spectrogram(sig);
    auto b = spectrogram(sig);
    CHECK(a.magnitudes == b.magnitudes);
    CHECK(chroma(a).values == chroma(b).values);
    CHECK(interpolated_psd(a).values == interpolated_psd(b).values);
    CHECK(pool_spectrogram(a).values == pool_spectrogram(b).values);
}
