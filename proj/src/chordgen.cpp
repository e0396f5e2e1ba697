#include "audiodict/chordgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "audiodict/features.hpp"
#include "audiodict/parallel.hpp"
#include "audiodict/rng.hpp"
#include "audiodict/wav.hpp"

namespace audiodict {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double envelope_at(const Envelope& env, double t, double duration) {
    if (t < 0.0 || t > duration) return 0.0;
    if (env.attack > 0.0 && t < env.attack) return t / env.attack;
    const double t2 = t - env.attack;
    if (env.decay > 0.0 && t2 < env.decay) {
        return 1.0 - (1.0 - env.sustain_level) * (t2 / env.decay);
    }
    const double release_start = duration - env.release;
    if (env.release > 0.0 && t > release_start) {
        return env.sustain_level * (duration - t) / env.release;
    }
    return env.sustain_level;
}

}  // namespace

const std::vector<ChordType>& chord_table() {
    static const std::vector<ChordType> table = {
        {"Minor third", {3}},
        {"Major third", {4}},
        {"Diminished triad", {3, 3}},
        {"Minor triad", {3, 4}},
        {"Major triad", {4, 3}},
        {"Augmented triad", {4, 4}},
        {"Diminished seventh", {3, 3, 3}},
        {"Half-diminished seventh", {3, 3, 4}},
        {"Minor seventh", {3, 4, 3}},
        {"Minor major seventh", {3, 4, 4}},
        {"Dominant seventh", {4, 3, 3}},
        {"Major seventh", {4, 3, 4}},
        {"Augmented major seventh", {4, 4, 3}},
        {"Augmented augmented seventh", {4, 4, 4}},
    };
    return table;
}

const std::vector<InstrumentProfile>& builtin_instruments() {
    static const std::vector<InstrumentProfile> instruments = {
        {"sine", {1.0}, {0.01, 0.05, 0.85, 0.2}},
        {"saw", {1.0, 0.5, 1.0 / 3, 0.25, 0.2, 1.0 / 6, 1.0 / 7, 0.125}, {0.02, 0.1, 0.8, 0.25}},
        {"clarinet", {1.0, 0.0, 1.0 / 3, 0.0, 0.2, 0.0, 1.0 / 7, 0.0}, {0.03, 0.08, 0.75, 0.3}},
        {"pluck", {1.0, 0.55, 0.3, 0.17, 0.09, 0.05}, {0.005, 1.0, 0.15, 0.4}},
    };
    return instruments;
}

std::vector<int> default_roots() {
    std::vector<int> roots(37);
    std::iota(roots.begin(), roots.end(), 40);
    return roots;
}

Signal synthesize_chord(const ChordType& type, int root_midi, const InstrumentProfile& instrument,
                        double duration_s, int sample_rate, std::uint64_t seed) {
    if (duration_s <= 0.0) throw InvalidDuration("duration must be positive");
    if (sample_rate <= 0) throw InvalidParam("sample_rate must be positive");
    const Envelope& env = instrument.envelope;
    if (env.attack + env.decay + env.release > duration_s) {
        throw InvalidDuration("envelope segments do not fit in the clip");
    }
    if (instrument.partials.empty()) throw InvalidParam("instrument has no partials");

    const double nyquist = sample_rate / 2.0;
    const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
    Signal out;
    out.sample_rate = sample_rate;
    out.samples.assign(n, 0.0);

    Rng rng(seed);
    const int num_partials = static_cast<int>(instrument.partials.size());
    for (int midi : type.note_midis(root_midi)) {
        const double cents = rng.uniform(-5.0, 5.0);
        const double f0 = midi_to_freq(midi) * std::pow(2.0, cents / 1200.0);
        for (int k = 1; k <= num_partials; ++k) {
            const double phase = rng.uniform(0.0, kTwoPi);
            const double amp = instrument.partials[static_cast<std::size_t>(k - 1)];
            if (amp <= 0.0) continue;
            const double fk = k * f0;
            if (fk >= nyquist) {
                if (k <= 3) {
                    throw NoteAboveNyquist("partial " + std::to_string(k) + " of MIDI " +
                                           std::to_string(midi) + " is above Nyquist");
                }
                continue;  // higher partials are dropped rather than aliased
            }
            const double w = kTwoPi * fk / sample_rate;
            for (std::size_t i = 0; i < n; ++i) {
                out.samples[i] += amp * std::sin(w * static_cast<double>(i) + phase);
            }
        }
    }

    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate;
        out.samples[i] *= envelope_at(env, t, duration_s);
        peak = std::max(peak, std::abs(out.samples[i]));
    }
    if (peak > 0.0) {
        const double scale = 0.9 / peak;
        for (double& s : out.samples) s *= scale;
    }
    return out;
}

ChordDataset generate_dataset(std::uint64_t seed, int samples_per_class,
                              const std::vector<int>& roots,
                              const std::vector<InstrumentProfile>& instruments, int threads) {
    if (samples_per_class < 1) throw InvalidParam("samples_per_class must be >= 1");
    if (roots.empty() || instruments.empty()) {
        throw InvalidParam("roots and instruments must be nonempty");
    }

    const std::size_t pairs = roots.size() * instruments.size();
    // Stride coprime with the pair count so a short prefix still spans the
    // root range and all instruments.
    std::size_t stride = std::max<std::size_t>(1, (pairs * 2) / 5);
    while (std::gcd(stride, pairs) != 1) --stride;

    ChordDataset ds;
    const auto& table = chord_table();
    ds.class_names.reserve(table.size());
    for (const auto& t : table) ds.class_names.push_back(sanitize_class_name(t.name));
    const auto spc = static_cast<std::size_t>(samples_per_class);
    ds.clips.resize(table.size() * spc);

    parallel_for(ds.clips.size(), threads, [&](std::size_t j) {
        const std::size_t c = j / spc;
        const std::size_t i = j % spc;
        const std::size_t pair = (i * stride) % pairs;
        ChordClip& clip = ds.clips[j];
        clip.label = static_cast<int>(c);
        clip.root_midi = roots[pair / instruments.size()];
        const InstrumentProfile& instr = instruments[pair % instruments.size()];
        clip.instrument = instr.name;
        clip.signal = synthesize_chord(table[c], clip.root_midi, instr, 2.0, 44100,
                                       derive_seed(seed, c, i));
    });
    return ds;
}

std::string sanitize_class_name(const std::string& name) {
    std::string out;
    out.reserve(name.size());
    for (char ch : name) {
        if (ch == ' ' || ch == '-') {
            out.push_back('_');
        } else {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    return out;
}

void write_chord_dataset(const ChordDataset& dataset, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

    std::ofstream manifest(fs::path(out_dir) / "manifest.csv");
    if (!manifest) throw IoError("cannot write manifest in " + out_dir);
    manifest << "path,class_index,type_name,root_midi,instrument\n";

    std::vector<int> counters(dataset.class_names.size(), 0);
    for (const auto& clip : dataset.clips) {
        const auto c = static_cast<std::size_t>(clip.label);
        char dir_name[128];
        std::snprintf(dir_name, sizeof(dir_name), "%02d_%s", clip.label,
                      dataset.class_names[c].c_str());
        const fs::path class_dir = fs::path(out_dir) / dir_name;
        fs::create_directories(class_dir, ec);
        if (ec) throw IoError("cannot create " + class_dir.string());
        char file_name[64];
        std::snprintf(file_name, sizeof(file_name), "clip_%04d.wav", counters[c]++);
        const fs::path wav_path = class_dir / file_name;
        write_wav(wav_path.string(), clip.signal);
        manifest << dir_name << '/' << file_name << ',' << clip.label << ','
                 << dataset.class_names[c] << ',' << clip.root_midi << ',' << clip.instrument
                 << '\n';
    }
    if (!manifest) throw IoError("manifest write failed in " + out_dir);
}

}  // namespace audiodict
