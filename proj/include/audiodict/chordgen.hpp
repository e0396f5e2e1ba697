#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "audiodict/signal.hpp"

namespace audiodict {

// A tertian chord type: stacked intervals of 3 (minor) or 4 (Major) semitones.
struct ChordType {
    std::string name;
    std::vector<int> intervals;

    std::vector<int> note_midis(int root_midi) const {
        std::vector<int> notes{root_midi};
        int m = root_midi;
        for (int iv : intervals) {
            m += iv;
            notes.push_back(m);
        }
        return notes;
    }
};

// The 14 tertian chord types (2 thirds, 4 triads, 8 sevenths), in table order.
const std::vector<ChordType>& chord_table();

struct Envelope {
    double attack = 0.01;
    double decay = 0.05;
    double sustain_level = 0.85;
    double release = 0.2;
};

// Relative partial strengths (index k-1 = strength of the k-th harmonic,
// normalized so the strongest is 1) plus an amplitude envelope.
struct InstrumentProfile {
    std::string name;
    std::vector<double> partials;
    Envelope envelope;
};

// Four synthetic timbres: sine, saw-like, clarinet-like (odd partials), pluck.
const std::vector<InstrumentProfile>& builtin_instruments();

// Five fundamentals stepped across MIDI 40..76; every modeled partial stays
// below the 22.05 kHz Nyquist.
std::vector<int> default_roots();

// Additive synthesis of one chord clip: per-note partials weighted by the
// instrument profile, enveloped, peak-normalized to 0.9. The seed drives a
// per-note detune of at most 5 cents and per-partial phases.
Signal synthesize_chord(const ChordType& type, int root_midi, const InstrumentProfile& instrument,
                        double duration_s = 2.0, int sample_rate = 44100,
                        std::uint64_t seed = 0);

struct ChordClip {
    Signal signal;
    int label = 0;
    int root_midi = 0;
    std::string instrument;
};

struct ChordDataset {
    std::vector<ChordClip> clips;
    std::vector<std::string> class_names;
};

// samples_per_class clips per chord type, cycling (root, instrument) pairs
// with a stride that spreads roots evenly at any prefix length. Clips carry
// independent derived seeds, so the result is bit-identical for a fixed seed
// regardless of thread count.
ChordDataset generate_dataset(std::uint64_t seed, int samples_per_class = 154,
                              const std::vector<int>& roots = default_roots(),
                              const std::vector<InstrumentProfile>& instruments =
                                  builtin_instruments(),
                              int threads = 0);

// Writes 16-bit mono WAVs into one directory per class (prefixed with the
// class index so a lexicographic scan recovers label order) plus manifest.csv.
void write_chord_dataset(const ChordDataset& dataset, const std::string& out_dir);

std::string sanitize_class_name(const std::string& name);

}  // namespace audiodict
