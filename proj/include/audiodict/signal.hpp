#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "audiodict/errors.hpp"

namespace audiodict {

// A mono audio clip. Samples are dimensionless amplitudes, nominally in [-1, 1].
struct Signal {
    std::vector<double> samples;
    int sample_rate = 0;

    void validate() const {
        if (samples.empty()) throw InvalidParam("signal has no samples");
        if (sample_rate <= 0) throw InvalidParam("sample_rate must be positive");
        for (double s : samples) {
            if (!std::isfinite(s)) throw InvalidParam("signal contains a non-finite sample");
        }
    }

    double duration_seconds() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

}  // namespace audiodict
