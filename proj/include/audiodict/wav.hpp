#pragma once

#include <string>

#include "audiodict/signal.hpp"

namespace audiodict {

// Reads a RIFF/WAVE file. Supports 16-bit integer PCM and 32-bit IEEE float,
// any channel count (channels are averaged to mono).
Signal read_wav(const std::string& path);

// Writes a mono 16-bit PCM WAV. Samples are clamped to [-1, 1].
void write_wav(const std::string& path, const Signal& signal);

}  // namespace audiodict
