#include "audiodict/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace audiodict {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T read_le(const unsigned char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;  // little-endian host assumed
}

template <typename T>
void append_le(std::vector<unsigned char>& out, T v) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    out.insert(out.end(), bytes, bytes + sizeof(T));
}

}  // namespace

Signal read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open WAV file: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw CorruptFile("not a RIFF/WAVE file: " + path);
    }

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    const unsigned char* data = nullptr;
    std::size_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        char id[5] = {0};
        std::memcpy(id, bytes.data() + pos, 4);
        std::uint32_t chunk_len = read_le<std::uint32_t>(bytes.data() + pos + 4);
        pos += 8;
        if (pos + chunk_len > bytes.size()) throw CorruptFile("truncated chunk in " + path);
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (chunk_len < 16) throw CorruptFile("short fmt chunk in " + path);
            const unsigned char* f = bytes.data() + pos;
            format = read_le<std::uint16_t>(f);
            channels = read_le<std::uint16_t>(f + 2);
            rate = read_le<std::uint32_t>(f + 4);
            bits = read_le<std::uint16_t>(f + 14);
            if (format == kFormatExtensible && chunk_len >= 40) {
                // sub-format GUID starts with the effective format code
                format = read_le<std::uint16_t>(f + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = bytes.data() + pos;
            data_len = chunk_len;
        }
        pos += chunk_len + (chunk_len & 1);  // chunks are word-aligned
    }

    if (!have_fmt || data == nullptr) throw CorruptFile("missing fmt/data chunk in " + path);
    if (channels == 0 || rate == 0) throw CorruptFile("bad fmt fields in " + path);
    const bool pcm16 = format == kFormatPcm && bits == 16;
    const bool float32 = format == kFormatFloat && bits == 32;
    if (!pcm16 && !float32) {
        throw UnsupportedWavFormat("only 16-bit PCM and 32-bit float supported: " + path);
    }

    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t frame_bytes = bytes_per_sample * channels;
    if (frame_bytes == 0 || data_len % frame_bytes != 0) {
        throw CorruptFile("data chunk size not a whole number of frames: " + path);
    }
    const std::size_t frames = data_len / frame_bytes;
    if (frames == 0) throw CorruptFile("empty data chunk: " + path);

    Signal sig;
    sig.sample_rate = static_cast<int>(rate);
    sig.samples.resize(frames);
    const double inv_channels = 1.0 / channels;
    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        const unsigned char* fp = data + i * frame_bytes;
        for (std::uint16_t ch = 0; ch < channels; ++ch) {
            if (pcm16) {
                acc += read_le<std::int16_t>(fp + ch * 2) / 32768.0;
            } else {
                float v = read_le<float>(fp + ch * 4);
                if (!std::isfinite(v)) throw CorruptFile("non-finite sample in " + path);
                acc += v;
            }
        }
        sig.samples[i] = acc * inv_channels;
    }
    return sig;
}

void write_wav(const std::string& path, const Signal& signal) {
    signal.validate();
    const std::uint32_t n = static_cast<std::uint32_t>(signal.samples.size());
    const std::uint32_t data_len = n * 2;

    std::vector<unsigned char> out;
    out.reserve(44 + data_len);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    append_le<std::uint32_t>(out, 36 + data_len);
    out.insert(out.end(), {'W', 'A', 'V', 'E'});
    out.insert(out.end(), {'f', 'm', 't', ' '});
    append_le<std::uint32_t>(out, 16);
    append_le<std::uint16_t>(out, kFormatPcm);
    append_le<std::uint16_t>(out, 1);  // mono
    append_le<std::uint32_t>(out, static_cast<std::uint32_t>(signal.sample_rate));
    append_le<std::uint32_t>(out, static_cast<std::uint32_t>(signal.sample_rate) * 2);
    append_le<std::uint16_t>(out, 2);   // block align
    append_le<std::uint16_t>(out, 16);  // bits per sample
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    append_le<std::uint32_t>(out, data_len);
    for (double s : signal.samples) {
        double clamped = std::clamp(s, -1.0, 1.0);
        auto q = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
        append_le<std::int16_t>(out, q);
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace audiodict
