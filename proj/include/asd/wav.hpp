#pragma once

// Minimal RIFF WAV I/O: mono, 16-bit PCM only.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "asd/common.hpp"

namespace asd {

struct WavData {
    int sample_rate_hz = 0;
    std::vector<float> samples;  // [-1, 1]

    double duration_s() const {
        return sample_rate_hz > 0 ? double(samples.size()) / sample_rate_hz : 0.0;
    }
};

namespace detail {
inline void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
    b.push_back(v & 0xff);
    b.push_back((v >> 8) & 0xff);
    b.push_back((v >> 16) & 0xff);
    b.push_back((v >> 24) & 0xff);
}
inline void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
    b.push_back(v & 0xff);
    b.push_back((v >> 8) & 0xff);
}
inline std::uint32_t get_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
           std::uint32_t(p[3]) << 24;
}
inline std::uint16_t get_u16(const unsigned char* p) {
    return std::uint16_t(p[0]) | std::uint16_t(p[1]) << 8;
}
}  // namespace detail

inline void write_wav(const std::filesystem::path& path, const std::vector<float>& samples,
                      int sample_rate_hz) {
    std::vector<unsigned char> buf;
    buf.reserve(44 + samples.size() * 2);
    const std::uint32_t data_bytes = std::uint32_t(samples.size() * 2);
    buf.insert(buf.end(), {'R', 'I', 'F', 'F'});
    detail::put_u32(buf, 36 + data_bytes);
    buf.insert(buf.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    detail::put_u32(buf, 16);
    detail::put_u16(buf, 1);  // PCM
    detail::put_u16(buf, 1);  // mono
    detail::put_u32(buf, std::uint32_t(sample_rate_hz));
    detail::put_u32(buf, std::uint32_t(sample_rate_hz) * 2);
    detail::put_u16(buf, 2);
    detail::put_u16(buf, 16);
    buf.insert(buf.end(), {'d', 'a', 't', 'a'});
    detail::put_u32(buf, data_bytes);
    for (float s : samples) {
        double v = std::clamp(double(s), -1.0, 1.0);
        auto q = std::int16_t(std::lround(v * 32767.0));
        detail::put_u16(buf, std::uint16_t(q));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw AsdError("cannot open for write: " + path.string());
    out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
    if (!out) throw AsdError("write failed: " + path.string());
}

inline WavData read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw AsdError("cannot open: " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
        std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
        throw AsdError("not a RIFF WAV file: " + path.string());

    WavData wav;
    std::size_t pos = 12;
    int bits = 0, channels = 0;
    bool got_fmt = false;
    while (pos + 8 <= buf.size()) {
        const char* id = reinterpret_cast<const char*>(buf.data() + pos);
        std::uint32_t sz = detail::get_u32(buf.data() + pos + 4);
        std::size_t body = pos + 8;
        if (std::memcmp(id, "fmt ", 4) == 0 && body + 16 <= buf.size()) {
            std::uint16_t fmt = detail::get_u16(buf.data() + body);
            channels = detail::get_u16(buf.data() + body + 2);
            wav.sample_rate_hz = int(detail::get_u32(buf.data() + body + 4));
            bits = detail::get_u16(buf.data() + body + 14);
            if (fmt != 1) throw AsdError("unsupported WAV encoding (PCM only): " + path.string());
            got_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            if (!got_fmt) throw AsdError("WAV data before fmt chunk: " + path.string());
            if (channels != 1 || bits != 16)
                throw AsdError("expected mono 16-bit PCM: " + path.string());
            std::size_t n = std::min<std::size_t>(sz, buf.size() - body) / 2;
            wav.samples.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                auto v = std::int16_t(detail::get_u16(buf.data() + body + 2 * i));
                wav.samples[i] = float(v) / 32767.0f;
            }
            return wav;
        }
        pos = body + sz + (sz & 1);
    }
    throw AsdError("WAV has no data chunk: " + path.string());
}

}  // namespace asd
