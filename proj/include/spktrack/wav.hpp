#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "spktrack/common.hpp"

namespace spktrack::wav {

// Multichannel IEEE-float WAV (format tag 3), 32-bit little-endian samples.
struct Audio {
    std::vector<std::vector<float>> channels;
    std::uint32_t sample_rate = 16000;
};

namespace detail {

inline void put_u32(std::ofstream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u16(std::ofstream& os, std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

inline std::uint32_t get_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

inline std::uint16_t get_u16(const unsigned char* p) { return std::uint16_t(p[0] | p[1] << 8); }

}  // namespace detail

inline void write(const std::filesystem::path& path, const Audio& audio) {
    const auto num_channels = static_cast<std::uint16_t>(audio.channels.size());
    const std::size_t frames = audio.channels.empty() ? 0 : audio.channels.front().size();
    for (const auto& c : audio.channels)
        if (c.size() != frames) throw DataError("wav: channels of unequal length");

    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open " + path.string() + " for writing");
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * num_channels * 4);

    os.write("RIFF", 4);
    detail::put_u32(os, 36 + data_bytes);
    os.write("WAVE", 4);
    os.write("fmt ", 4);
    detail::put_u32(os, 16);
    detail::put_u16(os, 3);
    detail::put_u16(os, num_channels);
    detail::put_u32(os, audio.sample_rate);
    detail::put_u32(os, audio.sample_rate * num_channels * 4);
    detail::put_u16(os, static_cast<std::uint16_t>(num_channels * 4));
    detail::put_u16(os, 32);
    os.write("data", 4);
    detail::put_u32(os, data_bytes);

    std::vector<float> interleaved(frames * num_channels);
    for (std::size_t i = 0; i < frames; ++i)
        for (std::size_t c = 0; c < num_channels; ++c) interleaved[i * num_channels + c] = audio.channels[c][i];
    // Host is assumed little-endian, like the format.
    os.write(reinterpret_cast<const char*>(interleaved.data()),
             static_cast<std::streamsize>(interleaved.size() * sizeof(float)));
    if (!os) throw DataError("short write to " + path.string());
}

inline Audio read(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw DataError(path.string() + ": not a RIFF/WAVE file");

    Audio audio;
    std::uint16_t format = 0, num_channels = 0, bits = 0;
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::uint32_t size = detail::get_u32(chunk + 4);
        const std::size_t body = pos + 8;
        if (body + size > bytes.size()) throw DataError(path.string() + ": truncated chunk");
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16) throw DataError(path.string() + ": bad fmt chunk");
            format = detail::get_u16(bytes.data() + body);
            num_channels = detail::get_u16(bytes.data() + body + 2);
            audio.sample_rate = detail::get_u32(bytes.data() + body + 4);
            bits = detail::get_u16(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            if (!have_fmt) throw DataError(path.string() + ": data before fmt");
            if (format != 3 || bits != 32) throw DataError(path.string() + ": only 32-bit float WAV is supported");
            const std::size_t frames = size / (4u * num_channels);
            audio.channels.assign(num_channels, std::vector<float>(frames));
            const unsigned char* p = bytes.data() + body;
            for (std::size_t i = 0; i < frames; ++i)
                for (std::size_t c = 0; c < num_channels; ++c) {
                    float v;
                    std::memcpy(&v, p + (i * num_channels + c) * 4, 4);
                    audio.channels[c][i] = v;
                }
            return audio;
        }
        pos = body + size + (size & 1u);
    }
    throw DataError(path.string() + ": no data chunk");
}

}  // namespace spktrack::wav
