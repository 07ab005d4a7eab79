#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "spktrack/common.hpp"
#include "spktrack/doa.hpp"

namespace spktrack {

/// ACN channel indices for first-order ambisonics.
enum FoaChannel : std::size_t { kW = 0, kY = 1, kZ = 2, kX = 3 };
inline constexpr std::size_t kFoaChannels = 4;

using Samples = std::vector<float>;

/// Four-channel first-order ambisonics signal, ACN order (W, Y, Z, X), SN3D.
struct FoaSignal {
    std::array<Samples, kFoaChannels> channels;
    double sample_rate = 16000.0;

    FoaSignal() = default;
    FoaSignal(std::size_t length, double fs) : sample_rate(fs) {
        for (auto& c : channels) c.assign(length, 0.0f);
    }

    std::size_t size() const { return channels[kW].size(); }
    double duration() const { return static_cast<double>(size()) / sample_rate; }

    FoaSignal& operator+=(const FoaSignal& o) {
        for (std::size_t c = 0; c < kFoaChannels; ++c) {
            auto& dst = channels[c];
            const auto& src = o.channels[c];
            if (dst.size() < src.size()) dst.resize(src.size(), 0.0f);
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
        }
        return *this;
    }

    // Copy of samples [begin, end) clipped to the signal bounds.
    FoaSignal slice(std::size_t begin, std::size_t end) const {
        end = std::min(end, size());
        begin = std::min(begin, end);
        FoaSignal out;
        out.sample_rate = sample_rate;
        for (std::size_t c = 0; c < kFoaChannels; ++c)
            out.channels[c].assign(channels[c].begin() + static_cast<std::ptrdiff_t>(begin),
                                   channels[c].begin() + static_cast<std::ptrdiff_t>(end));
        return out;
    }
};

/// Plane-wave encoding gains, equal to the FOA steering vector
/// d = (1, sin az cos el, sin el, cos az cos el). |d|^2 = 2 for every direction.
inline std::array<double, kFoaChannels> steering_vector(const DoA& doa) {
    const double az = deg2rad(doa.azimuth), el = deg2rad(doa.elevation);
    return {1.0, std::sin(az) * std::cos(el), std::sin(el), std::cos(az) * std::cos(el)};
}

inline FoaSignal encode_foa(std::span<const float> mono, const DoA& doa, double sample_rate) {
    const auto g = steering_vector(doa);
    FoaSignal out(mono.size(), sample_rate);
    for (std::size_t c = 0; c < kFoaChannels; ++c) {
        const double gain = g[c];
        auto& ch = out.channels[c];
        if (c == kW) {
            std::copy(mono.begin(), mono.end(), ch.begin());
            continue;
        }
        for (std::size_t i = 0; i < mono.size(); ++i) ch[i] = static_cast<float>(gain * mono[i]);
    }
    return out;
}

/// Adds `src` into `dst` starting at sample `offset`, growing nothing: samples
/// past the end of `dst` are dropped.
inline void mix_into(FoaSignal& dst, const FoaSignal& src, std::size_t offset, double gain = 1.0) {
    for (std::size_t c = 0; c < kFoaChannels; ++c) {
        auto& d = dst.channels[c];
        const auto& s = src.channels[c];
        for (std::size_t i = 0; i < s.size() && offset + i < d.size(); ++i)
            d[offset + i] += static_cast<float>(gain * s[i]);
    }
}

inline double mean_power(std::span<const float> x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (float v : x) acc += static_cast<double>(v) * v;
    return acc / static_cast<double>(x.size());
}

}  // namespace spktrack
