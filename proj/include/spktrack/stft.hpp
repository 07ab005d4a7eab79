#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "spktrack/common.hpp"

namespace spktrack {

using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;      // one frame, num_bins values
using Spectrogram = std::vector<Spectrum>;  // frames x bins

/// Window 32 ms, hop 16 ms, periodic Hann.
struct StftConfig {
    double window_seconds = 0.032;
    double hop_seconds = 0.016;

    std::size_t window_length(double fs) const { return static_cast<std::size_t>(std::lround(window_seconds * fs)); }
    std::size_t hop_length(double fs) const { return static_cast<std::size_t>(std::lround(hop_seconds * fs)); }
};

inline std::vector<double> periodic_hann(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
    return w;
}

/// Short-time Fourier transform with Hann analysis and plain overlap-add
/// synthesis. With a 50% hop the periodic Hann window sums to one, so
/// synthesis(analysis(x)) == x. Not thread-safe: use one instance per thread.
class Stft {
public:
    Stft(double sample_rate, StftConfig cfg = {})
        : window_(periodic_hann(cfg.window_length(sample_rate))), hop_(cfg.hop_length(sample_rate)) {
        if (window_.size() < 4 || hop_ == 0 || hop_ > window_.size())
            throw ConfigError("stft: invalid window/hop for this sample rate");
        fft_.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    }

    std::size_t window_length() const { return window_.size(); }
    std::size_t hop() const { return hop_; }
    std::size_t num_bins() const { return window_.size() / 2 + 1; }

    /// Frames needed to cover `length` samples, with frame t starting at
    /// t*hop - (window - hop) so edge samples get full window support.
    std::size_t padded_frame_count(std::size_t length) const {
        if (length == 0) return 0;
        const std::size_t lead = window_.size() - hop_;
        return (length + lead + hop_ - 1) / hop_;
    }

    /// Padded analysis, suitable for round-tripping through synthesize().
    Spectrogram analyze(std::span<const float> x) const {
        const std::size_t frames = padded_frame_count(x.size());
        const auto lead = static_cast<std::ptrdiff_t>(window_.size() - hop_);
        Spectrogram out(frames);
        std::vector<double> buf(window_.size());
        for (std::size_t t = 0; t < frames; ++t) {
            const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t * hop_) - lead;
            for (std::size_t i = 0; i < window_.size(); ++i) {
                const std::ptrdiff_t n = start + static_cast<std::ptrdiff_t>(i);
                buf[i] = (n >= 0 && n < static_cast<std::ptrdiff_t>(x.size())) ? window_[i] * x[static_cast<std::size_t>(n)] : 0.0;
            }
            fft_.fwd(out[t], buf);
        }
        return out;
    }

    /// Single frame t of the padded analysis, for streaming use.
    void analyze_frame(std::span<const float> x, std::size_t t, Spectrum& out) const {
        const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t * hop_) - static_cast<std::ptrdiff_t>(window_.size() - hop_);
        buf_.resize(window_.size());
        for (std::size_t i = 0; i < window_.size(); ++i) {
            const std::ptrdiff_t n = start + static_cast<std::ptrdiff_t>(i);
            buf_[i] = (n >= 0 && n < static_cast<std::ptrdiff_t>(x.size())) ? window_[i] * x[static_cast<std::size_t>(n)] : 0.0;
        }
        fft_.fwd(out, buf_);
    }

    /// Centre of padded frame t, in samples.
    double frame_center(std::size_t t) const {
        return static_cast<double>(t * hop_) - static_cast<double>(window_.size() - hop_) + 0.5 * static_cast<double>(window_.size());
    }

    /// Unpadded analysis: only frames lying fully inside the signal.
    Spectrogram analyze_valid(std::span<const float> x) const {
        if (x.size() < window_.size()) return {};
        const std::size_t frames = 1 + (x.size() - window_.size()) / hop_;
        Spectrogram out(frames);
        std::vector<double> buf(window_.size());
        for (std::size_t t = 0; t < frames; ++t) {
            for (std::size_t i = 0; i < window_.size(); ++i) buf[i] = window_[i] * x[t * hop_ + i];
            fft_.fwd(out[t], buf);
        }
        return out;
    }

    /// Inverse of analyze(); returns `length` samples.
    std::vector<float> synthesize(const Spectrogram& spec, std::size_t length) const {
        std::vector<double> acc(length, 0.0);
        const auto lead = static_cast<std::ptrdiff_t>(window_.size() - hop_);
        std::vector<double> frame;
        for (std::size_t t = 0; t < spec.size(); ++t) {
            Spectrum bins = spec[t];
            fft_.inv(frame, bins);
            const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t * hop_) - lead;
            for (std::size_t i = 0; i < frame.size(); ++i) {
                const std::ptrdiff_t n = start + static_cast<std::ptrdiff_t>(i);
                if (n >= 0 && n < static_cast<std::ptrdiff_t>(length)) acc[static_cast<std::size_t>(n)] += frame[i];
            }
        }
        return {acc.begin(), acc.end()};
    }

private:
    std::vector<double> window_;
    std::size_t hop_;
    mutable Eigen::FFT<double> fft_;
    mutable std::vector<double> buf_;
};

}  // namespace spktrack
