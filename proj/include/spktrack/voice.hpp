#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "spktrack/common.hpp"
#include "spktrack/foa.hpp"
#include "spktrack/rng.hpp"

namespace spktrack {

struct Resonance {
    double center_hz = 500.0;
    double bandwidth_hz = 100.0;
    double gain_db = 12.0;

    bool operator==(const Resonance&) const = default;
};

/// Parametric stand-in for a speaker's voice.
struct VoiceParams {
    double f0_hz = 120.0;
    double spectral_tilt_db_per_octave = -6.0;
    std::array<Resonance, 3> resonances{};
    double modulation_rate_hz = 4.0;

    bool operator==(const VoiceParams&) const = default;

    void validate(double sample_rate) const {
        if (!(f0_hz >= 80.0 && f0_hz <= 300.0)) throw ConfigError("voice: f0 outside [80, 300] Hz");
        double prev = 0.0;
        for (const auto& r : resonances) {
            if (!(r.center_hz > prev)) throw ConfigError("voice: resonance centers must be strictly increasing");
            if (!(r.center_hz < sample_rate / 2.0)) throw ConfigError("voice: resonance above Nyquist");
            if (!(r.bandwidth_hz > 0.0)) throw ConfigError("voice: resonance bandwidth must be positive");
            prev = r.center_hz;
        }
        if (!(modulation_rate_hz > 0.0)) throw ConfigError("voice: modulation rate must be positive");
    }
};

/// Draws a voice from the population prior shared by scene speakers and
/// enrollment distractors.
inline VoiceParams sample_voice(Rng& rng) {
    VoiceParams v;
    v.f0_hz = uniform(rng, 85.0, 260.0);
    v.spectral_tilt_db_per_octave = uniform(rng, -10.0, -3.0);
    v.resonances[0] = {uniform(rng, 280.0, 900.0), uniform(rng, 50.0, 200.0), uniform(rng, 8.0, 22.0)};
    v.resonances[1] = {uniform(rng, 1000.0, 2400.0), uniform(rng, 70.0, 260.0), uniform(rng, 6.0, 20.0)};
    v.resonances[2] = {uniform(rng, 2500.0, 3800.0), uniform(rng, 100.0, 350.0), uniform(rng, 4.0, 18.0)};
    v.modulation_rate_hz = uniform(rng, 3.0, 6.0);
    return v;
}

namespace detail {

// Magnitude of the spectral envelope at `freq`: tilt times a floor plus
// Lorentzian resonance peaks.
inline double envelope_gain(double freq, double tilt_db, const std::array<Resonance, 3>& res) {
    const double tilt = std::pow(10.0, tilt_db * std::log2(std::max(freq, 50.0) / 100.0) / 20.0);
    double shape = 0.08;
    for (const auto& r : res) {
        const double x = (freq - r.center_hz) / (0.5 * r.bandwidth_hz);
        shape += std::pow(10.0, r.gain_db / 20.0) / (1.0 + x * x);
    }
    return tilt * shape;
}

struct Syllable {
    std::size_t begin = 0, end = 0;
    double f0 = 0.0;
    double peak = 1.0;
    std::array<Resonance, 3> resonances{};
};

}  // namespace detail

/// Harmonic complex at f0 shaped by the tilt and resonances, amplitude
/// modulated syllable by syllable. Each syllable perturbs f0, level and the
/// resonance centers (a crude vowel), so short excerpts are less
/// representative of the voice than long ones. Output has unit RMS.
inline std::vector<float> synthesize_voice(const VoiceParams& voice, double duration, double sample_rate,
                                           std::uint64_t seed) {
    voice.validate(sample_rate);
    const auto n = static_cast<std::size_t>(std::max(0.0, std::round(duration * sample_rate)));
    std::vector<float> out(n, 0.0f);
    if (n == 0) return out;

    Rng rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double nyquist = sample_rate / 2.0;
    const double max_freq = std::min(0.95 * nyquist, 7800.0);

    // Syllable plan.
    std::vector<detail::Syllable> syllables;
    const double mean_len = sample_rate / voice.modulation_rate_hz;
    for (std::size_t pos = 0; pos < n;) {
        detail::Syllable s;
        s.begin = pos;
        const double len = mean_len * uniform(rng, 0.7, 1.3);
        s.end = std::min(n, pos + std::max<std::size_t>(1, static_cast<std::size_t>(len)));
        s.f0 = std::clamp(voice.f0_hz * std::exp(0.06 * gauss(rng)), 60.0, 400.0);
        s.peak = std::pow(10.0, 3.0 * gauss(rng) / 20.0);
        double floor_hz = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            auto r = voice.resonances[k];
            r.center_hz = std::clamp(r.center_hz * std::exp(0.2 * gauss(rng)), floor_hz + 50.0, max_freq);
            floor_hz = r.center_hz;
            s.resonances[k] = r;
        }
        syllables.push_back(s);
        pos = s.end;
    }

    // Oscillator bank, one rotating phasor per harmonic.
    const std::size_t max_harmonics = static_cast<std::size_t>(max_freq / 60.0) + 1;
    std::vector<std::complex<double>> phasor(max_harmonics);
    for (auto& p : phasor) p = std::polar(1.0, uniform(rng, 0.0, 2.0 * kPi));

    constexpr std::size_t kBlock = 80;
    std::vector<double> amp(max_harmonics);
    std::vector<std::complex<double>> step(max_harmonics);
    for (const auto& s : syllables) {
        const std::size_t harmonics = std::min(max_harmonics, static_cast<std::size_t>(max_freq / s.f0));
        for (std::size_t h = 0; h < harmonics; ++h) {
            const double f = s.f0 * static_cast<double>(h + 1);
            amp[h] = detail::envelope_gain(f, voice.spectral_tilt_db_per_octave, s.resonances);
            step[h] = std::polar(1.0, 2.0 * kPi * f / sample_rate);
        }
        const double len = static_cast<double>(s.end - s.begin);
        for (std::size_t b = s.begin; b < s.end; b += kBlock) {
            const std::size_t e = std::min(s.end, b + kBlock);
            for (std::size_t i = b; i < e; ++i) {
                const double phase = (static_cast<double>(i - s.begin) + 0.5) / len;
                const double env = s.peak * (0.12 + 0.88 * std::pow(std::sin(kPi * phase), 2.0));
                double acc = 0.0;
                for (std::size_t h = 0; h < harmonics; ++h) {
                    acc += amp[h] * phasor[h].imag();
                    phasor[h] *= step[h];
                }
                out[i] = static_cast<float>(env * acc);
            }
            for (std::size_t h = 0; h < harmonics; ++h) phasor[h] /= std::abs(phasor[h]);
        }
    }

    const double rms = std::sqrt(mean_power(out));
    if (rms > 0.0)
        for (auto& v : out) v = static_cast<float>(v / rms);
    return out;
}

}  // namespace spktrack
