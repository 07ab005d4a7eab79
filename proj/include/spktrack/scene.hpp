#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "json.hpp"
#include "spktrack/common.hpp"
#include "spktrack/doa.hpp"
#include "spktrack/foa.hpp"
#include "spktrack/rng.hpp"
#include "spktrack/voice.hpp"

namespace spktrack {

enum class SeparationRegime { distant, close };

inline const char* to_string(SeparationRegime r) { return r == SeparationRegime::distant ? "distant" : "close"; }

inline SeparationRegime parse_regime(const std::string& s) {
    if (s == "distant") return SeparationRegime::distant;
    if (s == "close") return SeparationRegime::close;
    throw ConfigError("unknown separation regime '" + s + "' (expected distant|close)");
}

struct SceneSpec {
    std::uint64_t seed = 0;
    int num_speakers = 2;
    double duration = 60.0;
    double sample_rate = 16000.0;
    double snr_db = 15.0;  // +inf disables noise
    Range level_diff_db{2.0, 4.0};
    SeparationRegime regime = SeparationRegime::distant;
    Range speech_seconds{2.0, 6.0};
    Range pause_seconds{1.0, 4.0};
    Range initial_silence_seconds{0.0, 2.0};
    double min_segment_seconds = 0.5;
    bool jump_on_silence = true;
    double min_jump_deg = 30.0;
    Range elevation_deg{-20.0, 40.0};
    // Optional decorrelated exponential tail; t60 of 0 disables it.
    double tail_t60 = 0.0;
    double tail_level_db = -12.0;
    int max_placement_retries = 2000;

    Range separation_deg() const {
        return regime == SeparationRegime::distant ? Range{60.0, 180.0} : Range{25.0, 60.0};
    }

    void validate() const {
        if (!(duration > 0.0)) throw ConfigError("scene: duration must be > 0");
        if (num_speakers < 1) throw ConfigError("scene: need at least one speaker");
        if (!(sample_rate >= 8000.0)) throw ConfigError("scene: sample rate must be >= 8 kHz");
        if (level_diff_db.lo > level_diff_db.hi) throw ConfigError("scene: level_diff_range low > high");
        if (speech_seconds.lo > speech_seconds.hi || !(speech_seconds.lo > 0.0))
            throw ConfigError("scene: invalid speech length range");
        if (pause_seconds.lo > pause_seconds.hi || pause_seconds.lo < 0.0)
            throw ConfigError("scene: invalid pause length range");
        if (initial_silence_seconds.lo > initial_silence_seconds.hi || initial_silence_seconds.lo < 0.0)
            throw ConfigError("scene: invalid initial silence range");
        if (elevation_deg.lo > elevation_deg.hi || elevation_deg.lo < -90.0 || elevation_deg.hi > 90.0)
            throw ConfigError("scene: invalid elevation range");
        if (std::isnan(snr_db)) throw ConfigError("scene: snr is NaN");
    }
};

struct Segment {
    double onset = 0.0;
    double offset = 0.0;
    DoA doa;

    bool operator==(const Segment&) const = default;
    bool covers(double t) const { return onset <= t && t < offset; }
};

struct SpeakerGroundTruth {
    int speaker_id = 0;
    VoiceParams voice;
    double level_db = 0.0;
    std::vector<Segment> segments;

    bool operator==(const SpeakerGroundTruth&) const = default;

    const Segment* active_at(double t) const {
        for (const auto& s : segments)
            if (s.covers(t)) return &s;
        return nullptr;
    }
};

struct Scene {
    SceneSpec spec;
    FoaSignal mixture;
    std::vector<FoaSignal> wet;
    std::vector<SpeakerGroundTruth> ground_truth;
};

/// Isotropic diffuse noise in ACN/SN3D: uncorrelated channels with variances
/// (1, 1/3, 1/3, 1/3).
inline FoaSignal generate_diffuse_noise(double duration, double sample_rate, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(std::max(0.0, std::round(duration * sample_rate)));
    FoaSignal out(n, sample_rate);
    Rng rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double scale[kFoaChannels] = {1.0, std::sqrt(1.0 / 3.0), std::sqrt(1.0 / 3.0), std::sqrt(1.0 / 3.0)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < kFoaChannels; ++c) out.channels[c][i] = static_cast<float>(scale[c] * gauss(rng));
    return out;
}

namespace detail {

inline std::vector<std::pair<double, double>> sample_activity(const SceneSpec& spec, Rng& rng) {
    std::vector<std::pair<double, double>> out;
    double t = uniform(rng, spec.initial_silence_seconds.lo, spec.initial_silence_seconds.hi + 1e-12);
    while (t < spec.duration) {
        const double len = uniform(rng, spec.speech_seconds.lo, spec.speech_seconds.hi + 1e-12);
        const double end = std::min(spec.duration, t + len);
        if (end - t >= spec.min_segment_seconds) out.emplace_back(t, end);
        t = end + uniform(rng, spec.pause_seconds.lo, spec.pause_seconds.hi + 1e-12);
    }
    return out;
}

inline DoA sample_doa(const SceneSpec& spec, Rng& rng) {
    // Uniform on the sphere restricted to the elevation band.
    const double zlo = std::sin(deg2rad(spec.elevation_deg.lo)), zhi = std::sin(deg2rad(spec.elevation_deg.hi));
    DoA d;
    d.azimuth = DoA::wrap_azimuth(uniform(rng, -180.0, 180.0));
    d.elevation = rad2deg(std::asin(std::clamp(uniform(rng, zlo, zhi + 1e-15), -1.0, 1.0)));
    return d;
}

inline bool separation_ok(const SceneSpec& spec, const DoA& a, const DoA& b) {
    const Range sep = spec.separation_deg();
    const double d = angular_distance(a, b);
    return d >= sep.lo && d <= sep.hi;
}

// Adds a decaying decorrelated noise tail (one independent tail per channel).
inline void add_tail(FoaSignal& sig, const SceneSpec& spec, Rng& rng) {
    const std::size_t tail_len = static_cast<std::size_t>(spec.tail_t60 * spec.sample_rate);
    if (tail_len == 0 || sig.size() == 0) return;
    const std::size_t out_len = sig.size() + tail_len;
    std::size_t nfft = 1;
    while (nfft < out_len) nfft <<= 1;
    Eigen::FFT<double> fft;
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double decay = std::log(1000.0) / static_cast<double>(tail_len);  // -60 dB at t60
    const double level = std::pow(10.0, spec.tail_level_db / 20.0);
    double norm = 0.0;
    std::vector<std::vector<double>> tails(kFoaChannels, std::vector<double>(tail_len));
    for (auto& tail : tails)
        for (std::size_t i = 0; i < tail_len; ++i) tail[i] = gauss(rng) * std::exp(-decay * static_cast<double>(i));
    for (double v : tails[0]) norm += v * v;
    const double g = level / std::sqrt(std::max(norm, 1e-30));
    for (std::size_t c = 0; c < kFoaChannels; ++c) {
        std::vector<double> a(nfft, 0.0), b(nfft, 0.0);
        std::copy(sig.channels[c].begin(), sig.channels[c].end(), a.begin());
        for (std::size_t i = 0; i < tail_len; ++i) b[i] = g * tails[c][i];
        std::vector<std::complex<double>> fa, fb;
        fft.fwd(fa, a);
        fft.fwd(fb, b);
        for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
        std::vector<double> conv;
        fft.inv(conv, fa);
        // Direct path plus tail; `a` still holds the dry channel.
        sig.channels[c].resize(out_len);
        for (std::size_t i = 0; i < out_len; ++i) sig.channels[c][i] = static_cast<float>(a[i] + conv[i]);
    }
}

}  // namespace detail

/// Draws a full scene: activity timelines, per-segment positions that respect
/// the separation regime, voices, wet signals, diffuse noise at the requested
/// W-channel SNR, and the mixture y = sum_j x_j + n.
inline Scene generate_scene(const SceneSpec& spec) {
    spec.validate();
    Scene scene;
    scene.spec = spec;
    const double fs = spec.sample_rate;
    const auto total = static_cast<std::size_t>(std::round(spec.duration * fs));

    Rng rng = make_rng(derive_seed(spec.seed, 0, "scene"));
    const int J = spec.num_speakers;

    scene.ground_truth.resize(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
        auto& gt = scene.ground_truth[static_cast<std::size_t>(j)];
        gt.speaker_id = j;
        gt.voice = sample_voice(rng);
        for (auto [on, off] : detail::sample_activity(spec, rng)) gt.segments.push_back({on, off, {}});
    }

    // Levels: one reference speaker at 0 dB, the others a level-difference
    // draw below it, then shuffled so the loud speaker is random.
    std::vector<double> levels(static_cast<std::size_t>(J), 0.0);
    for (int j = 1; j < J; ++j) levels[static_cast<std::size_t>(j)] = -uniform(rng, spec.level_diff_db.lo, spec.level_diff_db.hi + 1e-12);
    std::shuffle(levels.begin(), levels.end(), rng);
    for (int j = 0; j < J; ++j) scene.ground_truth[static_cast<std::size_t>(j)].level_db = levels[static_cast<std::size_t>(j)];

    // Positions, in onset order so every overlapping pair is checked once.
    struct Ref {
        std::size_t speaker, segment;
        double onset;
    };
    std::vector<Ref> order;
    for (std::size_t j = 0; j < scene.ground_truth.size(); ++j)
        for (std::size_t s = 0; s < scene.ground_truth[j].segments.size(); ++s)
            order.push_back({j, s, scene.ground_truth[j].segments[s].onset});
    std::stable_sort(order.begin(), order.end(), [](const Ref& a, const Ref& b) {
        return a.onset < b.onset || (a.onset == b.onset && a.speaker < b.speaker);
    });

    std::vector<bool> placed_speaker(static_cast<std::size_t>(J), false);
    std::vector<std::vector<bool>> placed(static_cast<std::size_t>(J));
    for (std::size_t j = 0; j < placed.size(); ++j) placed[j].assign(scene.ground_truth[j].segments.size(), false);

    if (!spec.jump_on_silence) {
        // One fixed position per speaker, separated from every other speaker.
        std::vector<DoA> fixed(static_cast<std::size_t>(J));
        for (std::size_t j = 0; j < fixed.size(); ++j) {
            bool ok = false;
            for (int attempt = 0; attempt < spec.max_placement_retries && !ok; ++attempt) {
                fixed[j] = detail::sample_doa(spec, rng);
                ok = true;
                for (std::size_t k = 0; k < j; ++k) ok = ok && detail::separation_ok(spec, fixed[j], fixed[k]);
            }
            if (!ok) throw InfeasibleConstraintError("scene: cannot place speaker " + std::to_string(j) +
                                                     " within the separation regime");
            for (auto& seg : scene.ground_truth[j].segments) seg.doa = fixed[j];
        }
    } else {
        for (const auto& ref : order) {
            auto& seg = scene.ground_truth[ref.speaker].segments[ref.segment];
            const Segment* prev = ref.segment > 0 ? &scene.ground_truth[ref.speaker].segments[ref.segment - 1] : nullptr;
            bool ok = false;
            for (int attempt = 0; attempt < spec.max_placement_retries && !ok; ++attempt) {
                seg.doa = detail::sample_doa(spec, rng);
                ok = prev == nullptr || angular_distance(seg.doa, prev->doa) >= spec.min_jump_deg;
                for (std::size_t k = 0; ok && k < scene.ground_truth.size(); ++k) {
                    if (k == ref.speaker) continue;
                    const auto& other = scene.ground_truth[k];
                    for (std::size_t t = 0; ok && t < other.segments.size(); ++t) {
                        if (!placed[k][t]) continue;
                        const auto& o = other.segments[t];
                        const bool overlap = o.onset < seg.offset && seg.onset < o.offset;
                        if (overlap) ok = detail::separation_ok(spec, seg.doa, o.doa);
                    }
                }
            }
            if (!ok)
                throw InfeasibleConstraintError("scene: separation regime unsatisfiable for speaker " +
                                                std::to_string(ref.speaker) + " segment " + std::to_string(ref.segment));
            placed[ref.speaker][ref.segment] = true;
        }
    }

    // Wet signals.
    scene.wet.assign(static_cast<std::size_t>(J), FoaSignal(total, fs));
    for (std::size_t j = 0; j < scene.ground_truth.size(); ++j) {
        const auto& gt = scene.ground_truth[j];
        const double gain = std::pow(10.0, gt.level_db / 20.0);
        for (std::size_t s = 0; s < gt.segments.size(); ++s) {
            const auto& seg = gt.segments[s];
            const auto begin = static_cast<std::size_t>(std::round(seg.onset * fs));
            const auto end = std::min(total, static_cast<std::size_t>(std::round(seg.offset * fs)));
            if (end <= begin) continue;
            auto mono = synthesize_voice(gt.voice, static_cast<double>(end - begin) / fs, fs,
                                         derive_seed(spec.seed, j * 100000 + s, "utterance"));
            for (auto& v : mono) v = static_cast<float>(gain * v);
            FoaSignal part = encode_foa(mono, seg.doa, fs);
            if (spec.tail_t60 > 0.0) {
                Rng tail_rng = make_rng(derive_seed(spec.seed, j * 100000 + s, "tail"));
                detail::add_tail(part, spec, tail_rng);
            }
            mix_into(scene.wet[j], part, begin);
        }
    }

    scene.mixture = FoaSignal(total, fs);
    for (const auto& w : scene.wet) scene.mixture += w;

    if (std::isfinite(spec.snr_db)) {
        const FoaSignal noise = generate_diffuse_noise(spec.duration, fs, derive_seed(spec.seed, 0, "noise"));
        const double speech_power = mean_power(scene.mixture.channels[kW]);
        const double noise_power = mean_power(noise.channels[kW]);
        if (speech_power > 0.0 && noise_power > 0.0) {
            const double g = std::sqrt(speech_power / (noise_power * std::pow(10.0, spec.snr_db / 10.0)));
            mix_into(scene.mixture, noise, 0, g);
        }
    }
    return scene;
}

// ---------------------------------------------------------------------------
// JSON (ground-truth document)

inline nlohmann::json to_json(const VoiceParams& v) {
    nlohmann::json res = nlohmann::json::array();
    for (const auto& r : v.resonances)
        res.push_back({{"center_hz", r.center_hz}, {"bandwidth_hz", r.bandwidth_hz}, {"gain_db", r.gain_db}});
    return {{"f0_hz", v.f0_hz},
            {"spectral_tilt_db_per_octave", v.spectral_tilt_db_per_octave},
            {"resonances", res},
            {"modulation_rate_hz", v.modulation_rate_hz}};
}

inline VoiceParams voice_from_json(const nlohmann::json& j) {
    VoiceParams v;
    v.f0_hz = j.at("f0_hz").get<double>();
    v.spectral_tilt_db_per_octave = j.at("spectral_tilt_db_per_octave").get<double>();
    const auto& res = j.at("resonances");
    if (res.size() != 3) throw DataError("voice: expected 3 resonances");
    for (std::size_t k = 0; k < 3; ++k)
        v.resonances[k] = {res[k].at("center_hz").get<double>(), res[k].at("bandwidth_hz").get<double>(),
                           res[k].at("gain_db").get<double>()};
    v.modulation_rate_hz = j.at("modulation_rate_hz").get<double>();
    return v;
}

inline nlohmann::json to_json(const SceneSpec& s) {
    return {{"seed", s.seed},
            {"num_speakers", s.num_speakers},
            {"duration", s.duration},
            {"sample_rate", s.sample_rate},
            {"snr_db", std::isfinite(s.snr_db) ? nlohmann::json(s.snr_db) : nlohmann::json("inf")},
            {"level_diff_db", {s.level_diff_db.lo, s.level_diff_db.hi}},
            {"regime", to_string(s.regime)},
            {"speech_seconds", {s.speech_seconds.lo, s.speech_seconds.hi}},
            {"pause_seconds", {s.pause_seconds.lo, s.pause_seconds.hi}},
            {"initial_silence_seconds", {s.initial_silence_seconds.lo, s.initial_silence_seconds.hi}},
            {"min_segment_seconds", s.min_segment_seconds},
            {"jump_on_silence", s.jump_on_silence},
            {"min_jump_deg", s.min_jump_deg},
            {"elevation_deg", {s.elevation_deg.lo, s.elevation_deg.hi}},
            {"tail_t60", s.tail_t60},
            {"tail_level_db", s.tail_level_db}};
}

inline SceneSpec scene_spec_from_json(const nlohmann::json& j) {
    auto range = [&](const char* key) {
        const auto& a = j.at(key);
        return Range{a.at(0).get<double>(), a.at(1).get<double>()};
    };
    SceneSpec s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.num_speakers = j.at("num_speakers").get<int>();
    s.duration = j.at("duration").get<double>();
    s.sample_rate = j.at("sample_rate").get<double>();
    const auto& snr = j.at("snr_db");
    s.snr_db = snr.is_string() ? std::numeric_limits<double>::infinity() : snr.get<double>();
    s.level_diff_db = range("level_diff_db");
    s.regime = parse_regime(j.at("regime").get<std::string>());
    s.speech_seconds = range("speech_seconds");
    s.pause_seconds = range("pause_seconds");
    s.initial_silence_seconds = range("initial_silence_seconds");
    s.min_segment_seconds = j.at("min_segment_seconds").get<double>();
    s.jump_on_silence = j.at("jump_on_silence").get<bool>();
    s.min_jump_deg = j.at("min_jump_deg").get<double>();
    s.elevation_deg = range("elevation_deg");
    s.tail_t60 = j.value("tail_t60", 0.0);
    s.tail_level_db = j.value("tail_level_db", -12.0);
    return s;
}

inline nlohmann::json ground_truth_to_json(const SceneSpec& spec, const std::vector<SpeakerGroundTruth>& gt) {
    nlohmann::json speakers = nlohmann::json::array();
    for (const auto& s : gt) {
        nlohmann::json segs = nlohmann::json::array();
        for (const auto& seg : s.segments)
            segs.push_back({{"onset", seg.onset},
                            {"offset", seg.offset},
                            {"azimuth", seg.doa.azimuth},
                            {"elevation", seg.doa.elevation}});
        speakers.push_back(
            {{"speaker_id", s.speaker_id}, {"level_db", s.level_db}, {"voice", to_json(s.voice)}, {"segments", segs}});
    }
    return {{"spec", to_json(spec)}, {"speakers", speakers}};
}

inline std::pair<SceneSpec, std::vector<SpeakerGroundTruth>> ground_truth_from_json(const nlohmann::json& j) {
    std::pair<SceneSpec, std::vector<SpeakerGroundTruth>> out;
    out.first = scene_spec_from_json(j.at("spec"));
    for (const auto& s : j.at("speakers")) {
        SpeakerGroundTruth gt;
        gt.speaker_id = s.at("speaker_id").get<int>();
        gt.level_db = s.value("level_db", 0.0);
        gt.voice = voice_from_json(s.at("voice"));
        for (const auto& seg : s.at("segments"))
            gt.segments.push_back({seg.at("onset").get<double>(),
                                   seg.at("offset").get<double>(),
                                   {seg.at("azimuth").get<double>(), seg.at("elevation").get<double>()}});
        out.second.push_back(std::move(gt));
    }
    return out;
}

}  // namespace spktrack
