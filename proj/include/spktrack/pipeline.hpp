#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spktrack/beamforming.hpp"
#include "spktrack/common.hpp"
#include "spktrack/embedding.hpp"
#include "spktrack/fragment.hpp"
#include "spktrack/metrics.hpp"
#include "spktrack/reassign.hpp"
#include "spktrack/rng.hpp"
#include "spktrack/scene.hpp"
#include "spktrack/stft.hpp"
#include "spktrack/tracking.hpp"

namespace spktrack {

enum class TrackerVariant { gt, est };

inline const char* to_string(TrackerVariant v) { return v == TrackerVariant::gt ? "gt" : "est"; }

inline TrackerVariant parse_tracker_variant(const std::string& s) {
    if (s == "gt") return TrackerVariant::gt;
    if (s == "est") return TrackerVariant::est;
    throw ConfigError("unknown tracker variant '" + s + "' (expected gt or est)");
}

struct TrackingOptions {
    TrackerVariant variant = TrackerVariant::gt;
    double hop = kDefaultHop;
    EstNoiseModel est_noise = EstNoiseModel::calibrated();
    std::optional<TrackerConfig> tracker;  // overrides the variant preset (max_tracks and seed still set per run)
};

struct CellConfig {
    BeamformerKind beamformer = BeamformerKind::ideal;
    NoiseCovarianceSource noise_cov = NoiseCovarianceSource::oracle;
    DurationPolicy policy = DurationPolicy::whole();
    std::size_t M = 2;
    int max_gap_frames = 0;
};

/// Track a scene. All randomness hangs off the scene seed, so every sweep cell
/// with the same M sees the same trajectories.
inline std::vector<Trajectory> track_scene(const Scene& scene, const TrackingOptions& opt, std::size_t M,
                                           std::uint64_t seed) {
    const double dur = scene.spec.duration;
    std::vector<ObservationFrame> obs;
    if (opt.variant == TrackerVariant::gt)
        obs = observe_gt(scene.ground_truth, opt.hop, dur);
    else
        obs = observe_est(scene.ground_truth, opt.hop, opt.est_noise, derive_seed(seed, 0, "observe"), dur);
    TrackerConfig cfg = opt.tracker ? *opt.tracker
                        : opt.variant == TrackerVariant::gt ? TrackerConfig::gt_preset(static_cast<int>(M))
                                                             : TrackerConfig::est_preset(static_cast<int>(M));
    cfg.max_tracks = static_cast<int>(M);
    cfg.seed = derive_seed(seed, 0, "tracker");
    return track(obs, cfg);
}

struct CellResult {
    std::vector<Fragment> fragments;
    std::vector<TimeWindow> windows;
    EnrollmentPool pool;
    AssignmentResult after;
    MvdrDiagnostics mvdr;
    std::size_t embedding_fallbacks = 0;  // fragments too short (or silent) to embed
};

/// Enhanced mono signal for one fragment window.
inline std::vector<float> beamform_fragment(const Scene& scene, const Stft& stft, const CellConfig& cell,
                                            const DoA& doa, const TimeWindow& window,
                                            const GatedCovarianceEstimator* gated, int track_id,
                                            MvdrDiagnostics* diag) {
    const double fs = scene.mixture.sample_rate;
    const std::size_t n = scene.mixture.size();
    const std::size_t begin = std::min(n, to_sample(window.start, fs));
    const std::size_t end = std::max(begin, std::min(n, to_sample(window.end, fs)));
    switch (cell.beamformer) {
        case BeamformerKind::ideal:
            return beamform_ideal(scene.wet, scene.ground_truth, doa, window);
        case BeamformerKind::ds:
            return beamform_ds(scene.mixture.slice(begin, end), doa);
        case BeamformerKind::mvdr: {
            BandCovariance R;
            if (cell.noise_cov == NoiseCovarianceSource::oracle) {
                const std::size_t j = ideal_speaker(scene.ground_truth, doa, window);
                R = oracle_noise_covariance(stft, scene.mixture, scene.wet[j], begin, end);
            } else {
                if (!gated) throw ConfigError("gated MVDR needs a covariance estimator");
                R = gated->for_track(track_id);
            }
            return beamform_mvdr(stft, scene.mixture.slice(begin, end), doa, R, diag);
        }
    }
    throw ConfigError("unknown beamformer");
}

/// segment -> window -> beamform -> embed -> reassign, for one sweep cell.
/// `pool` overrides the synthetic enrollment when given.
inline CellResult run_cell(const Scene& scene, const std::vector<Trajectory>& before, const CellConfig& cell,
                           double hop, std::uint64_t seed, EnrollmentBuilder& enrollment,
                           const EnrollmentPool* pool = nullptr) {
    CellResult res;
    if (pool) {
        res.pool = *pool;
    } else {
        std::vector<VoiceParams> voices;
        std::vector<int> ids;
        for (const auto& s : scene.ground_truth) {
            voices.push_back(s.voice);
            ids.push_back(s.speaker_id);
        }
        res.pool = enrollment.build(voices, ids, cell.M, derive_seed(seed, 0, "enrollment"));
    }

    res.fragments = segment(before, cell.max_gap_frames);
    const double fs = scene.mixture.sample_rate;
    Stft stft(fs);
    ReferenceEmbedder embedder(fs);
    std::optional<GatedCovarianceEstimator> gated;
    if (cell.beamformer == BeamformerKind::mvdr && cell.noise_cov == NoiseCovarianceSource::gated)
        gated.emplace(stft, scene.mixture, before, hop);

    std::vector<std::optional<Embedding>> embeddings;
    std::vector<double> seconds;
    for (auto& f : res.fragments) {
        const TimeWindow w = extraction_window(f, cell.policy, hop);
        const DoA doa = window_doa(f, w, hop);
        res.windows.push_back(w);
        seconds.push_back(w.end - w.start);
        const auto mono =
            beamform_fragment(scene, stft, cell, doa, w, gated ? &*gated : nullptr, f.source_track_id, &res.mvdr);
        try {
            embeddings.emplace_back(embedder.embed(mono));
        } catch (const InsufficientSignalError&) {
            embeddings.emplace_back(std::nullopt);
            ++res.embedding_fallbacks;
        }
    }
    res.after = reassign(res.fragments, embeddings, res.pool, seconds);
    return res;
}

struct PipelineResult {
    std::vector<Trajectory> before;
    CellResult cell;
};

inline PipelineResult run_pipeline(const Scene& scene, const TrackingOptions& tracking, const CellConfig& cell,
                                   std::uint64_t seed, EnrollmentBuilder& enrollment,
                                   const EnrollmentPool* pool = nullptr) {
    PipelineResult out;
    out.before = track_scene(scene, tracking, cell.M, seed);
    out.cell = run_cell(scene, out.before, cell, tracking.hop, seed, enrollment, pool);
    return out;
}

/// Fraction of matched frames whose predicted identity is the matched speaker's
/// own enrolled identity. Distractor identities always count as errors.
/// `identity_of_track[track_id]` gives the label of each predicted trajectory.
inline double identity_accuracy(const FrameMatching& m, const std::map<int, std::string>& identity_of_track) {
    std::size_t hit = 0, total = 0;
    for (const auto& f : m.frames)
        for (const auto& mp : f.matches) {
            ++total;
            auto it = identity_of_track.find(mp.pred_id);
            if (it != identity_of_track.end() && it->second == genuine_identity(mp.gt_id)) ++hit;
        }
    return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

}  // namespace spktrack
