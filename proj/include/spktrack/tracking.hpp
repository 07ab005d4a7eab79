#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spktrack/common.hpp"
#include "spktrack/doa.hpp"
#include "spktrack/rng.hpp"
#include "spktrack/scene.hpp"

namespace spktrack {

inline constexpr double kDefaultHop = 0.1;

struct Detection {
    DoA doa;
    double confidence = 1.0;

    bool operator==(const Detection&) const = default;
};

struct ObservationFrame {
    int frame_index = 0;
    std::vector<Detection> detections;

    bool operator==(const ObservationFrame&) const = default;
};

struct TrajectoryFrame {
    int frame_index = 0;
    DoA doa;
    bool active = true;

    bool operator==(const TrajectoryFrame&) const = default;
};

struct Trajectory {
    int track_id = 0;
    std::vector<TrajectoryFrame> frames;

    bool operator==(const Trajectory&) const = default;
};

inline int frame_count(double duration, double hop) {
    return static_cast<int>(std::ceil(duration / hop - 1e-9));
}

// Frame k samples the scene at t = k * hop.
inline bool active_at_frame(const Segment& s, int k, double hop) {
    const double t = k * hop;
    return t >= s.onset - 1e-9 && t < s.offset - 1e-9;
}

inline double scene_end(const std::vector<SpeakerGroundTruth>& gt) {
    double end = 0.0;
    for (const auto& s : gt)
        for (const auto& seg : s.segments) end = std::max(end, seg.offset);
    return end;
}

/// Exact ground-truth observations: one confidence-1 detection per active speaker.
/// A negative duration means "up to the last ground-truth offset".
inline std::vector<ObservationFrame> observe_gt(const std::vector<SpeakerGroundTruth>& gt, double hop = kDefaultHop,
                                                double duration = -1.0) {
    if (!(hop > 0.0)) throw ConfigError("observe_gt: hop must be positive");
    if (duration < 0.0) duration = scene_end(gt);
    const int frames = frame_count(duration, hop);
    std::vector<ObservationFrame> out(static_cast<std::size_t>(std::max(0, frames)));
    for (int k = 0; k < frames; ++k) {
        auto& f = out[static_cast<std::size_t>(k)];
        f.frame_index = k;
        for (const auto& s : gt)
            for (const auto& seg : s.segments)
                if (active_at_frame(seg, k, hop)) f.detections.push_back({seg.doa, 1.0});
    }
    return out;
}

/// Localizer error model standing in for an estimated-DoA front end.
struct EstNoiseModel {
    double kappa_err = 0.0;
    double miss_prob = 0.0;
    double false_alarm_rate = 0.0;  // expected false detections per frame

    /// Calibrated so the mean angular error matches a 6.45 degree localizer.
    static EstNoiseModel calibrated(double mean_error_deg = 6.45) {
        return {vmf_kappa_for_mean_angle(mean_error_deg), 0.05, 0.02};
    }
};

inline std::vector<ObservationFrame> observe_est(const std::vector<SpeakerGroundTruth>& gt, double hop,
                                                 const EstNoiseModel& noise, std::uint64_t seed,
                                                 double duration = -1.0) {
    if (!(noise.kappa_err > 0.0)) throw ConfigError("observe_est: kappa_err must be > 0");
    if (noise.miss_prob < 0.0 || noise.miss_prob > 1.0) throw ConfigError("observe_est: miss_prob outside [0, 1]");
    if (noise.false_alarm_rate < 0.0) throw ConfigError("observe_est: false_alarm_rate must be >= 0");
    auto frames = observe_gt(gt, hop, duration);
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::poisson_distribution<int> false_alarms(noise.false_alarm_rate > 0.0 ? noise.false_alarm_rate : 1.0);
    for (auto& f : frames) {
        std::vector<Detection> dets;
        for (const auto& d : f.detections) {
            if (u01(rng) < noise.miss_prob) continue;
            if (std::isinf(noise.kappa_err)) {
                dets.push_back(d);
                continue;
            }
            dets.push_back({DoA::from_unit(sample_vmf(rng, d.doa.unit(), noise.kappa_err)), 1.0});
        }
        if (noise.false_alarm_rate > 0.0) {
            const int n = false_alarms(rng);
            for (int i = 0; i < n; ++i) dets.push_back({DoA::from_unit(sample_uniform_sphere(rng)), 0.5});
        }
        f.detections = std::move(dets);
    }
    return frames;
}

struct TrackerConfig {
    int max_tracks = 2;
    int particles_per_track = 128;
    double dynamics_concentration = 3000.0;
    double observation_concentration = 400.0;
    double gate_deg = 15.0;
    double birth_probability = 1.0;
    int birth_confirm_frames = 2;
    int death_frames = 5;
    std::uint64_t seed = 0;

    void validate() const {
        if (max_tracks < 1) throw ConfigError("tracker: max_tracks must be >= 1");
        if (particles_per_track < 1) throw ConfigError("tracker: particles_per_track must be >= 1");
        if (!(gate_deg > 0.0 && gate_deg <= 180.0)) throw ConfigError("tracker: gate must be in (0, 180]");
        if (birth_probability < 0.0 || birth_probability > 1.0) throw ConfigError("tracker: birth_probability outside [0, 1]");
        if (birth_confirm_frames < 1 || death_frames < 1) throw ConfigError("tracker: frame counts must be >= 1");
        if (!(dynamics_concentration > 0.0 && observation_concentration > 0.0))
            throw ConfigError("tracker: concentrations must be > 0");
    }

    /// Exact observations: confirm new sources immediately.
    static TrackerConfig gt_preset(int max_tracks, std::uint64_t seed = 0) {
        TrackerConfig c;
        c.max_tracks = max_tracks;
        c.seed = seed;
        return c;
    }

    /// Noisy observations: wider gate, slower and probabilistic births.
    static TrackerConfig est_preset(int max_tracks, std::uint64_t seed = 0) {
        TrackerConfig c;
        c.max_tracks = max_tracks;
        c.observation_concentration = 80.0;
        c.dynamics_concentration = 1500.0;
        c.gate_deg = 25.0;
        c.birth_probability = 0.7;
        c.birth_confirm_frames = 3;
        c.death_frames = 5;
        c.seed = seed;
        return c;
    }
};

/// Particle cloud on the unit sphere for one track.
class SphereParticleFilter {
public:
    SphereParticleFilter() = default;

    void initialize(Rng& rng, const Vec3& around, double kappa, int count) {
        particles_.resize(static_cast<std::size_t>(count));
        weights_.assign(static_cast<std::size_t>(count), 1.0 / count);
        for (auto& p : particles_) p = sample_vmf(rng, around, kappa);
    }

    void predict(Rng& rng, double kappa_dyn) {
        for (auto& p : particles_) p = sample_vmf(rng, p, kappa_dyn);
    }

    void update(Rng& rng, const Vec3& z, double kappa_obs) {
        double total = 0.0;
        for (std::size_t i = 0; i < particles_.size(); ++i) {
            weights_[i] *= std::exp(kappa_obs * (particles_[i].dot(z) - 1.0));
            total += weights_[i];
        }
        if (!(total > 0.0) || !std::isfinite(total)) {
            // Every particle is far from the observation: restart the cloud there.
            initialize(rng, z, kappa_obs, static_cast<int>(particles_.size()));
            return;
        }
        for (auto& w : weights_) w /= total;
        if (effective_sample_size() < 0.5 * static_cast<double>(particles_.size())) resample(rng);
    }

    double effective_sample_size() const {
        double sq = 0.0;
        for (double w : weights_) sq += w * w;
        return sq > 0.0 ? 1.0 / sq : 0.0;
    }

    Vec3 mean() const {
        Vec3 acc;
        for (std::size_t i = 0; i < particles_.size(); ++i) acc += weights_[i] * particles_[i];
        return acc.normalized();
    }

    const std::vector<double>& weights() const { return weights_; }

private:
    // Systematic resampling.
    void resample(Rng& rng) {
        const std::size_t n = particles_.size();
        std::vector<Vec3> next(n);
        const double step = 1.0 / static_cast<double>(n);
        double u = uniform(rng, 0.0, step);
        double cum = weights_[0];
        std::size_t i = 0;
        for (std::size_t m = 0; m < n; ++m) {
            while (u > cum && i + 1 < n) cum += weights_[++i];
            next[m] = particles_[i];
            u += step;
        }
        particles_ = std::move(next);
        weights_.assign(n, step);
    }

    std::vector<Vec3> particles_;
    std::vector<double> weights_;
};

/// Multi-target tracker with a fixed pool of identities. Detections are
/// associated greedily to live tracks within the gate; leftovers grow
/// candidates, which take over an identity slot once confirmed. A slot that
/// has gone `death_frames` frames without detections becomes available for
/// reuse: first by a candidate within the gate of its last position, then
/// unused slots, then the spatially nearest released slot.
class MultiTargetTracker {
public:
    explicit MultiTargetTracker(TrackerConfig cfg) : cfg_(cfg), rng_(make_rng(cfg.seed)) {
        cfg_.validate();
        slots_.resize(static_cast<std::size_t>(cfg_.max_tracks));
        for (std::size_t i = 0; i < slots_.size(); ++i) slots_[i].trajectory.track_id = static_cast<int>(i);
    }

    void step(const ObservationFrame& frame) {
        const int k = frame.frame_index;
        const auto& dets = frame.detections;
        std::vector<bool> used(dets.size(), false);

        // Predict live tracks and associate.
        std::vector<std::size_t> live;
        for (std::size_t s = 0; s < slots_.size(); ++s)
            if (slots_[s].state == SlotState::alive) {
                slots_[s].filter.predict(rng_, cfg_.dynamics_concentration);
                live.push_back(s);
            }
        std::vector<Vec3> live_pos;
        for (auto s : live) live_pos.push_back(slots_[s].filter.mean());
        const auto pairs = greedy_pairs(live_pos, dets, used);
        std::vector<bool> live_hit(live.size(), false);
        for (auto [li, di] : pairs) {
            auto& slot = slots_[live[li]];
            used[di] = true;
            live_hit[li] = true;
            slot.filter.update(rng_, dets[di].doa.unit(), cfg_.observation_concentration);
            slot.misses = 0;
            slot.last = slot.filter.mean();
            slot.trajectory.frames.push_back({k, DoA::from_unit(slot.last), true});
        }
        for (std::size_t li = 0; li < live.size(); ++li) {
            if (live_hit[li]) continue;
            auto& slot = slots_[live[li]];
            ++slot.misses;
            if (slot.misses >= cfg_.death_frames) {
                slot.state = SlotState::released;
            } else {
                slot.trajectory.frames.push_back({k, DoA::from_unit(slot.filter.mean()), false});
            }
        }

        // Candidates: extend with leftover detections, drop unsupported ones.
        std::vector<Vec3> cand_pos;
        for (const auto& c : candidates_) cand_pos.push_back(c.history.back().doa.unit());
        const auto cpairs = greedy_pairs(cand_pos, dets, used);
        std::vector<bool> cand_hit(candidates_.size(), false);
        for (auto [ci, di] : cpairs) {
            used[di] = true;
            cand_hit[ci] = true;
            candidates_[ci].history.push_back({k, dets[di].doa, true});
        }
        std::vector<Candidate> next;
        for (std::size_t ci = 0; ci < candidates_.size(); ++ci)
            if (cand_hit[ci]) next.push_back(std::move(candidates_[ci]));
        for (std::size_t di = 0; di < dets.size(); ++di)
            if (!used[di]) next.push_back({{TrajectoryFrame{k, dets[di].doa, true}}});
        candidates_ = std::move(next);

        // Confirmation.
        std::vector<Candidate> remaining;
        for (auto& c : candidates_) {
            bool confirmed = false;
            if (static_cast<int>(c.history.size()) >= cfg_.birth_confirm_frames) {
                const bool draw = cfg_.birth_probability >= 1.0 || uniform(rng_, 0.0, 1.0) < cfg_.birth_probability;
                if (draw) {
                    if (auto slot = pick_slot(c.history.back().doa.unit())) {
                        confirm(*slot, c);
                        confirmed = true;
                    }
                }
            }
            if (!confirmed) remaining.push_back(std::move(c));
        }
        candidates_ = std::move(remaining);
    }

    int alive_count() const {
        int n = 0;
        for (const auto& s : slots_) n += s.state == SlotState::alive;
        return n;
    }

    std::vector<Trajectory> trajectories() const {
        std::vector<Trajectory> out;
        for (const auto& s : slots_)
            if (s.state != SlotState::unused && !s.trajectory.frames.empty()) out.push_back(s.trajectory);
        return out;
    }

private:
    enum class SlotState { unused, alive, released };

    struct Slot {
        SlotState state = SlotState::unused;
        SphereParticleFilter filter;
        Vec3 last;
        int misses = 0;
        Trajectory trajectory;
    };

    struct Candidate {
        std::vector<TrajectoryFrame> history;
    };

    // Greedy nearest-neighbour pairing within the gate; ties go to the lower
    // track index, then the lower detection index.
    std::vector<std::pair<std::size_t, std::size_t>> greedy_pairs(const std::vector<Vec3>& tracks,
                                                                  const std::vector<Detection>& dets,
                                                                  const std::vector<bool>& used) const {
        struct Cand {
            double dist;
            std::size_t t, d;
        };
        std::vector<Cand> all;
        for (std::size_t t = 0; t < tracks.size(); ++t)
            for (std::size_t d = 0; d < dets.size(); ++d) {
                if (used[d]) continue;
                const double dist = angular_distance_unit(tracks[t], dets[d].doa.unit());
                if (dist <= cfg_.gate_deg) all.push_back({dist, t, d});
            }
        std::sort(all.begin(), all.end(), [](const Cand& a, const Cand& b) {
            if (a.dist != b.dist) return a.dist < b.dist;
            if (a.t != b.t) return a.t < b.t;
            return a.d < b.d;
        });
        std::vector<bool> t_used(tracks.size(), false), d_used(dets.size(), false);
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (const auto& c : all) {
            if (t_used[c.t] || d_used[c.d]) continue;
            t_used[c.t] = d_used[c.d] = true;
            out.emplace_back(c.t, c.d);
        }
        return out;
    }

    std::optional<std::size_t> pick_slot(const Vec3& pos) const {
        std::optional<std::size_t> near_released, first_unused, any_released;
        double near_d = std::numeric_limits<double>::infinity(), any_d = near_d;
        for (std::size_t s = 0; s < slots_.size(); ++s) {
            const auto& slot = slots_[s];
            if (slot.state == SlotState::unused) {
                if (!first_unused) first_unused = s;
            } else if (slot.state == SlotState::released) {
                const double d = angular_distance_unit(slot.last, pos);
                if (d <= cfg_.gate_deg && d < near_d) {
                    near_d = d;
                    near_released = s;
                }
                if (d < any_d) {
                    any_d = d;
                    any_released = s;
                }
            }
        }
        if (near_released) return near_released;
        if (first_unused) return first_unused;
        return any_released;
    }

    void confirm(std::size_t s, const Candidate& c) {
        auto& slot = slots_[s];
        const int first = c.history.front().frame_index;
        auto& frames = slot.trajectory.frames;
        while (!frames.empty() && !frames.back().active && frames.back().frame_index >= first) frames.pop_back();
        const int last_recorded = frames.empty() ? std::numeric_limits<int>::min() : frames.back().frame_index;
        for (const auto& f : c.history)
            if (f.frame_index > last_recorded) frames.push_back(f);
        slot.state = SlotState::alive;
        slot.misses = 0;
        slot.filter.initialize(rng_, c.history.back().doa.unit(), cfg_.observation_concentration,
                               cfg_.particles_per_track);
        slot.last = c.history.back().doa.unit();
    }

    TrackerConfig cfg_;
    Rng rng_;
    std::vector<Slot> slots_;
    std::vector<Candidate> candidates_;
};

/// Runs the tracker over an observation sequence (frames must be in order).
inline std::vector<Trajectory> track(const std::vector<ObservationFrame>& observations, const TrackerConfig& config) {
    config.validate();
    if (observations.empty()) return {};
    MultiTargetTracker tracker(config);
    for (const auto& f : observations) tracker.step(f);
    return tracker.trajectories();
}

/// Ground truth expressed as trajectories (one per speaker, active frames only).
inline std::vector<Trajectory> ground_truth_trajectories(const std::vector<SpeakerGroundTruth>& gt, double hop,
                                                         double duration) {
    std::vector<Trajectory> out;
    const int frames = frame_count(duration, hop);
    for (const auto& s : gt) {
        Trajectory t;
        t.track_id = s.speaker_id;
        for (int k = 0; k < frames; ++k)
            for (const auto& seg : s.segments)
                if (active_at_frame(seg, k, hop)) {
                    t.frames.push_back({k, seg.doa, true});
                    break;
                }
        out.push_back(std::move(t));
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON lines: {"track_id": n, "frames": [[frame_index, azimuth, elevation, active], ...]}

inline nlohmann::json to_json(const Trajectory& t) {
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& f : t.frames) frames.push_back({f.frame_index, f.doa.azimuth, f.doa.elevation, f.active});
    return {{"track_id", t.track_id}, {"frames", frames}};
}

inline Trajectory trajectory_from_json(const nlohmann::json& j) {
    Trajectory t;
    t.track_id = j.at("track_id").get<int>();
    int prev = std::numeric_limits<int>::min();
    for (const auto& f : j.at("frames")) {
        if (!f.is_array() || f.size() != 4) throw DataError("trajectory frame must be [frame, az, el, active]");
        TrajectoryFrame tf{f[0].get<int>(), {f[1].get<double>(), f[2].get<double>()}, f[3].get<bool>()};
        if (tf.frame_index <= prev) throw DataError("trajectory frame indices must be strictly increasing");
        prev = tf.frame_index;
        t.frames.push_back(tf);
    }
    return t;
}

inline void write_trajectories_jsonl(std::ostream& os, const std::vector<Trajectory>& ts) {
    for (const auto& t : ts) os << to_json(t).dump() << '\n';
}

inline std::vector<Trajectory> read_trajectories_jsonl(std::istream& is) {
    std::vector<Trajectory> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(trajectory_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(e.what(), lineno);
        } catch (const DataError& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    return out;
}

}  // namespace spktrack
