#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "spktrack/common.hpp"
#include "spktrack/doa.hpp"
#include "spktrack/hungarian.hpp"
#include "spktrack/rng.hpp"
#include "spktrack/tracking.hpp"

namespace spktrack {

inline constexpr double kDefaultMatchThresholdDeg = 20.0;

struct MatchPair {
    int gt_id = 0;
    int pred_id = 0;
    double distance_deg = 0.0;
};

struct FrameMatch {
    int frame_index = 0;
    std::vector<MatchPair> matches;
    std::vector<int> unmatched_gt;
    std::vector<int> unmatched_pred;
};

/// Per-frame optimal partial matching between active ground-truth speakers and
/// active predicted tracks. Pairs farther than the threshold are forbidden;
/// among admissible matchings the one with most pairs, then least total
/// angular distance, is chosen.
struct FrameMatching {
    double threshold_deg = kDefaultMatchThresholdDeg;
    std::vector<FrameMatch> frames;

    std::size_t tp() const {
        std::size_t n = 0;
        for (const auto& f : frames) n += f.matches.size();
        return n;
    }
    std::size_t fn() const {
        std::size_t n = 0;
        for (const auto& f : frames) n += f.unmatched_gt.size();
        return n;
    }
    std::size_t fp() const {
        std::size_t n = 0;
        for (const auto& f : frames) n += f.unmatched_pred.size();
        return n;
    }
};

namespace detail {

using ActiveMap = std::map<int, std::vector<std::pair<int, Vec3>>>;

inline ActiveMap active_by_frame(const std::vector<Trajectory>& ts) {
    ActiveMap out;
    for (const auto& t : ts)
        for (const auto& f : t.frames)
            if (f.active) out[f.frame_index].emplace_back(t.track_id, f.doa.unit());
    return out;
}

// Offset large enough that one extra match always beats any distance saving.
inline constexpr double kMatchBonus = 1e6;

}  // namespace detail

/// Optimal matching of one frame. Returns pairs of (gt index, pred index).
inline std::vector<std::pair<std::size_t, std::size_t>> match_one_frame(const std::vector<Vec3>& gt,
                                                                        const std::vector<Vec3>& pred,
                                                                        double threshold_deg) {
    std::vector<double> cost(gt.size() * pred.size(), 0.0);
    std::vector<double> dist(cost.size());
    for (std::size_t i = 0; i < gt.size(); ++i)
        for (std::size_t j = 0; j < pred.size(); ++j) {
            const double d = angular_distance_unit(gt[i], pred[j]);
            dist[i * pred.size() + j] = d;
            if (d <= threshold_deg) cost[i * pred.size() + j] = d - detail::kMatchBonus;
        }
    const auto assign = solve_assignment(cost, gt.size(), pred.size());
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (assign[i] < 0) continue;
        const auto j = static_cast<std::size_t>(assign[i]);
        if (dist[i * pred.size() + j] <= threshold_deg) out.emplace_back(i, j);
    }
    return out;
}

inline FrameMatching match_frames(const std::vector<Trajectory>& gt, const std::vector<Trajectory>& predictions,
                                  double threshold_deg = kDefaultMatchThresholdDeg) {
    FrameMatching result;
    result.threshold_deg = threshold_deg;
    const auto g = detail::active_by_frame(gt);
    const auto p = detail::active_by_frame(predictions);
    std::set<int> frames;
    for (const auto& [k, _] : g) frames.insert(k);
    for (const auto& [k, _] : p) frames.insert(k);
    static const std::vector<std::pair<int, Vec3>> none;
    for (int k : frames) {
        const auto git = g.find(k);
        const auto pit = p.find(k);
        const auto& ga = git != g.end() ? git->second : none;
        const auto& pa = pit != p.end() ? pit->second : none;
        std::vector<Vec3> gv, pv;
        for (const auto& [_, v] : ga) gv.push_back(v);
        for (const auto& [_, v] : pa) pv.push_back(v);
        FrameMatch fm;
        fm.frame_index = k;
        std::vector<bool> gm(ga.size(), false), pm(pa.size(), false);
        for (auto [i, j] : match_one_frame(gv, pv, threshold_deg)) {
            fm.matches.push_back({ga[i].first, pa[j].first, angular_distance_unit(gv[i], pv[j])});
            gm[i] = pm[j] = true;
        }
        for (std::size_t i = 0; i < ga.size(); ++i)
            if (!gm[i]) fm.unmatched_gt.push_back(ga[i].first);
        for (std::size_t j = 0; j < pa.size(); ++j)
            if (!pm[j]) fm.unmatched_pred.push_back(pa[j].first);
        result.frames.push_back(std::move(fm));
    }
    return result;
}

/// HOTA association accuracy at a single threshold: the mean, over all true
/// positives c = (g, p), of TPA / (TPA + FNA + FPA). Zero when there are no TPs.
inline double assa(const FrameMatching& m) {
    std::map<int, double> gt_frames, pred_frames;
    std::map<std::pair<int, int>, double> tpa;
    for (const auto& f : m.frames) {
        for (const auto& mp : f.matches) {
            gt_frames[mp.gt_id] += 1.0;
            pred_frames[mp.pred_id] += 1.0;
            tpa[{mp.gt_id, mp.pred_id}] += 1.0;
        }
        for (int g : f.unmatched_gt) gt_frames[g] += 1.0;
        for (int p : f.unmatched_pred) pred_frames[p] += 1.0;
    }
    double weighted = 0.0, total = 0.0;
    for (const auto& [key, n] : tpa) {
        // FNA = |g| - TPA, FPA = |p| - TPA
        const double a = n / (gt_frames[key.first] + pred_frames[key.second] - n);
        weighted += n * a;
        total += n;
    }
    return total > 0.0 ? weighted / total : 0.0;
}

/// Mean angular distance over true positives; 0 when there are none.
inline double localization_error(const FrameMatching& m) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& f : m.frames)
        for (const auto& mp : f.matches) {
            sum += mp.distance_deg;
            ++n;
        }
    return n ? sum / static_cast<double>(n) : 0.0;
}

struct SwapFragmentation {
    std::size_t swaps = 0;
    std::size_t fragmentations = 0;
    double tsr = 0.0;  // swaps per second
    double tfr = 0.0;  // fragmentations per second
};

/// A fragmentation is a ground truth picked up by a different track than at its
/// previous match; a swap is a track picking up a different ground truth than
/// at its previous match. Rates are normalized by the scene duration.
inline SwapFragmentation swap_frag_rates(const FrameMatching& m, double scene_duration) {
    SwapFragmentation out;
    std::map<int, int> last_pred_of_gt, last_gt_of_pred;
    for (const auto& f : m.frames)
        for (const auto& mp : f.matches) {
            if (auto it = last_pred_of_gt.find(mp.gt_id); it != last_pred_of_gt.end() && it->second != mp.pred_id)
                ++out.fragmentations;
            if (auto it = last_gt_of_pred.find(mp.pred_id); it != last_gt_of_pred.end() && it->second != mp.gt_id)
                ++out.swaps;
            last_pred_of_gt[mp.gt_id] = mp.pred_id;
            last_gt_of_pred[mp.pred_id] = mp.gt_id;
        }
    if (scene_duration > 0.0) {
        out.tsr = static_cast<double>(out.swaps) / scene_duration;
        out.tfr = static_cast<double>(out.fragmentations) / scene_duration;
    }
    return out;
}

/// AssA averaged over several thresholds (HOTA-style integration).
inline double assa_multi_threshold(const std::vector<Trajectory>& gt, const std::vector<Trajectory>& pred,
                                   const std::vector<double>& thresholds_deg) {
    if (thresholds_deg.empty()) return 0.0;
    double acc = 0.0;
    for (double a : thresholds_deg) acc += assa(match_frames(gt, pred, a));
    return acc / static_cast<double>(thresholds_deg.size());
}

struct MetricsReport {
    double assa = 0.0;
    double le = 0.0;
    double tsr = 0.0;
    double tfr = 0.0;
    std::size_t tp = 0, fp = 0, fn = 0;
    std::size_t swaps = 0, fragmentations = 0;
    double duration = 0.0;
};

inline MetricsReport evaluate(const std::vector<Trajectory>& gt, const std::vector<Trajectory>& pred,
                              double scene_duration, double threshold_deg = kDefaultMatchThresholdDeg) {
    const FrameMatching m = match_frames(gt, pred, threshold_deg);
    const auto sf = swap_frag_rates(m, scene_duration);
    MetricsReport r;
    r.assa = assa(m);
    r.le = localization_error(m);
    r.tsr = sf.tsr;
    r.tfr = sf.tfr;
    r.tp = m.tp();
    r.fp = m.fp();
    r.fn = m.fn();
    r.swaps = sf.swaps;
    r.fragmentations = sf.fragmentations;
    r.duration = scene_duration;
    return r;
}

inline nlohmann::json to_json(const MetricsReport& r) {
    return {{"assa", r.assa}, {"le", r.le},   {"tsr", r.tsr},     {"tfr", r.tfr},
            {"tp", r.tp},     {"fp", r.fp},   {"fn", r.fn},       {"swaps", r.swaps},
            {"fragmentations", r.fragmentations}, {"duration", r.duration}};
}

// ---------------------------------------------------------------------------
// Bootstrap aggregation

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

struct BootstrapSummary {
    std::map<std::string, MeanStd> metrics;  // assa, le, tsr, tfr
    std::map<std::string, double> plain_mean;
    std::size_t scenes = 0;
    std::size_t draw_size = 0;
    int iterations = 0;
};

inline std::map<std::string, double> metric_values(const MetricsReport& r) {
    return {{"assa", r.assa}, {"le", r.le}, {"tsr", r.tsr}, {"tfr", r.tfr}};
}

/// Repeatedly averages random subsets of ceil(fraction * N) scenes drawn without
/// replacement and reports the mean and (population) standard deviation of
/// those subset means. Iteration i draws from derive_seed(seed, i, "bootstrap").
inline BootstrapSummary bootstrap(const std::vector<std::map<std::string, double>>& per_scene, double fraction,
                                  int iterations, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("bootstrap: fraction must be in (0, 1]");
    if (iterations < 1) throw ConfigError("bootstrap: need at least one iteration");
    BootstrapSummary out;
    out.scenes = per_scene.size();
    out.iterations = iterations;
    if (per_scene.empty()) return out;
    const std::size_t N = per_scene.size();
    const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(N) - 1e-9));
    out.draw_size = k;

    std::vector<std::string> keys;
    for (const auto& [name, _] : per_scene.front()) keys.push_back(name);
    for (const auto& key : keys) {
        double s = 0.0;
        for (const auto& row : per_scene) s += row.at(key);
        out.plain_mean[key] = s / static_cast<double>(N);
    }

    std::map<std::string, std::vector<double>> draws;
    std::vector<std::size_t> idx(N);
    for (int it = 0; it < iterations; ++it) {
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(it), "bootstrap"));
        for (std::size_t i = 0; i < k; ++i) {  // partial Fisher-Yates
            std::uniform_int_distribution<std::size_t> pick(i, N - 1);
            std::swap(idx[i], idx[pick(rng)]);
        }
        // Sum in index order so equal subsets give bit-identical means.
        std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
        for (const auto& key : keys) {
            double s = 0.0;
            for (std::size_t i = 0; i < k; ++i) s += per_scene[idx[i]].at(key);
            draws[key].push_back(s / static_cast<double>(k));
        }
    }
    for (const auto& [key, vals] : draws) {
        const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        var /= static_cast<double>(vals.size());
        // Identical inputs must give exactly zero spread.
        out.metrics[key] = {mean, var < 1e-30 ? 0.0 : std::sqrt(var)};
    }
    return out;
}

inline nlohmann::json to_json(const BootstrapSummary& b) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [k, v] : b.metrics) metrics[k] = {{"mean", v.mean}, {"std", v.std}};
    nlohmann::json plain = nlohmann::json::object();
    for (const auto& [k, v] : b.plain_mean) plain[k] = v;
    return {{"scenes", b.scenes},
            {"draw_size", b.draw_size},
            {"iterations", b.iterations},
            {"bootstrap", metrics},
            {"mean", plain}};
}

}  // namespace spktrack
