#pragma once

#include <algorithm>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spktrack/common.hpp"
#include "spktrack/doa.hpp"
#include "spktrack/tracking.hpp"

namespace spktrack {

/// A maximal run of active frames within one trajectory.
struct Fragment {
    int fragment_id = 0;
    int source_track_id = 0;
    int onset_frame = 0;
    int offset_frame = 0;  // inclusive
    std::vector<DoA> doas;  // one per covered frame
    DoA representative_doa;

    int length() const { return offset_frame - onset_frame + 1; }
    bool overlaps(const Fragment& o) const { return onset_frame <= o.offset_frame && o.onset_frame <= offset_frame; }
};

/// How much of a fragment feeds the embedder: all of it, or a prefix.
struct DurationPolicy {
    std::optional<int> prefix_ms;  // nullopt = whole

    static DurationPolicy whole() { return {}; }
    static DurationPolicy prefix(int ms) {
        if (ms <= 0) throw ConfigError("duration policy: prefix must be a positive number of milliseconds");
        return {ms};
    }
    bool is_whole() const { return !prefix_ms.has_value(); }

    std::string label() const { return is_whole() ? "whole" : std::to_string(*prefix_ms) + "ms"; }

    static DurationPolicy parse(const std::string& s) {
        if (s == "whole") return whole();
        std::string digits = s;
        if (digits.size() > 2 && digits.substr(digits.size() - 2) == "ms") digits.resize(digits.size() - 2);
        try {
            std::size_t pos = 0;
            const int ms = std::stoi(digits, &pos);
            if (pos != digits.size()) throw ConfigError("");
            return prefix(ms);
        } catch (const std::exception&) {
            throw ConfigError("invalid duration policy '" + s + "' (expected whole or <ms>)");
        }
    }
};

inline const std::vector<int>& standard_prefix_sweep() {
    static const std::vector<int> sweep{250, 500, 750, 1000, 1500};
    return sweep;
}

/// Splits trajectories into fragments. Runs of active frames separated by at
/// most `max_gap_frames` inactive frames are merged (0 = no merging).
/// Output is ordered by onset, ties broken by the lower track id.
inline std::vector<Fragment> segment(const std::vector<Trajectory>& trajectories, int max_gap_frames = 0) {
    std::vector<Fragment> out;
    for (const auto& t : trajectories) {
        std::optional<Fragment> cur;
        auto flush = [&] {
            if (cur) {
                cur->representative_doa = spherical_mean(cur->doas);
                out.push_back(std::move(*cur));
                cur.reset();
            }
        };
        for (const auto& f : t.frames) {
            if (!f.active) continue;
            if (cur && f.frame_index - cur->offset_frame - 1 <= max_gap_frames && f.frame_index > cur->offset_frame) {
                // Bridged gap frames get no DoA of their own; repeat the last one.
                for (int k = cur->offset_frame + 1; k < f.frame_index; ++k) cur->doas.push_back(cur->doas.back());
                cur->offset_frame = f.frame_index;
                cur->doas.push_back(f.doa);
                continue;
            }
            flush();
            cur = Fragment{0, t.track_id, f.frame_index, f.frame_index, {f.doa}, f.doa};
        }
        flush();
    }
    std::stable_sort(out.begin(), out.end(), [](const Fragment& a, const Fragment& b) {
        if (a.onset_frame != b.onset_frame) return a.onset_frame < b.onset_frame;
        return a.source_track_id < b.source_track_id;
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].fragment_id = static_cast<int>(i);
    return out;
}

struct TimeWindow {
    double start = 0.0;
    double end = 0.0;
    double length() const { return end - start; }
};

/// Time span of a fragment: frame k covers [k*hop, (k+1)*hop).
inline TimeWindow fragment_span(const Fragment& f, double hop) {
    return {f.onset_frame * hop, (f.offset_frame + 1) * hop};
}

/// Embedding window: the whole fragment, or its first prefix_ms clipped to the
/// fragment end.
inline TimeWindow extraction_window(const Fragment& f, const DurationPolicy& policy, double hop) {
    if (f.doas.empty() || f.offset_frame < f.onset_frame) throw DataError("extraction_window: empty fragment");
    TimeWindow w = fragment_span(f, hop);
    if (!policy.is_whole()) w.end = std::min(w.end, w.start + *policy.prefix_ms / 1000.0);
    return w;
}

/// Spherical mean of the fragment DoAs that fall inside `window`.
inline DoA window_doa(const Fragment& f, const TimeWindow& window, double hop) {
    std::vector<DoA> in;
    for (std::size_t i = 0; i < f.doas.size(); ++i) {
        const double t = (f.onset_frame + static_cast<int>(i)) * hop;
        if (t < window.end - 1e-9) in.push_back(f.doas[i]);
    }
    if (in.empty()) return f.representative_doa;
    return spherical_mean(in);
}

inline nlohmann::json to_json(const Fragment& f) {
    return {{"fragment_id", f.fragment_id},
            {"track_id", f.source_track_id},
            {"onset_frame", f.onset_frame},
            {"offset_frame", f.offset_frame},
            {"representative_doa", {f.representative_doa.azimuth, f.representative_doa.elevation}}};
}

inline void write_fragments_jsonl(std::ostream& os, const std::vector<Fragment>& fragments) {
    for (const auto& f : fragments) os << to_json(f).dump() << '\n';
}

}  // namespace spktrack
