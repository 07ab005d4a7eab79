#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "spktrack/common.hpp"
#include "spktrack/embedding.hpp"
#include "spktrack/fragment.hpp"
#include "spktrack/tracking.hpp"

namespace spktrack {

struct FragmentDecision {
    int fragment_id = 0;
    std::size_t pool_index = 0;
    std::string identity;
    double score = 0.0;  // cosine; NaN when the spatial fallback decided
    std::vector<std::string> excluded;
    double window_seconds = 0.0;
    bool spatial_fallback = false;
};

struct AssignmentResult {
    std::map<int, std::string> assignments;  // fragment_id -> identity
    std::vector<Trajectory> new_trajectories;  // track_id = pool index
    std::vector<FragmentDecision> diagnostics;  // in processing order
};

/// First-in-first-out reassignment. Fragments are visited by onset (ties: lower
/// source track id); each takes the enrolled identity with the highest cosine
/// score among those not already held by an overlapping, previously assigned
/// fragment (ties: lower pool index). A fragment without an embedding takes the
/// identity of the spatially nearest previously assigned fragment that is still
/// admissible, or else the first admissible identity.
///
/// `embeddings[i]` belongs to `fragments[i]`; `window_seconds`, when given, is
/// only echoed into the diagnostics.
inline AssignmentResult reassign(const std::vector<Fragment>& fragments,
                                 const std::vector<std::optional<Embedding>>& embeddings, const EnrollmentPool& pool,
                                 const std::vector<double>& window_seconds = {}) {
    if (embeddings.size() != fragments.size()) throw DataError("reassign: one embedding slot per fragment is required");
    if (pool.empty() && !fragments.empty()) throw AssignmentError("reassign: empty enrollment pool");

    std::vector<std::size_t> order(fragments.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (fragments[a].onset_frame != fragments[b].onset_frame) return fragments[a].onset_frame < fragments[b].onset_frame;
        return fragments[a].source_track_id < fragments[b].source_track_id;
    });

    AssignmentResult result;
    std::vector<std::optional<std::size_t>> chosen(fragments.size());
    std::vector<std::size_t> done;
    for (std::size_t idx : order) {
        const Fragment& frag = fragments[idx];
        std::vector<bool> blocked(pool.size(), false);
        for (std::size_t prev : done)
            if (fragments[prev].overlaps(frag)) blocked[*chosen[prev]] = true;

        FragmentDecision dec;
        dec.fragment_id = frag.fragment_id;
        dec.window_seconds = idx < window_seconds.size() ? window_seconds[idx] : 0.0;
        for (std::size_t p = 0; p < pool.size(); ++p)
            if (blocked[p]) dec.excluded.push_back(pool.entries[p].identity);
        if (dec.excluded.size() == pool.size())
            throw AssignmentError("reassign: no admissible identity for fragment " + std::to_string(frag.fragment_id) +
                                  " (overlap degree exceeds pool size " + std::to_string(pool.size()) + ")");

        std::optional<std::size_t> pick;
        if (const auto& emb = embeddings[idx]) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t p = 0; p < pool.size(); ++p) {
                if (blocked[p]) continue;
                const double s = cosine(*emb, pool.entries[p].embedding);
                if (s > best) {
                    best = s;
                    pick = p;
                }
            }
            dec.score = best;
        } else {
            dec.spatial_fallback = true;
            dec.score = std::numeric_limits<double>::quiet_NaN();
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t prev : done) {
                if (blocked[*chosen[prev]]) continue;
                const double d = angular_distance(fragments[prev].representative_doa, frag.representative_doa);
                if (d < best) {
                    best = d;
                    pick = chosen[prev];
                }
            }
            if (!pick)
                for (std::size_t p = 0; p < pool.size() && !pick; ++p)
                    if (!blocked[p]) pick = p;
        }

        chosen[idx] = pick;
        dec.pool_index = *pick;
        dec.identity = pool.entries[*pick].identity;
        result.assignments[frag.fragment_id] = dec.identity;
        result.diagnostics.push_back(std::move(dec));
        done.push_back(idx);
    }

    std::map<std::size_t, Trajectory> by_identity;
    for (std::size_t i = 0; i < fragments.size(); ++i) {
        auto& t = by_identity[*chosen[i]];
        t.track_id = static_cast<int>(*chosen[i]);
        for (std::size_t k = 0; k < fragments[i].doas.size(); ++k)
            t.frames.push_back({fragments[i].onset_frame + static_cast<int>(k), fragments[i].doas[k], true});
    }
    for (auto& [p, t] : by_identity) {
        std::sort(t.frames.begin(), t.frames.end(),
                  [](const TrajectoryFrame& a, const TrajectoryFrame& b) { return a.frame_index < b.frame_index; });
        result.new_trajectories.push_back(std::move(t));
    }
    return result;
}

inline nlohmann::json to_json(const AssignmentResult& r, const EnrollmentPool& pool) {
    nlohmann::json assignments = nlohmann::json::object();
    for (const auto& [fid, id] : r.assignments) assignments[std::to_string(fid)] = id;
    nlohmann::json diags = nlohmann::json::array();
    for (const auto& d : r.diagnostics)
        diags.push_back({{"fragment_id", d.fragment_id},
                         {"identity", d.identity},
                         {"pool_index", d.pool_index},
                         {"score", d.spatial_fallback ? nlohmann::json(nullptr) : nlohmann::json(d.score)},
                         {"excluded", d.excluded},
                         {"window_seconds", d.window_seconds},
                         {"spatial_fallback", d.spatial_fallback}});
    nlohmann::json identities = nlohmann::json::array();
    for (const auto& e : pool.entries) identities.push_back(e.identity);
    nlohmann::json trajectories = nlohmann::json::array();
    for (const auto& t : r.new_trajectories) trajectories.push_back(to_json(t));
    return {{"pool_identities", identities},
            {"assignments", assignments},
            {"diagnostics", diags},
            {"trajectories", trajectories}};
}

}  // namespace spktrack
