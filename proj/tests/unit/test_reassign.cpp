#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace spktrack;
using namespace testsupport;

namespace {

Embedding unit(std::vector<double> v) { return Embedding::from_raw(std::move(v)); }

EnrollmentPool two_pool() {
    EnrollmentPool p;
    p.add("A", unit({1, 0, 0}));
    p.add("B", unit({0, 1, 0}));
    return p;
}

using Multiset = std::multiset<std::tuple<int, double, double>>;

Multiset frame_content(const std::vector<Trajectory>& ts) {
    Multiset out;
    for (const auto& t : ts)
        for (const auto& f : t.frames) out.insert({f.frame_index, f.doa.azimuth, f.doa.elevation});
    return out;
}

Multiset frame_content(const std::vector<Fragment>& fs) {
    Multiset out;
    for (const auto& f : fs)
        for (std::size_t k = 0; k < f.doas.size(); ++k)
            out.insert({f.onset_frame + static_cast<int>(k), f.doas[k].azimuth, f.doas[k].elevation});
    return out;
}

}  // namespace

TEST(Reassign, SplitSpeakerRejoined) {
    // Speaker A tracked as track 0 (frames 0-29), then after a jump as track 2 (40-59);
    // speaker B is track 1 throughout.
    const auto frags = segment({constant_track(0, 0, 29, {0, 0}), constant_track(1, 0, 59, {120, 0}),
                                constant_track(2, 40, 59, {-60, 0})});
    ASSERT_EQ(frags.size(), 3u);
    std::vector<std::optional<Embedding>> emb;
    for (const auto& f : frags)
        emb.emplace_back(f.source_track_id == 1 ? unit({0.1, 0.9, 0.1}) : unit({0.8, 0.3, 0.2}));
    const auto r = reassign(frags, emb, two_pool());
    EXPECT_EQ(r.assignments.at(0), "A");
    EXPECT_EQ(r.assignments.at(1), "B");
    EXPECT_EQ(r.assignments.at(2), "A");
    ASSERT_EQ(r.new_trajectories.size(), 2u);
    EXPECT_EQ(r.new_trajectories[0].track_id, 0);
    EXPECT_EQ(r.new_trajectories[0].frames.size(), 50u);
    EXPECT_EQ(r.new_trajectories[1].frames.size(), 60u);
}

TEST(Reassign, OverlapForcesDistinctIdentities) {
    const auto frags = segment({constant_track(0, 0, 9, {0, 0}), constant_track(1, 0, 9, {90, 0})});
    // Both fragments look like A, the second even more so.
    const std::vector<std::optional<Embedding>> emb{unit({0.9, 0.1, 0}), unit({1, 0, 0})};
    const auto r = reassign(frags, emb, two_pool());
    EXPECT_EQ(r.assignments.at(0), "A");
    EXPECT_EQ(r.assignments.at(1), "B");
    EXPECT_EQ(r.diagnostics[1].excluded, std::vector<std::string>{"A"});
}

TEST(Reassign, SingleFragmentSingleIdentity) {
    EnrollmentPool p;
    p.add("only", unit({0, 0, 1}));
    const auto frags = segment({constant_track(3, 5, 9, {0, 0})});
    const auto r = reassign(frags, {unit({1, 0, 0})}, p);
    EXPECT_EQ(r.assignments.at(0), "only");
    ASSERT_EQ(r.new_trajectories.size(), 1u);
}

TEST(Reassign, ScoreTieGoesToLowerPoolIndex) {
    const auto frags = segment({constant_track(0, 0, 9, {0, 0})});
    const auto r = reassign(frags, {unit({1, 1, 0})}, two_pool());
    EXPECT_EQ(r.assignments.at(0), "A");
}

TEST(Reassign, OverlapDegreeAboveMIsHardError) {
    const auto frags = segment({constant_track(0, 0, 9, {0, 0}), constant_track(1, 0, 9, {90, 0}),
                                constant_track(2, 5, 9, {180, 0})});
    const std::vector<std::optional<Embedding>> emb(3, unit({1, 0, 0}));
    try {
        reassign(frags, emb, two_pool());
        FAIL();
    } catch (const AssignmentError& e) {
        EXPECT_NE(std::string(e.what()).find("fragment 2"), std::string::npos) << e.what();
    }
}

TEST(Reassign, MissingEmbeddingUsesSpatialFallback) {
    const auto frags = segment({constant_track(0, 0, 9, {0, 0}), constant_track(1, 0, 9, {90, 0}),
                                constant_track(2, 20, 21, {85, 0})});
    const std::vector<std::optional<Embedding>> emb{unit({0, 1, 0}), unit({1, 0, 0}), std::nullopt};
    const auto r = reassign(frags, emb, two_pool());
    EXPECT_EQ(r.assignments.at(0), "B");
    EXPECT_EQ(r.assignments.at(1), "A");
    // Nearest previously assigned fragment (90 deg) holds A.
    EXPECT_EQ(r.assignments.at(2), "A");
    EXPECT_TRUE(r.diagnostics[2].spatial_fallback);
}

TEST(Reassign, FallbackRespectsExclusion) {
    const auto frags = segment({constant_track(0, 0, 9, {0, 0}), constant_track(1, 5, 9, {2, 0})});
    const std::vector<std::optional<Embedding>> emb{unit({1, 0, 0}), std::nullopt};
    const auto r = reassign(frags, emb, two_pool());
    EXPECT_EQ(r.assignments.at(0), "A");
    EXPECT_EQ(r.assignments.at(1), "B");
}

TEST(Reassign, RandomInstancesKeepInvariants) {
    Rng rng = make_rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const int M = 2 + trial % 4;
        EnrollmentPool pool;
        for (int p = 0; p < M; ++p) {
            std::vector<double> v(6);
            for (auto& x : v) x = uniform(rng, -1, 1);
            pool.add("id" + std::to_string(p), unit(v));
        }
        // At most M tracks, so the overlap degree never exceeds M.
        std::vector<Trajectory> tracks;
        for (int t = 0; t < M; ++t) {
            Trajectory tr;
            tr.track_id = t;
            for (int k = 0; k < 80; ++k) {
                const bool on = uniform(rng, 0, 1) < 0.7;
                tr.frames.push_back({k, {uniform(rng, -180, 180), 0.0}, on});
            }
            tracks.push_back(tr);
        }
        const auto frags = segment(tracks);
        std::vector<std::optional<Embedding>> emb;
        for (std::size_t i = 0; i < frags.size(); ++i) {
            if (uniform(rng, 0, 1) < 0.1) {
                emb.emplace_back(std::nullopt);
                continue;
            }
            std::vector<double> v(6);
            for (auto& x : v) x = uniform(rng, -1, 1);
            emb.emplace_back(unit(v));
        }
        const auto r = reassign(frags, emb, pool);
        ASSERT_EQ(r.assignments.size(), frags.size());
        std::set<std::string> ids;
        for (const auto& e : pool.entries) ids.insert(e.identity);
        for (const auto& [fid, id] : r.assignments) EXPECT_TRUE(ids.count(id));
        EXPECT_LE(r.new_trajectories.size(), static_cast<std::size_t>(M));
        for (std::size_t a = 0; a < frags.size(); ++a)
            for (std::size_t b = a + 1; b < frags.size(); ++b)
                if (frags[a].overlaps(frags[b])) {
                    EXPECT_NE(r.assignments.at(frags[a].fragment_id), r.assignments.at(frags[b].fragment_id));
                }
        EXPECT_EQ(frame_content(r.new_trajectories), frame_content(frags));
    }
}

TEST(Reassign, RelabelingTracksWithDistinctOnsets) {
    std::vector<Trajectory> ts{constant_track(0, 0, 9, {0, 0}), constant_track(1, 3, 12, {90, 0}),
                               constant_track(2, 15, 20, {-90, 0}), constant_track(3, 11, 30, {180, 0})};
    const auto pool = [] {
        EnrollmentPool p;
        p.add("A", unit({1, 0, 0}));
        p.add("B", unit({0, 1, 0}));
        p.add("C", unit({0, 0, 1}));
        return p;
    }();
    auto run = [&](const std::vector<Trajectory>& tracks) {
        const auto frags = segment(tracks);
        std::vector<std::optional<Embedding>> emb;
        for (const auto& f : frags) emb.emplace_back(unit({1.0 + f.onset_frame % 3, 0.5, 0.2 * f.onset_frame}));
        const auto r = reassign(frags, emb, pool);
        std::map<int, std::string> by_onset;
        for (const auto& f : frags) by_onset[f.onset_frame] = r.assignments.at(f.fragment_id);
        return by_onset;
    };
    const auto base = run(ts);
    auto relabeled = ts;
    const int perm[] = {3, 0, 2, 1};
    for (std::size_t i = 0; i < relabeled.size(); ++i) relabeled[i].track_id = perm[i];
    EXPECT_EQ(run(relabeled), base);
}

TEST(Reassign, InputValidation) {
    const auto frags = segment({constant_track(0, 0, 9, {0, 0})});
    EXPECT_THROW(reassign(frags, {}, two_pool()), DataError);
    EXPECT_THROW(reassign(frags, {unit({1, 0, 0})}, EnrollmentPool{}), AssignmentError);
    EXPECT_TRUE(reassign({}, {}, EnrollmentPool{}).new_trajectories.empty());
}

TEST(Reassign, JsonCarriesDiagnostics) {
    const auto frags = segment({constant_track(0, 0, 9, {0, 0})});
    const auto pool = two_pool();
    const auto r = reassign(frags, {unit({0, 1, 0})}, pool, {1.0});
    const auto j = to_json(r, pool);
    EXPECT_EQ(j.at("assignments").at("0"), "B");
    EXPECT_EQ(j.at("diagnostics").at(0).at("window_seconds"), 1.0);
    EXPECT_EQ(j.at("trajectories").size(), 1u);
}
