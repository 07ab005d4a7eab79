#pragma once

// Small helpers shared by the unit and acceptance tests.

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "spktrack/spktrack.hpp"

namespace testsupport {

using namespace spktrack;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("spktrack_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

// Trajectory active on [first, last] at a fixed direction.
inline Trajectory constant_track(int id, int first, int last, DoA doa) {
    Trajectory t;
    t.track_id = id;
    for (int k = first; k <= last; ++k) t.frames.push_back({k, doa, true});
    return t;
}

// Appends active frames [first, last] at `doa` to `t`.
inline void extend(Trajectory& t, int first, int last, DoA doa) {
    for (int k = first; k <= last; ++k) t.frames.push_back({k, doa, true});
}

inline SpeakerGroundTruth speaker(int id, std::initializer_list<Segment> segs) {
    SpeakerGroundTruth s;
    s.speaker_id = id;
    s.segments = segs;
    return s;
}

inline std::vector<float> white_noise(std::size_t n, std::uint64_t seed, double sigma = 1.0) {
    Rng rng = make_rng(seed);
    std::normal_distribution<double> g(0.0, sigma);
    std::vector<float> out(n);
    for (auto& v : out) v = static_cast<float>(g(rng));
    return out;
}

inline double power_db(const std::vector<float>& x) { return 10.0 * std::log10(mean_power(x) + 1e-300); }

}  // namespace testsupport
