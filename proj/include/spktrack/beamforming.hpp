#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spktrack/common.hpp"
#include "spktrack/doa.hpp"
#include "spktrack/foa.hpp"
#include "spktrack/fragment.hpp"
#include "spktrack/scene.hpp"
#include "spktrack/stft.hpp"
#include "spktrack/tracking.hpp"

namespace spktrack {

enum class BeamformerKind { ideal, ds, mvdr };

inline const char* to_string(BeamformerKind k) {
    switch (k) {
        case BeamformerKind::ideal: return "ideal";
        case BeamformerKind::ds: return "ds";
        case BeamformerKind::mvdr: return "mvdr";
    }
    return "?";
}

inline BeamformerKind parse_beamformer(const std::string& s) {
    if (s == "ideal") return BeamformerKind::ideal;
    if (s == "ds") return BeamformerKind::ds;
    if (s == "mvdr") return BeamformerKind::mvdr;
    throw ConfigError("unknown beamformer '" + s + "' (expected ideal|ds|mvdr)");
}

enum class NoiseCovarianceSource { oracle, gated };

inline const char* to_string(NoiseCovarianceSource s) { return s == NoiseCovarianceSource::oracle ? "oracle" : "gated"; }

inline NoiseCovarianceSource parse_noise_cov(const std::string& s) {
    if (s == "oracle") return NoiseCovarianceSource::oracle;
    if (s == "gated") return NoiseCovarianceSource::gated;
    throw ConfigError("unknown noise covariance source '" + s + "' (expected oracle|gated)");
}

using Vector4 = Eigen::Vector4cd;
using Matrix4 = Eigen::Matrix4cd;

inline Vector4 steering(const DoA& doa) {
    const auto d = steering_vector(doa);
    return Vector4(d[0], d[1], d[2], d[3]);
}

/// Delay-and-sum weights for FOA: w = d / |d|^2 = d / 2.
inline std::array<double, kFoaChannels> ds_weights(const DoA& doa) {
    auto d = steering_vector(doa);
    for (auto& v : d) v *= 0.5;
    return d;
}

/// Broadband FOA delay-and-sum: y = w^T x per sample.
inline std::vector<float> beamform_ds(const FoaSignal& mixture, const DoA& doa) {
    const auto w = ds_weights(doa);
    std::vector<float> out(mixture.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < kFoaChannels; ++c) acc += w[c] * mixture.channels[c][i];
        out[i] = static_cast<float>(acc);
    }
    return out;
}

/// Per-band spatial covariance with the number of frames averaged.
struct BandCovariance {
    std::vector<Matrix4> R;
    std::size_t frames = 0;
};

struct MvdrDiagnostics {
    std::size_t band_fallbacks = 0;      // bands solved as DS because R was singular
    std::size_t fragment_fallbacks = 0;  // whole fragments solved as DS (too little estimation material)
};

inline constexpr double kDiagonalLoading = 1e-3;
inline constexpr std::size_t kMinCovarianceFrames = 10;

namespace detail {

inline std::array<Spectrogram, kFoaChannels> analyze_foa(const Stft& stft, const FoaSignal& x) {
    std::array<Spectrogram, kFoaChannels> out;
    for (std::size_t c = 0; c < kFoaChannels; ++c) out[c] = stft.analyze(x.channels[c]);
    return out;
}

}  // namespace detail

/// Sample covariance over every padded STFT frame of `x`.
inline BandCovariance estimate_covariance(const Stft& stft, const FoaSignal& x) {
    const auto spec = detail::analyze_foa(stft, x);
    BandCovariance cov;
    cov.R.assign(stft.num_bins(), Matrix4::Zero());
    cov.frames = spec[0].size();
    Vector4 y;
    for (std::size_t t = 0; t < cov.frames; ++t)
        for (std::size_t f = 0; f < stft.num_bins(); ++f) {
            for (std::size_t c = 0; c < kFoaChannels; ++c) y[static_cast<Eigen::Index>(c)] = spec[c][t][f];
            cov.R[f].noalias() += y * y.adjoint();
        }
    if (cov.frames > 0)
        for (auto& R : cov.R) R /= static_cast<double>(cov.frames);
    return cov;
}

/// MVDR weights w = R^-1 d / (d^H R^-1 d) after loading R with
/// eps * tr(R) / 4 * I. Returns false (and the DS weights) when the loaded
/// covariance is singular.
inline bool mvdr_weights(const Matrix4& R, const Vector4& d, Vector4& w, double eps = kDiagonalLoading) {
    const double tr = R.trace().real();
    if (!(tr > 1e-30) || !std::isfinite(tr)) {
        w = d / d.squaredNorm();
        return false;
    }
    Matrix4 loaded = R;
    loaded.diagonal().array() += eps * tr / 4.0;
    Eigen::LLT<Matrix4> llt(loaded);
    if (llt.info() != Eigen::Success) {
        w = d / d.squaredNorm();
        return false;
    }
    const Vector4 x = llt.solve(d);
    const Complex denom = d.dot(x);  // d^H R^-1 d
    if (!(std::abs(denom) > 0.0) || !std::isfinite(std::abs(denom))) {
        w = d / d.squaredNorm();
        return false;
    }
    w = x / denom;
    return true;
}

/// Per-band MVDR over the padded STFT of `mixture`, inverse-transformed back
/// to `mixture.size()` samples.
inline std::vector<float> beamform_mvdr(const Stft& stft, const FoaSignal& mixture, const DoA& doa,
                                        const BandCovariance& noise, MvdrDiagnostics* diag = nullptr) {
    const Vector4 d = steering(doa);
    if (noise.frames < kMinCovarianceFrames || noise.R.size() != stft.num_bins()) {
        if (diag) ++diag->fragment_fallbacks;
        return beamform_ds(mixture, doa);
    }
    std::vector<Vector4> w(stft.num_bins());
    for (std::size_t f = 0; f < w.size(); ++f)
        if (!mvdr_weights(noise.R[f], d, w[f]) && diag) ++diag->band_fallbacks;

    const auto spec = detail::analyze_foa(stft, mixture);
    Spectrogram out(spec[0].size(), Spectrum(stft.num_bins()));
    Vector4 y;
    for (std::size_t t = 0; t < out.size(); ++t)
        for (std::size_t f = 0; f < stft.num_bins(); ++f) {
            for (std::size_t c = 0; c < kFoaChannels; ++c) y[static_cast<Eigen::Index>(c)] = spec[c][t][f];
            out[t][f] = w[f].dot(y);  // w^H y
        }
    return stft.synthesize(out, mixture.size());
}

// ---------------------------------------------------------------------------
// Noise covariance estimation

inline std::size_t to_sample(double seconds, double fs) { return static_cast<std::size_t>(std::max(0.0, std::round(seconds * fs))); }

/// Oracle covariance: noise plus interferers (mixture minus the target wet
/// signal) over the window, widened symmetrically when the window holds fewer
/// than the minimum number of STFT frames.
inline BandCovariance oracle_noise_covariance(const Stft& stft, const FoaSignal& mixture, const FoaSignal& target_wet,
                                              std::size_t begin, std::size_t end) {
    const std::size_t min_len = stft.hop() * (kMinCovarianceFrames - 1);
    if (end - begin < min_len) {
        const std::size_t grow = (min_len - (end - begin) + 1) / 2;
        begin = begin > grow ? begin - grow : 0;
        end = std::min(mixture.size(), begin + std::max(min_len, end - begin + 2 * grow));
    }
    FoaSignal residual = mixture.slice(begin, end);
    const FoaSignal target = target_wet.slice(begin, end);
    for (std::size_t c = 0; c < kFoaChannels; ++c)
        for (std::size_t i = 0; i < residual.channels[c].size() && i < target.channels[c].size(); ++i)
            residual.channels[c][i] -= target.channels[c][i];
    return estimate_covariance(stft, residual);
}

/// Activity-gated estimator: for every track, averages the mixture covariance
/// over STFT frames during which that track is not active.
class GatedCovarianceEstimator {
public:
    GatedCovarianceEstimator(const Stft& stft, const FoaSignal& mixture, const std::vector<Trajectory>& tracks,
                             double hop) {
        const int num_frames = frame_count(mixture.duration(), hop) + 1;
        std::vector<std::vector<char>> active(tracks.size(), std::vector<char>(static_cast<std::size_t>(num_frames), 0));
        for (std::size_t k = 0; k < tracks.size(); ++k) {
            ids_.push_back(tracks[k].track_id);
            for (const auto& f : tracks[k].frames)
                if (f.active && f.frame_index >= 0 && f.frame_index < num_frames)
                    active[k][static_cast<std::size_t>(f.frame_index)] = 1;
        }
        const std::size_t bins = stft.num_bins();
        Matrix4 zero = Matrix4::Zero();
        std::vector<Matrix4> total(bins, zero);
        per_track_.assign(tracks.size(), BandCovariance{std::vector<Matrix4>(bins, zero), 0});
        std::vector<BandCovariance> active_sum(tracks.size(), BandCovariance{std::vector<Matrix4>(bins, zero), 0});

        const std::size_t frames = stft.padded_frame_count(mixture.size());
        std::array<Spectrum, kFoaChannels> spec;
        Vector4 y;
        std::vector<Matrix4> outer(bins);
        for (std::size_t t = 0; t < frames; ++t) {
            for (std::size_t c = 0; c < kFoaChannels; ++c) stft.analyze_frame(mixture.channels[c], t, spec[c]);
            for (std::size_t f = 0; f < bins; ++f) {
                for (std::size_t c = 0; c < kFoaChannels; ++c) y[static_cast<Eigen::Index>(c)] = spec[c][f];
                outer[f].noalias() = y * y.adjoint();
                total[f] += outer[f];
            }
            const double centre = stft.frame_center(t) / mixture.sample_rate;
            const int k = std::clamp(static_cast<int>(std::floor(centre / hop)), 0, num_frames - 1);
            for (std::size_t tr = 0; tr < tracks.size(); ++tr) {
                if (!active[tr][static_cast<std::size_t>(k)]) continue;
                for (std::size_t f = 0; f < bins; ++f) active_sum[tr].R[f] += outer[f];
                ++active_sum[tr].frames;
            }
        }
        // Inactive = all frames minus active frames.
        for (std::size_t tr = 0; tr < tracks.size(); ++tr) {
            auto& cov = per_track_[tr];
            cov.frames = frames - active_sum[tr].frames;
            for (std::size_t f = 0; f < bins; ++f) {
                cov.R[f] = total[f] - active_sum[tr].R[f];
                if (cov.frames > 0) cov.R[f] /= static_cast<double>(cov.frames);
            }
        }
    }

    /// Covariance for a track id; an unknown id yields an empty estimate.
    BandCovariance for_track(int track_id) const {
        for (std::size_t i = 0; i < ids_.size(); ++i)
            if (ids_[i] == track_id) return per_track_[i];
        return {};
    }

private:
    std::vector<int> ids_;
    std::vector<BandCovariance> per_track_;
};

// ---------------------------------------------------------------------------
// Ideal (oracle wet signal) beamformer

/// Speaker whose ground-truth position at the window midpoint is nearest to
/// `doa`. When nobody is active at the midpoint, each speaker is represented by
/// the segment closest in time. Ties go to the lower speaker index.
inline std::size_t ideal_speaker(const std::vector<SpeakerGroundTruth>& gt, const DoA& doa, const TimeWindow& window) {
    if (gt.empty()) throw DataError("ideal beamformer: scene has no speakers");
    const double mid = 0.5 * (window.start + window.end);
    auto pick = [&](bool active_only) -> std::optional<std::size_t> {
        std::optional<std::size_t> best;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < gt.size(); ++j) {
            const Segment* seg = gt[j].active_at(mid);
            if (!seg && !active_only) {
                double best_gap = std::numeric_limits<double>::infinity();
                for (const auto& s : gt[j].segments) {
                    const double gap = mid < s.onset ? s.onset - mid : std::max(0.0, mid - s.offset);
                    if (gap < best_gap) {
                        best_gap = gap;
                        seg = &s;
                    }
                }
            }
            if (!seg) continue;
            const double dist = angular_distance(seg->doa, doa);
            if (dist < best_d) {
                best_d = dist;
                best = j;
            }
        }
        return best;
    };
    if (auto j = pick(true)) return *j;
    if (auto j = pick(false)) return *j;
    return 0;
}

inline std::vector<float> beamform_ideal(const std::vector<FoaSignal>& wet, const std::vector<SpeakerGroundTruth>& gt,
                                         const DoA& doa, const TimeWindow& window) {
    if (wet.size() != gt.size()) throw DataError("ideal beamformer: one wet signal per speaker is required");
    const std::size_t j = ideal_speaker(gt, doa, window);
    const auto& w = wet[j].channels[kW];
    const std::size_t begin = std::min(w.size(), to_sample(window.start, wet[j].sample_rate));
    const std::size_t end = std::min(w.size(), to_sample(window.end, wet[j].sample_rate));
    return {w.begin() + static_cast<std::ptrdiff_t>(begin), w.begin() + static_cast<std::ptrdiff_t>(std::max(begin, end))};
}

}  // namespace spktrack
