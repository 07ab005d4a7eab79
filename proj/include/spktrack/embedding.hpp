#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "spktrack/common.hpp"
#include "spktrack/doa.hpp"
#include "spktrack/foa.hpp"
#include "spktrack/rng.hpp"
#include "spktrack/stft.hpp"
#include "spktrack/voice.hpp"

namespace spktrack {

/// Unit-norm speaker vector.
class Embedding {
public:
    Embedding() = default;

    /// Normalizes `raw`; throws if it is empty, non-finite or zero.
    static Embedding from_raw(std::vector<double> raw) {
        double n2 = 0.0;
        for (double v : raw) {
            if (!std::isfinite(v)) throw DataError("embedding: non-finite component");
            n2 += v * v;
        }
        if (raw.empty() || !(n2 > 0.0)) throw DataError("embedding: zero vector cannot be normalized");
        const double inv = 1.0 / std::sqrt(n2);
        for (double& v : raw) v *= inv;
        Embedding e;
        e.values_ = std::move(raw);
        return e;
    }

    std::size_t dim() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

private:
    std::vector<double> values_;
};

inline double cosine(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim())
        throw DataError("cosine: dimension mismatch (" + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) acc += a[i] * b[i];
    return std::clamp(acc, -1.0, 1.0);
}

struct EnrollmentEntry {
    std::string identity;
    Embedding embedding;
};

struct EnrollmentPool {
    std::vector<EnrollmentEntry> entries;

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }
    std::size_t dim() const { return entries.empty() ? 0 : entries.front().embedding.dim(); }

    void add(std::string identity, Embedding e) {
        for (const auto& x : entries)
            if (x.identity == identity) throw DataError("enrollment: duplicate identity '" + identity + "'");
        if (!entries.empty() && e.dim() != dim()) throw DataError("enrollment: dimension mismatch for '" + identity + "'");
        entries.push_back({std::move(identity), std::move(e)});
    }
};

// ---------------------------------------------------------------------------
// Reference embedder: log mel-band energy statistics.

struct EmbedderConfig {
    int num_bands = 24;
    double low_hz = 100.0;
    double high_hz = 7600.0;
    StftConfig stft{};
    // Subtract the average feature vector of a fixed panel of voices drawn
    // from the synthesis prior before normalizing.
    bool population_centering = true;
    double energy_floor_db = -20.0;

    std::size_t dim() const { return static_cast<std::size_t>(2 * num_bands); }
};

namespace detail {

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters, rows = bands, cols = FFT bins.
inline std::vector<std::vector<double>> mel_filterbank(const EmbedderConfig& cfg, double fs, std::size_t nfft) {
    const std::size_t bins = nfft / 2 + 1;
    const double high = std::min(cfg.high_hz, fs / 2.0);
    const double mlo = hz_to_mel(cfg.low_hz), mhi = hz_to_mel(high);
    std::vector<double> edges(static_cast<std::size_t>(cfg.num_bands) + 2);
    for (std::size_t i = 0; i < edges.size(); ++i)
        edges[i] = mel_to_hz(mlo + (mhi - mlo) * static_cast<double>(i) / static_cast<double>(edges.size() - 1));
    std::vector<std::vector<double>> fb(static_cast<std::size_t>(cfg.num_bands), std::vector<double>(bins, 0.0));
    for (std::size_t b = 0; b < fb.size(); ++b) {
        const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
        for (std::size_t k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * fs / static_cast<double>(nfft);
            if (f > lo && f <= mid)
                fb[b][k] = (f - lo) / (mid - lo);
            else if (f > mid && f < hi)
                fb[b][k] = (hi - f) / (hi - mid);
        }
    }
    return fb;
}

}  // namespace detail

/// Deterministic embedder: per-band temporal mean of log energy followed by the
/// per-band temporal standard deviation of log energy. Each block is centred on
/// its own mean (gain only shifts the mean-log block, so this cancels it), the
/// average vector of a fixed voice panel is subtracted, and the result is
/// L2-normalized.
class ReferenceEmbedder {
public:
    explicit ReferenceEmbedder(double sample_rate, EmbedderConfig cfg = {})
        : cfg_(cfg), fs_(sample_rate), stft_(sample_rate, cfg.stft),
          filterbank_(detail::mel_filterbank(cfg, sample_rate, stft_.window_length())) {
        if (cfg.population_centering) offset_ = population_mean(cfg, sample_rate);
    }

    std::size_t dim() const { return cfg_.dim(); }
    std::size_t min_samples() const { return stft_.window_length() + 2 * stft_.hop(); }
    double sample_rate() const { return fs_; }

    Embedding embed(std::span<const float> signal) const {
        std::vector<double> feat = features(signal);
        for (std::size_t i = 0; i < offset_.size(); ++i) feat[i] -= offset_[i];
        double n2 = 0.0;
        for (double v : feat) n2 += v * v;
        if (!(n2 > 1e-18) || !std::isfinite(n2)) throw InsufficientSignalError("embed: signal carries no spectral structure");
        return Embedding::from_raw(std::move(feat));
    }

    /// Centred statistics before population centring and normalization.
    std::vector<double> features(std::span<const float> signal) const {
        const Spectrogram spec = stft_.analyze_valid(signal);
        if (spec.size() < 3)
            throw InsufficientSignalError("embed: need at least 3 analysis frames, got " + std::to_string(spec.size()));
        const std::size_t B = filterbank_.size();
        std::vector<double> sum(B, 0.0), sum2(B, 0.0);
        std::vector<double> energy(spec.size() * B);
        double total = 0.0;
        for (std::size_t t = 0; t < spec.size(); ++t) {
            const auto& frame = spec[t];
            for (std::size_t b = 0; b < B; ++b) {
                double e = 0.0;
                const auto& w = filterbank_[b];
                for (std::size_t k = 0; k < frame.size(); ++k)
                    if (w[k] != 0.0) e += w[k] * std::norm(frame[k]);
                energy[t * B + b] = e;
                total += e;
            }
        }
        // Silence would otherwise come out as minus the population mean.
        if (!(total > 0.0) || !std::isfinite(total)) throw InsufficientSignalError("embed: silent input");
        // Band energies are floored relative to the average band energy, which
        // keeps the floor gain-invariant and hides bands only noise would fill.
        const double floor =
            total / static_cast<double>(spec.size() * B) * std::pow(10.0, cfg_.energy_floor_db / 10.0) + 1e-30;
        for (std::size_t t = 0; t < spec.size(); ++t)
            for (std::size_t b = 0; b < B; ++b) {
                const double l = std::log(std::max(energy[t * B + b], floor));
                sum[b] += l;
                sum2[b] += l * l;
            }
        const double T = static_cast<double>(spec.size());
        std::vector<double> feat(2 * B);
        double mean_of_means = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            feat[b] = sum[b] / T;
            mean_of_means += feat[b];
            feat[B + b] = std::sqrt(std::max(0.0, sum2[b] / T - feat[b] * feat[b]));
        }
        mean_of_means /= static_cast<double>(B);
        double mean_of_stds = 0.0;
        for (std::size_t b = 0; b < B; ++b) mean_of_stds += feat[B + b];
        mean_of_stds /= static_cast<double>(B);
        for (std::size_t b = 0; b < B; ++b) {
            feat[b] -= mean_of_means;
            feat[B + b] -= mean_of_stds;
        }
        return feat;
    }

private:
    EmbedderConfig cfg_;
    double fs_;
    Stft stft_;
    std::vector<std::vector<double>> filterbank_;
    std::vector<double> offset_;

    static std::vector<double> population_mean(EmbedderConfig cfg, double fs) {
        static std::mutex mutex;
        static std::map<std::string, std::vector<double>> cache;
        char key[160];
        std::snprintf(key, sizeof key, "%d/%.6g/%.6g/%.6g/%.6g/%.6g/%.6g", cfg.num_bands, cfg.low_hz, cfg.high_hz,
                      cfg.stft.window_seconds, cfg.stft.hop_seconds, cfg.energy_floor_db, fs);
        std::lock_guard lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
        cfg.population_centering = false;
        const ReferenceEmbedder plain(fs, cfg);
        constexpr int kVoices = 64;
        constexpr double kSeconds = 3.0;
        std::vector<double> mean(cfg.dim(), 0.0);
        for (int v = 0; v < kVoices; ++v) {
            Rng rng = make_rng(derive_seed(kPopulationSeed, static_cast<std::uint64_t>(v), "population"));
            const VoiceParams voice = sample_voice(rng);
            const auto f = plain.features(synthesize_voice(voice, kSeconds, fs, derive_seed(kPopulationSeed, static_cast<std::uint64_t>(v), "population-utterance")));
            for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += f[i] / kVoices;
        }
        return cache.emplace(key, std::move(mean)).first->second;
    }

    static constexpr std::uint64_t kPopulationSeed = 0x5EEDFACEULL;
};

inline Embedding embed(std::span<const float> signal, double sample_rate) {
    return ReferenceEmbedder(sample_rate).embed(signal);
}

// ---------------------------------------------------------------------------
// Enrollment

struct EnrollmentConfig {
    double utterance_seconds = 20.0;
    double sample_rate = 16000.0;
    Range elevation_deg{-20.0, 40.0};
};

inline std::string genuine_identity(int speaker_id) { return "spk" + std::to_string(speaker_id); }
inline std::string distractor_identity(std::size_t index) { return "dist" + std::to_string(index); }

/// Builds enrollment pools. Scene speakers are enrolled from fresh utterances
/// placed at a new random position; distractor identities come from one
/// predefined population keyed by `distractor_seed`, so pools of different
/// sizes are nested and their embeddings can be cached across scenes.
/// Thread-safe.
class EnrollmentBuilder {
public:
    explicit EnrollmentBuilder(std::uint64_t distractor_seed, EnrollmentConfig cfg = {})
        : distractor_seed_(distractor_seed), cfg_(cfg) {}

    EnrollmentPool build(const std::vector<VoiceParams>& voices, const std::vector<int>& speaker_ids, std::size_t M,
                         std::uint64_t seed) {
        if (M < voices.size())
            throw ConfigError("enrollment: M=" + std::to_string(M) + " is smaller than the number of scene speakers (" +
                              std::to_string(voices.size()) + ")");
        if (speaker_ids.size() != voices.size()) throw ConfigError("enrollment: one speaker id per voice is required");
        ReferenceEmbedder embedder(cfg_.sample_rate);
        EnrollmentPool pool;
        for (std::size_t j = 0; j < voices.size(); ++j)
            pool.add(genuine_identity(speaker_ids[j]), enroll_voice(embedder, voices[j], derive_seed(seed, j, "enroll")));
        for (std::size_t d = 0; pool.size() < M; ++d) pool.add(distractor_identity(d), distractor(embedder, d));
        return pool;
    }

    Embedding enroll_voice(const ReferenceEmbedder& embedder, const VoiceParams& voice, std::uint64_t seed) const {
        Rng rng = make_rng(seed);
        auto mono = synthesize_voice(voice, cfg_.utterance_seconds, cfg_.sample_rate, derive_seed(seed, 0, "utterance"));
        // Re-placed at a new position; the reference embedder only sees W.
        DoA where;
        where.azimuth = uniform(rng, -180.0, 180.0);
        where.elevation = uniform(rng, cfg_.elevation_deg.lo, cfg_.elevation_deg.hi);
        const FoaSignal placed = encode_foa(mono, where, cfg_.sample_rate);
        return embedder.embed(placed.channels[kW]);
    }

    VoiceParams distractor_voice(std::size_t index) const {
        Rng rng = make_rng(derive_seed(distractor_seed_, index, "distractor-voice"));
        return sample_voice(rng);
    }

private:
    Embedding distractor(const ReferenceEmbedder& embedder, std::size_t index) {
        {
            std::lock_guard lock(mutex_);
            if (auto it = cache_.find(index); it != cache_.end()) return it->second;
        }
        Embedding e = enroll_voice(embedder, distractor_voice(index), derive_seed(distractor_seed_, index, "distractor"));
        std::lock_guard lock(mutex_);
        return cache_.emplace(index, std::move(e)).first->second;
    }

    std::uint64_t distractor_seed_;
    EnrollmentConfig cfg_;
    std::mutex mutex_;
    std::map<std::size_t, Embedding> cache_;
};

inline EnrollmentPool build_enrollment(const std::vector<VoiceParams>& voices, std::size_t M, std::uint64_t seed,
                                       EnrollmentConfig cfg = {}) {
    std::vector<int> ids(voices.size());
    for (std::size_t j = 0; j < ids.size(); ++j) ids[j] = static_cast<int>(j);
    EnrollmentBuilder builder(derive_seed(seed, 0, "distractors"), cfg);
    return builder.build(voices, ids, M, seed);
}

// ---------------------------------------------------------------------------
// SPKEMB v1 text format:
//   SPKEMB v1 dim=<D> count=<N>
//   <identity>,<c1>,...,<cD>        (N lines)

inline void write_spkemb(std::ostream& os, const EnrollmentPool& pool) {
    os << "SPKEMB v1 dim=" << pool.dim() << " count=" << pool.size() << '\n';
    char buf[64];
    for (const auto& e : pool.entries) {
        if (e.identity.empty() || e.identity.find_first_of(",\n\r") != std::string::npos)
            throw DataError("spkemb: identity '" + e.identity + "' is empty or contains a separator");
        os << e.identity;
        for (double v : e.embedding.values()) {
            std::snprintf(buf, sizeof buf, "%.9g", v);
            os << ',' << buf;
        }
        os << '\n';
    }
}

inline EnrollmentPool read_spkemb(std::istream& is) {
    EnrollmentPool pool;
    std::string line;
    if (!std::getline(is, line)) return pool;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t dim = 0, count = 0;
    {
        char tail = 0;
        unsigned long d = 0, n = 0;
        if (std::sscanf(line.c_str(), "SPKEMB v1 dim=%lu count=%lu%c", &d, &n, &tail) != 2)
            throw ParseError("malformed header, expected 'SPKEMB v1 dim=<D> count=<N>'", 1);
        dim = d;
        count = n;
    }
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        if (fields.size() != dim + 1)
            throw ParseError("expected " + std::to_string(dim) + " components, got " + std::to_string(fields.size() - 1),
                             lineno);
        if (fields[0].empty()) throw ParseError("empty identity", lineno);
        std::vector<double> v(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            const std::string& f = fields[i + 1];
            char* end = nullptr;
            v[i] = std::strtod(f.c_str(), &end);
            if (f.empty() || end != f.c_str() + f.size() || !std::isfinite(v[i]))
                throw ParseError("bad number '" + f + "'", lineno);
        }
        try {
            pool.add(fields[0], Embedding::from_raw(std::move(v)));
        } catch (const DataError& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    if (pool.size() != count)
        throw ParseError("header declares " + std::to_string(count) + " rows, found " + std::to_string(pool.size()),
                         lineno);
    return pool;
}

inline void export_embeddings(const std::filesystem::path& path, const EnrollmentPool& pool) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open " + path.string() + " for writing");
    write_spkemb(os, pool);
}

inline EnrollmentPool import_embeddings(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open " + path.string());
    return read_spkemb(is);
}

}  // namespace spktrack
