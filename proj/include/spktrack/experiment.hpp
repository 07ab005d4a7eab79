#pragma once

// Batch orchestration behind the gen / run / eval subcommands.
//
// Dataset layout:
//   <dataset>/manifest.json
//   <dataset>/scene_0000/{mixture.wav, wet_0.wav, ..., ground_truth.json}
// Results layout:
//   <results>/run.json
//   <results>/<cell>/cell.json
//   <results>/<cell>/<scene>/{before.jsonl, fragments.jsonl, after.jsonl,
//                             assignment.json, pool.spkemb, DONE}

#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "spktrack/beamforming.hpp"
#include "spktrack/common.hpp"
#include "spktrack/embedding.hpp"
#include "spktrack/fragment.hpp"
#include "spktrack/metrics.hpp"
#include "spktrack/pipeline.hpp"
#include "spktrack/rng.hpp"
#include "spktrack/scene.hpp"
#include "spktrack/tracking.hpp"
#include "spktrack/wav.hpp"

namespace spktrack {

namespace fs = std::filesystem;

struct DatasetConfig {
    std::size_t count = 150;
    std::uint64_t master_seed = 0;
    SceneSpec scene;  // seed is overwritten per scene
};

struct RunConfig {
    TrackingOptions tracking;
    std::vector<BeamformerKind> beamformers{BeamformerKind::ideal};
    NoiseCovarianceSource noise_cov = NoiseCovarianceSource::oracle;
    std::vector<DurationPolicy> durations{DurationPolicy::whole()};
    std::vector<std::size_t> Ms{2};
    int max_gap_frames = 0;
    std::optional<fs::path> enrollment;  // SPKEMB file replacing the synthetic pool
    std::uint64_t master_seed = 0;       // keys the distractor population
};

struct EvalConfig {
    double alpha_deg = kDefaultMatchThresholdDeg;
    std::vector<double> alphas_deg;  // optional multi-threshold AssA
    double bootstrap_fraction = 0.8;
    int bootstrap_iterations = 100;
    std::uint64_t bootstrap_seed = 0;
    bool per_scene_csv = true;
    bool plot_csv = true;
};

inline std::string scene_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "scene_%04zu", i);
    return buf;
}

inline std::uint64_t scene_seed(std::uint64_t master, std::size_t i) { return derive_seed(master, i, "scene"); }

inline std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

// ---------------------------------------------------------------------------
// File helpers

inline std::string read_text(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw DataError("cannot read " + p.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline void write_text(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw DataError("cannot write " + p.string());
    os << text;
    if (!os) throw DataError("short write to " + p.string());
}

inline nlohmann::json read_json(const fs::path& p) {
    try {
        return nlohmann::json::parse(read_text(p));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(p.string() + ": " + e.what());
    }
}

inline void write_json(const fs::path& p, const nlohmann::json& j) { write_text(p, j.dump(2) + "\n"); }

inline wav::Audio to_audio(const FoaSignal& s) {
    wav::Audio a;
    a.sample_rate = static_cast<std::uint32_t>(std::lround(s.sample_rate));
    for (const auto& c : s.channels) a.channels.push_back(c);
    return a;
}

inline FoaSignal read_foa(const fs::path& p) {
    const wav::Audio a = wav::read(p);
    if (a.channels.size() != kFoaChannels)
        throw DataError(p.string() + ": expected 4 channels, found " + std::to_string(a.channels.size()));
    FoaSignal s;
    s.sample_rate = a.sample_rate;
    for (std::size_t c = 0; c < kFoaChannels; ++c) s.channels[c] = a.channels[c];
    return s;
}

// ---------------------------------------------------------------------------
// Worker pool: runs task(i) for i in [0, n) on `workers` threads. The first
// exception (lowest index) is rethrown after all threads finish.

inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task) {
    if (n == 0) return;
    const auto threads = static_cast<std::size_t>(std::clamp<long>(workers, 1, static_cast<long>(n)));
    std::atomic<std::size_t> next{0};
    std::mutex mutex;
    std::map<std::size_t, std::exception_ptr> errors;
    auto body = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(mutex);
                errors.emplace(i, std::current_exception());
            }
        }
    };
    if (threads == 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    if (!errors.empty()) std::rethrow_exception(errors.begin()->second);
}

// ---------------------------------------------------------------------------
// gen

inline void write_scene(const fs::path& dir, const Scene& scene) {
    fs::create_directories(dir);
    wav::write(dir / "mixture.wav", to_audio(scene.mixture));
    for (std::size_t j = 0; j < scene.wet.size(); ++j)
        wav::write(dir / ("wet_" + std::to_string(j) + ".wav"), to_audio(scene.wet[j]));
    write_json(dir / "ground_truth.json", ground_truth_to_json(scene.spec, scene.ground_truth));
}

inline Scene load_scene(const fs::path& dir) {
    Scene scene;
    auto [spec, gt] = ground_truth_from_json(read_json(dir / "ground_truth.json"));
    scene.spec = spec;
    scene.ground_truth = std::move(gt);
    scene.mixture = read_foa(dir / "mixture.wav");
    for (std::size_t j = 0; j < scene.ground_truth.size(); ++j)
        scene.wet.push_back(read_foa(dir / ("wet_" + std::to_string(j) + ".wav")));
    for (const auto& w : scene.wet)
        if (w.size() != scene.mixture.size() || w.sample_rate != scene.mixture.sample_rate)
            throw DataError(dir.string() + ": wet signals do not match the mixture");
    if (std::abs(scene.mixture.sample_rate - spec.sample_rate) > 0.5)
        throw DataError(dir.string() + ": WAV sample rate disagrees with ground_truth.json");
    return scene;
}

inline std::uint64_t hash_scene_dir(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::uint64_t h = fnv1a("scene");
    for (const auto& f : files) h = splitmix64(h ^ fnv1a(f.filename().string()) ^ fnv1a(read_text(f)));
    return h;
}

/// Generates `count` scenes and the manifest. Returns the manifest.
inline nlohmann::json cmd_gen(const DatasetConfig& cfg, const fs::path& out, int workers) {
    SceneSpec probe = cfg.scene;
    probe.validate();
    fs::create_directories(out);
    std::vector<std::uint64_t> hashes(cfg.count);
    parallel_for(cfg.count, workers, [&](std::size_t i) {
        SceneSpec spec = cfg.scene;
        spec.seed = scene_seed(cfg.master_seed, i);
        const fs::path dir = out / scene_name(i);
        write_scene(dir, generate_scene(spec));
        hashes[i] = hash_scene_dir(dir);
    });
    nlohmann::json scenes = nlohmann::json::array();
    for (std::size_t i = 0; i < cfg.count; ++i)
        scenes.push_back({{"name", scene_name(i)}, {"seed", scene_seed(cfg.master_seed, i)}, {"hash", hex64(hashes[i])}});
    SceneSpec echo = cfg.scene;
    echo.seed = 0;
    nlohmann::json manifest = {{"format", "spktrack-dataset-v1"},
                               {"master_seed", cfg.master_seed},
                               {"count", cfg.count},
                               {"scene_spec", to_json(echo)},
                               {"scenes", scenes}};
    write_json(out / "manifest.json", manifest);
    return manifest;
}

inline std::vector<std::string> manifest_scenes(const fs::path& dataset) {
    const fs::path mp = dataset / "manifest.json";
    if (!fs::exists(mp)) throw DataError("no manifest.json in " + dataset.string());
    const auto j = read_json(mp);
    std::vector<std::string> names;
    try {
        for (const auto& s : j.at("scenes")) names.push_back(s.at("name").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest: " + std::string(e.what()));
    }
    return names;
}

// ---------------------------------------------------------------------------
// run

struct Cell {
    TrackerVariant tracker = TrackerVariant::gt;
    CellConfig config;

    std::string name() const {
        std::string bf = to_string(config.beamformer);
        if (config.beamformer == BeamformerKind::mvdr) bf += std::string("-") + to_string(config.noise_cov);
        return std::string(to_string(tracker)) + "_" + bf + "_" + config.policy.label() + "_M" +
               std::to_string(config.M);
    }

    nlohmann::json to_json() const {
        return {{"name", name()},
                {"tracker", to_string(tracker)},
                {"beamformer", to_string(config.beamformer)},
                {"noise_cov", config.beamformer == BeamformerKind::mvdr ? nlohmann::json(to_string(config.noise_cov))
                                                                         : nlohmann::json(nullptr)},
                {"duration", config.policy.label()},
                {"M", config.M},
                {"max_gap_frames", config.max_gap_frames}};
    }
};

inline std::vector<Cell> sweep_cells(const RunConfig& cfg, std::optional<std::size_t> fixed_M = std::nullopt) {
    if (cfg.beamformers.empty() || cfg.durations.empty() || (cfg.Ms.empty() && !fixed_M))
        throw ConfigError("run: empty sweep axis");
    std::vector<Cell> cells;
    const std::vector<std::size_t> Ms = fixed_M ? std::vector<std::size_t>{*fixed_M} : cfg.Ms;
    for (auto bf : cfg.beamformers)
        for (const auto& d : cfg.durations)
            for (auto M : Ms) {
                if (M < 1) throw ConfigError("run: M must be >= 1");
                Cell c;
                c.tracker = cfg.tracking.variant;
                c.config.beamformer = bf;
                c.config.noise_cov = cfg.noise_cov;
                c.config.policy = d;
                c.config.M = M;
                c.config.max_gap_frames = cfg.max_gap_frames;
                cells.push_back(c);
            }
    return cells;
}

inline nlohmann::json run_config_json(const RunConfig& cfg) {
    nlohmann::json bfs = nlohmann::json::array(), durs = nlohmann::json::array();
    for (auto b : cfg.beamformers) bfs.push_back(to_string(b));
    for (const auto& d : cfg.durations) durs.push_back(d.label());
    return {{"tracker", to_string(cfg.tracking.variant)},
            {"hop", cfg.tracking.hop},
            {"beamformers", bfs},
            {"noise_cov", to_string(cfg.noise_cov)},
            {"durations", durs},
            {"M", cfg.Ms},
            {"max_gap_frames", cfg.max_gap_frames},
            {"master_seed", cfg.master_seed},
            {"imported_enrollment", cfg.enrollment.has_value()}};
}

struct RunSummary {
    std::size_t cells = 0;
    std::size_t computed = 0;  // (cell, scene) units computed in this call
    std::size_t skipped = 0;   // units already complete on disk
};

inline void write_cell_outputs(const fs::path& dir, const std::vector<Trajectory>& before, const CellResult& r) {
    fs::create_directories(dir);
    {
        std::ostringstream ss;
        write_trajectories_jsonl(ss, before);
        write_text(dir / "before.jsonl", ss.str());
    }
    {
        std::ostringstream ss;
        write_fragments_jsonl(ss, r.fragments);
        write_text(dir / "fragments.jsonl", ss.str());
    }
    {
        std::ostringstream ss;
        write_trajectories_jsonl(ss, r.after.new_trajectories);
        write_text(dir / "after.jsonl", ss.str());
    }
    nlohmann::json a = to_json(r.after, r.pool);
    a["mvdr_band_fallbacks"] = r.mvdr.band_fallbacks;
    a["mvdr_fragment_fallbacks"] = r.mvdr.fragment_fallbacks;
    a["embedding_fallbacks"] = r.embedding_fallbacks;
    write_json(dir / "assignment.json", a);
    {
        std::ostringstream ss;
        write_spkemb(ss, r.pool);
        write_text(dir / "pool.spkemb", ss.str());
    }
    write_text(dir / "DONE", "");
}

/// Executes every (cell, scene) unit that has no completion marker yet.
inline RunSummary cmd_run(const RunConfig& cfg, const fs::path& dataset, const fs::path& results, int workers) {
    const auto scenes = manifest_scenes(dataset);
    std::optional<EnrollmentPool> imported;
    if (cfg.enrollment) imported = import_embeddings(*cfg.enrollment);
    if (imported && imported->empty()) throw DataError("imported enrollment pool is empty");
    const auto cells = sweep_cells(cfg, imported ? std::optional<std::size_t>(imported->size()) : std::nullopt);

    fs::create_directories(results);
    nlohmann::json run = run_config_json(cfg);
    run["cells"] = nlohmann::json::array();
    for (const auto& c : cells) {
        run["cells"].push_back(c.name());
        fs::create_directories(results / c.name());
        write_json(results / c.name() / "cell.json", c.to_json());
    }
    write_json(results / "run.json", run);

    EnrollmentBuilder enrollment(derive_seed(cfg.master_seed, 0, "distractors"));
    std::atomic<std::size_t> computed{0}, skipped{0};
    parallel_for(scenes.size(), workers, [&](std::size_t i) {
        std::vector<const Cell*> todo;
        for (const auto& c : cells)
            if (fs::exists(results / c.name() / scenes[i] / "DONE"))
                ++skipped;
            else
                todo.push_back(&c);
        if (todo.empty()) return;
        const Scene scene = load_scene(dataset / scenes[i]);
        const std::uint64_t seed = scene.spec.seed;
        std::map<std::size_t, std::vector<Trajectory>> tracked;  // by M
        for (const Cell* c : todo) {
            auto it = tracked.find(c->config.M);
            if (it == tracked.end())
                it = tracked.emplace(c->config.M, track_scene(scene, cfg.tracking, c->config.M, seed)).first;
            const CellResult r =
                run_cell(scene, it->second, c->config, cfg.tracking.hop, seed, enrollment, imported ? &*imported : nullptr);
            write_cell_outputs(results / c->name() / scenes[i], it->second, r);
            ++computed;
        }
    });
    return {cells.size(), computed.load(), skipped.load()};
}

// ---------------------------------------------------------------------------
// eval

struct SceneEval {
    std::string scene;
    MetricsReport before, after;
    double identity_accuracy = 0.0;
    std::optional<double> assa_multi_before, assa_multi_after;
};

inline std::vector<Trajectory> read_trajectories_file(const fs::path& p) {
    std::ifstream is(p);
    if (!is) throw DataError("cannot read " + p.string());
    try {
        return read_trajectories_jsonl(is);
    } catch (const ParseError& e) {
        throw ParseError(p.string() + ": " + e.what(), e.line());
    }
}

inline SceneEval evaluate_scene(const fs::path& scene_results, const std::vector<SpeakerGroundTruth>& gt,
                                double duration, double hop, const EvalConfig& cfg) {
    SceneEval ev;
    const auto gt_tracks = ground_truth_trajectories(gt, hop, duration);
    const auto before = read_trajectories_file(scene_results / "before.jsonl");
    const auto after = read_trajectories_file(scene_results / "after.jsonl");
    ev.before = evaluate(gt_tracks, before, duration, cfg.alpha_deg);
    ev.after = evaluate(gt_tracks, after, duration, cfg.alpha_deg);

    const auto a = read_json(scene_results / "assignment.json");
    std::map<int, std::string> identity_of_track;
    try {
        const auto ids = a.at("pool_identities");
        for (std::size_t p = 0; p < ids.size(); ++p) identity_of_track[static_cast<int>(p)] = ids[p].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(scene_results.string() + "/assignment.json: " + e.what());
    }
    ev.identity_accuracy = identity_accuracy(match_frames(gt_tracks, after, cfg.alpha_deg), identity_of_track);
    if (!cfg.alphas_deg.empty()) {
        ev.assa_multi_before = assa_multi_threshold(gt_tracks, before, cfg.alphas_deg);
        ev.assa_multi_after = assa_multi_threshold(gt_tracks, after, cfg.alphas_deg);
    }
    return ev;
}

inline std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

/// Paired before/after metrics per cell with bootstrap statistics. Writes the
/// report (and optional CSVs) and returns the report JSON.
inline nlohmann::json cmd_eval(const EvalConfig& cfg, const fs::path& results, const fs::path& dataset,
                               const fs::path& report_path, int workers) {
    if (!(cfg.alpha_deg > 0.0 && cfg.alpha_deg <= 180.0)) throw ConfigError("eval: alpha must be in (0, 180]");
    const fs::path run_path = results / "run.json";
    if (!fs::exists(run_path)) throw DataError("no data: " + results.string() + " holds no run.json");
    const auto run = read_json(run_path);
    const double hop = run.value("hop", kDefaultHop);
    const auto scenes = manifest_scenes(dataset);

    std::vector<std::string> cell_names;
    for (const auto& e : fs::directory_iterator(results))
        if (e.is_directory() && fs::exists(e.path() / "cell.json")) cell_names.push_back(e.path().filename().string());
    std::sort(cell_names.begin(), cell_names.end());

    // Ground truth once per scene.
    std::vector<std::optional<std::pair<SceneSpec, std::vector<SpeakerGroundTruth>>>> gts(scenes.size());
    std::map<std::string, std::vector<SceneEval>> per_cell;
    std::size_t units = 0;
    for (const auto& name : cell_names) {
        std::vector<std::optional<SceneEval>> evals(scenes.size());
        parallel_for(scenes.size(), workers, [&](std::size_t i) {
            const fs::path dir = results / name / scenes[i];
            if (!fs::exists(dir / "DONE")) return;
            if (!gts[i]) {
                // Each index is only touched by one worker at a time within a cell.
                gts[i] = ground_truth_from_json(read_json(dataset / scenes[i] / "ground_truth.json"));
            }
            SceneEval ev = evaluate_scene(dir, gts[i]->second, gts[i]->first.duration, hop, cfg);
            ev.scene = scenes[i];
            evals[i] = std::move(ev);
        });
        for (auto& e : evals)
            if (e) {
                per_cell[name].push_back(std::move(*e));
                ++units;
            }
    }
    if (units == 0) throw DataError("no data: no completed results under " + results.string());

    nlohmann::json cells = nlohmann::json::array();
    nlohmann::json summary = nlohmann::json::array();
    std::string scene_csv = "cell,scene,phase,assa,le,tsr,tfr,tp,fp,fn,identity_accuracy\n";
    std::string plot_csv = "cell,tracker,beamformer,noise_cov,duration,M,phase,assa_mean,assa_std\n";
    for (const auto& [name, evals] : per_cell) {
        const auto cell_json = read_json(results / name / "cell.json");
        std::vector<std::map<std::string, double>> before_rows, after_rows;
        double id_acc = 0.0;
        for (const auto& ev : evals) {
            auto b = metric_values(ev.before);
            auto a = metric_values(ev.after);
            if (ev.assa_multi_before) {
                b["assa_multi"] = *ev.assa_multi_before;
                a["assa_multi"] = *ev.assa_multi_after;
            }
            a["identity_accuracy"] = ev.identity_accuracy;
            before_rows.push_back(std::move(b));
            after_rows.push_back(std::move(a));
            id_acc += ev.identity_accuracy;
            for (const auto* phase : {"before", "after"}) {
                const MetricsReport& r = std::string(phase) == "before" ? ev.before : ev.after;
                scene_csv += name + "," + ev.scene + "," + phase + "," + csv_number(r.assa) + "," + csv_number(r.le) + "," +
                             csv_number(r.tsr) + "," + csv_number(r.tfr) + "," + std::to_string(r.tp) + "," +
                             std::to_string(r.fp) + "," + std::to_string(r.fn) + "," +
                             (std::string(phase) == "after" ? csv_number(ev.identity_accuracy) : std::string()) + "\n";
            }
        }
        const std::uint64_t bseed = derive_seed(cfg.bootstrap_seed, fnv1a(name), "eval");
        const auto bb = bootstrap(before_rows, cfg.bootstrap_fraction, cfg.bootstrap_iterations, bseed);
        const auto ba = bootstrap(after_rows, cfg.bootstrap_fraction, cfg.bootstrap_iterations, bseed);
        nlohmann::json c = cell_json;
        c["scenes"] = evals.size();
        c["before"] = to_json(bb);
        c["after"] = to_json(ba);
        c["identity_accuracy"] = id_acc / static_cast<double>(evals.size());
        const double before_assa = bb.plain_mean.at("assa"), after_assa = ba.plain_mean.at("assa");
        c["assa_gain"] = after_assa - before_assa;
        cells.push_back(c);
        summary.push_back({{"cell", name}, {"assa_before", before_assa}, {"assa_after", after_assa},
                           {"assa_gain", after_assa - before_assa}});
        const std::string cov = cell_json.at("noise_cov").is_null() ? "" : cell_json.at("noise_cov").get<std::string>();
        for (const auto* phase : {"before", "after"}) {
            const auto& bs = std::string(phase) == "before" ? bb : ba;
            plot_csv += name + "," + cell_json.at("tracker").get<std::string>() + "," +
                        cell_json.at("beamformer").get<std::string>() + "," + cov + "," +
                        cell_json.at("duration").get<std::string>() + "," + std::to_string(cell_json.at("M").get<int>()) +
                        "," + phase + "," + csv_number(bs.metrics.at("assa").mean) + "," +
                        csv_number(bs.metrics.at("assa").std) + "\n";
        }
    }

    nlohmann::json alphas = cfg.alphas_deg;
    nlohmann::json report = {{"format", "spktrack-report-v1"},
                             {"config",
                              {{"alpha_deg", cfg.alpha_deg},
                               {"alphas_deg", alphas},
                               {"bootstrap_fraction", cfg.bootstrap_fraction},
                               {"bootstrap_iterations", cfg.bootstrap_iterations},
                               {"bootstrap_seed", cfg.bootstrap_seed},
                               {"run", run}}},
                             {"cells", cells},
                             {"summary", summary}};
    if (!report_path.parent_path().empty()) fs::create_directories(report_path.parent_path());
    write_json(report_path, report);
    const fs::path base = report_path.parent_path();
    const std::string stem = report_path.stem().string();
    if (cfg.per_scene_csv) write_text(base / (stem + "_scenes.csv"), scene_csv);
    if (cfg.plot_csv) write_text(base / (stem + "_plot.csv"), plot_csv);
    return report;
}

}  // namespace spktrack
