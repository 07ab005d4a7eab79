// spktrack: gen / run / eval front end.
//
// Exit codes: 0 success, 2 configuration error, 3 data error.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "spktrack/experiment.hpp"

using namespace spktrack;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

Range pair_to_range(const std::vector<double>& v, const char* what) {
    if (v.size() != 2) throw ConfigError(std::string(what) + ": expected two values");
    return {v[0], v[1]};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Speaker tracking with embedding-based identity reassignment"};
    app.set_config("--config", "", "Read options from a TOML/INI file (command-line flags take precedence)");
    app.require_subcommand(1);

    // Read by hand: CLI11 silently drops environment values that fail a validator.
    int workers = 1;
    if (const char* env = std::getenv("SPKTRACK_WORKERS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1 || v > 4096) {
            std::fprintf(stderr, "config error: SPKTRACK_WORKERS must be a positive integer, got '%s'\n", env);
            return kExitConfig;
        }
        workers = static_cast<int>(v);
    }
    app.add_option("-j,--workers", workers, "Scenes processed in parallel (default $SPKTRACK_WORKERS or 1)")
        ->check(CLI::PositiveNumber);

    // gen ------------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "Generate a scene dataset");
    std::string gen_out;
    DatasetConfig dcfg;
    std::string regime = "distant";
    std::vector<double> level_diff{2.0, 4.0}, speech_len{2.0, 6.0}, pause_len{1.0, 4.0};
    bool no_jump = false;
    std::string snr = "15";
    gen->add_option("-o,--out", gen_out, "Dataset directory")->required();
    gen->add_option("-n,--count", dcfg.count, "Number of scenes")->capture_default_str();
    gen->add_option("-s,--seed", dcfg.master_seed, "Master seed")->capture_default_str();
    gen->add_option("--regime", regime, "distant | close")->capture_default_str();
    gen->add_option("--speakers", dcfg.scene.num_speakers, "Speakers per scene")->capture_default_str();
    gen->add_option("--duration", dcfg.scene.duration, "Scene length in seconds")->capture_default_str();
    gen->add_option("--sample-rate", dcfg.scene.sample_rate, "Hz")->capture_default_str();
    gen->add_option("--snr", snr, "Speech-to-noise ratio on W in dB, or inf")->capture_default_str();
    gen->add_option("--level-diff", level_diff, "Level difference range in dB (low high)")->expected(2);
    gen->add_option("--speech", speech_len, "Speech segment length range in s (low high)")->expected(2);
    gen->add_option("--pause", pause_len, "Pause length range in s (low high)")->expected(2);
    gen->add_option("--min-jump", dcfg.scene.min_jump_deg, "Minimum jump between segments in degrees")
        ->capture_default_str();
    gen->add_option("--tail-t60", dcfg.scene.tail_t60, "Synthetic reverberant tail T60 in s (0 = off)")
        ->capture_default_str();
    gen->add_flag("--no-jump", no_jump, "Speakers keep one position for the whole scene");

    // run ------------------------------------------------------------------
    auto* run = app.add_subcommand("run", "Track, fragment, embed and reassign over a sweep");
    std::string run_dataset, run_results, tracker = "gt", noise_cov = "oracle", enrollment;
    std::vector<std::string> beamformers{"ideal"}, durations{"whole"};
    std::vector<std::size_t> Ms{2};
    RunConfig rcfg;
    run->add_option("-d,--dataset", run_dataset, "Dataset directory")->required();
    run->add_option("-r,--results", run_results, "Results directory")->required();
    run->add_option("--tracker", tracker, "gt | est")->capture_default_str();
    run->add_option("--beamformers", beamformers, "ideal ds mvdr")->delimiter(',');
    run->add_option("--noise-cov", noise_cov, "MVDR noise covariance: oracle | gated")->capture_default_str();
    run->add_option("--durations", durations, "whole and/or prefix lengths in ms")->delimiter(',');
    run->add_option("-M,--enrollment-size", Ms, "Enrollment pool sizes")->delimiter(',');
    run->add_option("--hop", rcfg.tracking.hop, "Tracker frame hop in s")->capture_default_str();
    run->add_option("--max-gap", rcfg.max_gap_frames, "Merge activity runs separated by at most this many frames")
        ->capture_default_str();
    run->add_option("--enrollment", enrollment, "SPKEMB v1 file replacing the synthetic enrollment pool");
    run->add_option("-s,--seed", rcfg.master_seed, "Master seed (distractor population)")->capture_default_str();

    // eval -----------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "Score results against ground truth");
    std::string eval_results, eval_dataset, report;
    EvalConfig ecfg;
    bool no_csv = false;
    eval->add_option("-r,--results", eval_results, "Results directory")->required();
    eval->add_option("-d,--dataset", eval_dataset, "Dataset directory")->required();
    eval->add_option("-o,--report", report, "Report path (default <results>/report.json)");
    eval->add_option("--alpha", ecfg.alpha_deg, "Match threshold in degrees")->capture_default_str();
    eval->add_option("--alphas", ecfg.alphas_deg, "Extra thresholds for multi-threshold AssA")->delimiter(',');
    eval->add_option("--bootstrap-fraction", ecfg.bootstrap_fraction)->capture_default_str();
    eval->add_option("--bootstrap-iters", ecfg.bootstrap_iterations)->capture_default_str();
    eval->add_option("--bootstrap-seed", ecfg.bootstrap_seed)->capture_default_str();
    eval->add_flag("--no-csv", no_csv, "Skip the per-scene and plot CSV files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*gen) {
            dcfg.scene.regime = parse_regime(regime);
            dcfg.scene.jump_on_silence = !no_jump;
            dcfg.scene.level_diff_db = pair_to_range(level_diff, "--level-diff");
            dcfg.scene.speech_seconds = pair_to_range(speech_len, "--speech");
            dcfg.scene.pause_seconds = pair_to_range(pause_len, "--pause");
            if (snr == "inf" || snr == "+inf")
                dcfg.scene.snr_db = std::numeric_limits<double>::infinity();
            else
                try {
                    dcfg.scene.snr_db = std::stod(snr);
                } catch (const std::exception&) {
                    throw ConfigError("--snr: not a number: " + snr);
                }
            const auto manifest = cmd_gen(dcfg, gen_out, workers);
            std::printf("generated %zu scenes in %s\n", manifest.at("scenes").size(), gen_out.c_str());
        } else if (*run) {
            rcfg.tracking.variant = parse_tracker_variant(tracker);
            rcfg.noise_cov = parse_noise_cov(noise_cov);
            rcfg.beamformers.clear();
            for (const auto& b : beamformers) rcfg.beamformers.push_back(parse_beamformer(b));
            rcfg.durations.clear();
            for (const auto& d : durations) rcfg.durations.push_back(DurationPolicy::parse(d));
            rcfg.Ms = Ms;
            if (!(rcfg.tracking.hop > 0.0)) throw ConfigError("--hop must be > 0");
            if (rcfg.max_gap_frames < 0) throw ConfigError("--max-gap must be >= 0");
            if (!enrollment.empty()) rcfg.enrollment = enrollment;
            const auto s = cmd_run(rcfg, run_dataset, run_results, workers);
            std::printf("%zu cells: %zu scene runs computed, %zu already complete\n", s.cells, s.computed, s.skipped);
        } else if (*eval) {
            ecfg.per_scene_csv = ecfg.plot_csv = !no_csv;
            const fs::path out = report.empty() ? fs::path(eval_results) / "report.json" : fs::path(report);
            const auto r = cmd_eval(ecfg, eval_results, eval_dataset, out, workers);
            for (const auto& row : r.at("summary"))
                std::printf("%-36s AssA before %.4f after %.4f\n", row.at("cell").get<std::string>().c_str(),
                            row.at("assa_before").get<double>(), row.at("assa_after").get<double>());
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const AssignmentError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
