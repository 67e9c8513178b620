// crowdslam: simulate, train, slam and eval subcommands.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "crowdslam/error.hpp"
#include "crowdslam/io.hpp"
#include "crowdslam/pipeline.hpp"
#include "crowdslam/simulator.hpp"

namespace fs = std::filesystem;
using namespace crowdslam;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

int run_simulate(const fs::path& spec_path, std::optional<std::uint64_t> seed, const fs::path& out) {
    auto spec = sim::ScenarioSpec::from_json(io::read_file(spec_path));
    if (seed) {
        spec.noise.rng_seed = *seed;
    }
    const auto scenario = sim::generate_scenario(spec);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) {
        throw IoError("cannot create '" + out.string() + "': " + ec.message());
    }
    for (const auto& track : scenario.tracks) {
        io::write_file_atomic(out / (track.track_id + ".jsonl"), io::serialize_track_log(track));
    }
    io::write_file_atomic(out / "truth.csv", io::write_truth_csv(scenario.truth));
    io::write_file_atomic(out / "scenario.json", spec.to_json());
    std::cout << "wrote " << scenario.tracks.size() << " tracks, " << scenario.truth.size()
              << " measurements to " << out.string() << "\n";
    return EXIT_SUCCESS;
}

int run_train(const fs::path& logs, const SlamConfig& config, const fs::path& out) {
    const auto tracks = io::read_track_logs(logs);
    std::size_t samples = 0;
    const auto table = train_from_tracks(tracks, config, &samples);
    io::write_file_atomic(out, table.to_json());
    std::cout << "trained " << table.bins().size() << " bins from " << samples << " samples -> "
              << out.string() << "\n";
    return EXIT_SUCCESS;
}

// Compares the digests just taken against those recorded in a manifest.
void check_digests(const std::map<std::string, std::string>& expected,
                   const std::map<std::string, std::string>& actual) {
    for (const auto& [path, digest] : actual) {
        const auto it = expected.find(path);
        if (it == expected.end()) {
            throw ValidationError("manifest: input '" + path + "' was not part of the recorded run");
        }
        if (it->second != digest) {
            throw ValidationError("manifest: input '" + path + "' changed since the recorded run");
        }
    }
    for (const auto& [path, digest] : expected) {
        if (!actual.contains(path)) {
            throw ValidationError("manifest: recorded input '" + path + "' is missing");
        }
    }
}

int run_slam_command(io::RunManifest manifest, const fs::path& out,
                     const std::optional<std::map<std::string, std::string>>& expected) {
    const fs::path logs(manifest.logs_dir);
    const auto files = io::list_track_files(logs);
    std::vector<TrackLog> tracks;
    for (const auto& file : files) {
        const auto bytes = io::read_file(file);
        manifest.input_digests[file.string()] = io::sha256_hex(bytes);
        try {
            tracks.push_back(io::parse_track_log(bytes));
        } catch (const ValidationError& e) {
            throw ValidationError(file.string() + ": " + e.what());
        }
    }
    if (tracks.empty()) {
        throw ValidationError("no *.jsonl track logs in '" + logs.string() + "'");
    }

    std::optional<VarianceTable> table;
    if (manifest.table_path) {
        const auto bytes = io::read_file(*manifest.table_path);
        manifest.input_digests[*manifest.table_path] = io::sha256_hex(bytes);
        table = VarianceTable::from_json(bytes);
    }
    std::vector<Pose2> truth;
    if (manifest.truth_path) {
        const auto bytes = io::read_file(*manifest.truth_path);
        manifest.input_digests[*manifest.truth_path] = io::sha256_hex(bytes);
        for (const auto& row : io::parse_truth_csv(bytes)) {
            truth.push_back(row.pose);
        }
    }

    if (expected) {
        check_digests(*expected, manifest.input_digests);
    }

    const auto result = run_slam(tracks, manifest.config, table, truth);
    io::write_outputs(result, manifest, out, truth);

    const auto& r = result.report;
    std::cout << r.nodes << " nodes, " << r.candidates << " candidates, " << r.loop_edges
              << " loop constraints, " << r.optimization.iterations << " LM iterations\n";
    if (r.error) {
        std::cout << "rmse " << r.error->rmse << " m (odometry " << r.odometry_error->rmse << " m)\n";
    }
    return EXIT_SUCCESS;
}

int run_eval(const fs::path& estimate, const fs::path& truth) {
    const auto est = io::parse_pose_csv(io::read_file(estimate));
    const auto ref = io::parse_pose_csv(io::read_file(truth));
    std::cout << io::error_stats_json(error_stats(est, ref));
    return EXIT_SUCCESS;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Crowd-sensed Wifi fingerprint SLAM"};
    app.require_subcommand(1);

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic scenario");
    std::string spec_path;
    std::optional<std::uint64_t> seed;
    std::string sim_out;
    simulate->add_option("--spec", spec_path, "Scenario spec JSON")->required();
    simulate->add_option("--seed", seed, "Override the scenario seed");
    simulate->add_option("--out", sim_out, "Output directory")->required();

    SlamConfig config;
    auto add_fingerprint_options = [&config](CLI::App* cmd) {
        cmd->add_option("--rss-threshold", config.theta_r, "Drop readings below this dBm")
            ->capture_default_str();
        cmd->add_option("--floor", config.floor_dbm, "Magnitude floor in dBm")->capture_default_str();
    };

    auto* train = app.add_subcommand("train", "Learn the similarity/variance table");
    std::string train_logs;
    std::string train_out;
    train->add_option("--logs", train_logs, "Directory of *.jsonl track logs")->required();
    train->add_option("--bin-size", config.bin_size, "Similarity bin width")->capture_default_str();
    train->add_option("--train-distance", config.training_distance,
                      "Max odometric path between training pairs (m)")
        ->capture_default_str();
    train->add_option("--max-samples-per-node", config.max_samples_per_node,
                      "Cap training partners per node (0 = all)")
        ->capture_default_str();
    add_fingerprint_options(train);
    train->add_option("--out", train_out, "Output table JSON")->required();

    auto* slam = app.add_subcommand("slam", "Detect loops, build and optimize the pose graph");
    std::string slam_logs;
    std::string slam_out;
    std::string table_path;
    std::string truth_path;
    std::string manifest_path;
    slam->add_option("--logs", slam_logs, "Directory of *.jsonl track logs");
    slam->add_option("--table", table_path, "Pre-trained variance table (default: train on the logs)");
    slam->add_option("--truth", truth_path, "Ground-truth CSV aligned with node ids");
    slam->add_option("--manifest", manifest_path,
                     "Repeat a previous run from its manifest.json (other options are ignored)");
    slam->add_option("--sim-threshold", config.screening.theta_s, "Similarity threshold")
        ->capture_default_str();
    slam->add_option("--min-gap", config.screening.min_gap, "Same-track index gap M")
        ->capture_default_str();
    slam->add_option("--window", config.screening.window, "Screening window (m of path)")
        ->capture_default_str();
    slam->add_option("--gate-distance", config.screening.gate_distance, "Candidate gate (m)")
        ->capture_default_str();
    slam->add_option("--gate-orientation", config.screening.gate_orientation,
                     "Candidate heading gate (rad)")
        ->capture_default_str();
    slam->add_option("--bin-size", config.bin_size, "Similarity bin width when training")
        ->capture_default_str();
    slam->add_option("--max-iterations", config.lm.max_iterations)->capture_default_str();
    slam->add_option("--odom-trans-sigma", config.motion.trans_sigma_per_meter,
                     "Odometry translation sigma per meter")
        ->capture_default_str();
    slam->add_option("--odom-rot-sigma", config.motion.rot_sigma_per_meter,
                     "Odometry rotation sigma per meter")
        ->capture_default_str();
    add_fingerprint_options(slam);
    slam->add_option("--out", slam_out, "Output directory")->required();

    auto* eval = app.add_subcommand("eval", "Compare a trajectory CSV with ground truth");
    std::string estimate_path;
    std::string eval_truth;
    eval->add_option("--estimate", estimate_path, "Trajectory CSV")->required();
    eval->add_option("--truth", eval_truth, "Truth CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? EXIT_SUCCESS : kExitValidation;
    }

    try {
        if (simulate->parsed()) {
            return run_simulate(spec_path, seed, sim_out);
        }
        if (train->parsed()) {
            config.validate();
            return run_train(train_logs, config, train_out);
        }
        if (slam->parsed()) {
            io::RunManifest manifest;
            std::optional<std::map<std::string, std::string>> expected;
            if (!manifest_path.empty()) {
                manifest = io::RunManifest::from_json(io::read_file(manifest_path));
                expected = std::move(manifest.input_digests);
                manifest.input_digests.clear();
            } else {
                if (slam_logs.empty()) {
                    throw ValidationError("slam: --logs or --manifest is required");
                }
                config.validate();
                manifest.config = config;
                manifest.logs_dir = slam_logs;
                if (!table_path.empty()) {
                    manifest.table_path = table_path;
                }
                if (!truth_path.empty()) {
                    manifest.truth_path = truth_path;
                }
            }
            return run_slam_command(std::move(manifest), slam_out, expected);
        }
        if (eval->parsed()) {
            return run_eval(estimate_path, eval_truth);
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return EXIT_SUCCESS;
}
