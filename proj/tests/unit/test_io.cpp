#include "test_support.hpp"

#include <crowdslam/error.hpp>
#include <crowdslam/g2o_io.hpp>
#include <crowdslam/io.hpp>
#include <crowdslam/pipeline.hpp>
#include <crowdslam/simulator.hpp>

#include <gtest/gtest.h>
#include <json.hpp>

#include <filesystem>
#include <string>

using namespace crowdslam;
using crowdslam::testing::Rng;

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("crowdslam_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string record(double t, const std::string& odom = "[0, 0, 0]", const std::string& id = "a") {
    return "{\"t\": " + io::format_double(t) + ", \"track_id\": \"" + id + "\", \"odom\": " + odom +
           ", \"rss\": {\"m\": -50}}\n";
}

void expect_error_mentions(const std::string& text, const std::string& needle) {
    try {
        io::parse_track_log(text);
        ADD_FAILURE() << "no error for: " << text;
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
}

}  // namespace

TEST(TrackLogParse, Fixture) {
    const TrackLog t = io::parse_track_log(io::read_file(CROWDSLAM_FIXTURE_DIR "/three_records.jsonl"));
    EXPECT_EQ(t.track_id, "lobby");
    ASSERT_EQ(t.entries.size(), 3u);
    EXPECT_EQ(t.entries[0].fp.size(), 2u);
    EXPECT_EQ(t.entries[0].fp.readings().at("02:00:00:00:00:01"), -48.5);
    EXPECT_EQ(t.entries[1].odom_pose, (Pose2{2.05, 0.01, 0.003}));
    EXPECT_TRUE(t.entries[2].fp.empty());
}

TEST(TrackLogParse, Errors) {
    expect_error_mentions(record(0) + record(5) + record(3), "line 3");
    expect_error_mentions(record(0) + record(5) + record(3), "'t'");
    expect_error_mentions(record(0) + record(1, "[0, 0, 3.5]"), "line 2, field 'odom'");
    expect_error_mentions(record(0) + record(1, "[0, 0]"), "odom");
    expect_error_mentions(record(0) + record(1, "[1e400, 0, 0]"), "line 2");
    expect_error_mentions(record(0) + record(1, "[0, 0, 0]", "b"), "track_id");
    expect_error_mentions(record(0) + "{\"t\": NaN}\n", "line 2");
    expect_error_mentions(record(0) + "[1, 2]\n", "line 2");
    expect_error_mentions(record(0) + "{\"t\": 1, \"track_id\": \"a\", \"odom\": [0,0,0]}\n", "'rss'");
    expect_error_mentions(record(0), "at least two");
    EXPECT_NO_THROW(io::parse_track_log(record(0) + "\n  \n" + record(1, "[0, 0, 3.141592653589793]")));
}

TEST(TrackLogParse, RoundTrip) {
    Rng rng(77);
    for (int rep = 0; rep < 100; ++rep) {
        TrackLog t{"track-" + std::to_string(rep), {}};
        double time = crowdslam::testing::uniform(rng, 0, 3);
        const std::size_t n = crowdslam::testing::uniform_index(rng, 2, 20);
        for (std::size_t k = 0; k < n; ++k) {
            t.entries.push_back({time, crowdslam::testing::random_pose(rng, 100),
                                 crowdslam::testing::random_fingerprint(rng)});
            time += crowdslam::testing::uniform(rng, 1e-3, 10);
        }
        const std::string text = io::serialize_track_log(t);
        const TrackLog back = io::parse_track_log(text);
        EXPECT_EQ(back, t);
        EXPECT_EQ(io::serialize_track_log(back), text);
    }
}

TEST(TrackLogParse, ArbitraryBytesNeverCrash) {
    Rng rng(1234);
    const std::string base = record(0) + record(1, "[1, 2, 0.5]");
    const std::string alphabet = "{}[]\":,.-+0123456789eEtrackid_odomrssnulltruefalse \n\t\\\x01\xff";
    for (int rep = 0; rep < 3000; ++rep) {
        std::string text;
        if (rep % 2 == 0) {
            text = base;
            const std::size_t edits = crowdslam::testing::uniform_index(rng, 1, 6);
            for (std::size_t e = 0; e < edits; ++e) {
                const std::size_t pos = crowdslam::testing::uniform_index(rng, 0, text.size() - 1);
                text[pos] = alphabet[crowdslam::testing::uniform_index(rng, 0, alphabet.size() - 1)];
            }
        } else {
            const std::size_t len = crowdslam::testing::uniform_index(rng, 0, 80);
            for (std::size_t k = 0; k < len; ++k) {
                text.push_back(static_cast<char>(crowdslam::testing::uniform_index(rng, 0, 255)));
            }
        }
        try {
            io::parse_track_log(text);
        } catch (const ValidationError&) {
        }
        try {
            io::parse_truth_csv(text);
        } catch (const ValidationError&) {
        }
        try {
            read_g2o(text);
        } catch (const ValidationError&) {
        }
        try {
            io::config_from_json(text);
        } catch (const ValidationError&) {
        }
    }
    SUCCEED();
}

TEST(TruthCsv, RoundTrip) {
    const std::vector<sim::TruthEntry> truth{{"a", 0, {1.5, 2, 0.1}}, {"a", 5, {3, 4.25, -3}}, {"b", 0, {0, 0, 3}}};
    const auto rows = io::parse_truth_csv(io::write_truth_csv(truth));
    ASSERT_EQ(rows.size(), 3u);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        EXPECT_EQ(rows[k].node, k);
        EXPECT_EQ(rows[k].track_id, truth[k].track_id);
        EXPECT_EQ(rows[k].time, truth[k].time);
        EXPECT_EQ(rows[k].pose, truth[k].pose);
    }
    EXPECT_EQ(io::parse_pose_csv(io::write_truth_csv(truth))[1], truth[1].pose);
    EXPECT_THROW(io::parse_truth_csv("node_id,track_id\n0,a\n"), ValidationError);
    EXPECT_THROW(io::parse_truth_csv("node_id,track_id,time,x,y,theta\n0,a,0,x,0,0\n"), ValidationError);
}

TEST(Config, JsonRoundTripAndDefaults) {
    SlamConfig cfg;
    EXPECT_EQ(cfg.theta_r, -70.0);
    EXPECT_EQ(cfg.screening.theta_s, 0.8);
    EXPECT_EQ(cfg.bin_size, 0.1);
    EXPECT_EQ(cfg.screening.min_gap, 10u);
    EXPECT_EQ(cfg.screening.window, 5.0);
    EXPECT_EQ(cfg.floor_dbm, -100.0);
    cfg.screening.theta_s = 0.9;
    cfg.lm.max_iterations = 7;
    cfg.motion.rot_sigma_per_meter = 0.02;
    const SlamConfig back = io::config_from_json(io::config_to_json(cfg));
    EXPECT_EQ(io::config_to_json(back), io::config_to_json(cfg));
    EXPECT_EQ(back.screening.theta_s, 0.9);
    EXPECT_EQ(back.lm.max_iterations, 7u);
    EXPECT_THROW(io::config_from_json("{\"screening\": {\"theta_s\": 3}}"), ValidationError);
}

TEST(Manifest, JsonRoundTrip) {
    io::RunManifest m;
    m.logs_dir = "logs";
    m.truth_path = "logs/truth.csv";
    m.input_digests["logs/a.jsonl"] = io::sha256_hex("abc");
    const io::RunManifest back = io::RunManifest::from_json(m.to_json());
    EXPECT_EQ(back.to_json(), m.to_json());
    EXPECT_EQ(back.truth_path, m.truth_path);
    EXPECT_FALSE(back.table_path.has_value());
}

TEST(Sha256, KnownDigests) {
    EXPECT_EQ(io::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(io::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(FormatDouble, ShortestRoundTrip) {
    Rng rng(5);
    for (int k = 0; k < 1000; ++k) {
        const double v = crowdslam::testing::uniform(rng, -1e6, 1e6);
        EXPECT_EQ(std::stod(io::format_double(v)), v);
    }
    EXPECT_EQ(io::format_double(0.1), "0.1");
    EXPECT_EQ(io::format_double(3.0), "3");
}

TEST(Outputs, FilesSchemaAndRoundTrips) {
    sim::ScenarioSpec spec;
    spec.speed = 0.8;
    spec.noise.rng_seed = 4;
    spec.tracks = {{"a", {{65, 35}, {120, 35}, {120, 10}, {10, 10}, {10, 35}, {65, 35}}},
                   {"b", {{65, 35}, {10, 35}, {10, 10}, {120, 10}, {120, 35}}}};
    const auto s = sim::generate_scenario(spec);
    std::vector<Pose2> truth;
    for (const auto& e : s.truth) truth.push_back(e.pose);
    const SlamResult r = run_slam(s.tracks, {}, std::nullopt, truth);
    const fs::path dir = scratch_dir("outputs");
    io::RunManifest manifest;
    manifest.logs_dir = "logs";
    io::write_outputs(r, manifest, dir, truth);

    for (const char* name : {"trajectory.csv", "metrics.json", "candidates.jsonl", "constraints.jsonl",
                             "graph.g2o", "variance_table.json", "manifest.json"}) {
        EXPECT_TRUE(fs::exists(dir / name)) << name;
        EXPECT_FALSE(fs::exists(dir / (std::string(name) + ".tmp"))) << name;
    }
    const auto metrics = nlohmann::json::parse(io::read_file(dir / "metrics.json"));
    for (const char* key : {"rmse", "rmse_mean", "rmse_std", "rmse_median", "rmse_max", "n_constraints"}) {
        EXPECT_TRUE(metrics.contains(key)) << key;
    }
    EXPECT_EQ(metrics["n_constraints"].get<std::size_t>(), r.constraints.size());

    const PoseGraph g = read_g2o(io::read_file(dir / "graph.g2o"));
    EXPECT_EQ(g.nodes.size(), r.graph.nodes.size());
    EXPECT_EQ(g.edges.size(), r.graph.edges.size());

    const auto poses = io::parse_pose_csv(io::read_file(dir / "trajectory.csv"));
    ASSERT_EQ(poses.size(), r.radio_map.size());
    EXPECT_EQ(poses[7], r.radio_map[7].pose);
    EXPECT_EQ(VarianceTable::from_json(io::read_file(dir / "variance_table.json")), r.table);

    std::size_t lines = 0;
    for (char c : io::read_file(dir / "constraints.jsonl")) lines += c == '\n';
    EXPECT_EQ(lines, r.constraints.size());
    fs::remove_all(dir);
}

TEST(Files, MissingInputsAreIoErrors) {
    EXPECT_THROW(io::read_file("/nonexistent/crowdslam/file"), IoError);
    EXPECT_THROW(io::read_track_logs("/nonexistent/crowdslam/dir"), IoError);
    EXPECT_THROW(io::write_file_atomic("/nonexistent/crowdslam/dir/out.txt", "x"), IoError);
    const fs::path empty = scratch_dir("empty");
    EXPECT_THROW(io::read_track_logs(empty), ValidationError);
    fs::remove_all(empty);
}
