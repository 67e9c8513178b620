#include "crowdslam/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "crowdslam/error.hpp"
#include "crowdslam/g2o_io.hpp"
#include "text_format.hpp"

namespace crowdslam::io {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string format_double(double value) { return detail::format_double(value); }

namespace {

[[noreturn]] void line_error(std::size_t line, const std::string& field, const std::string& what) {
    throw ValidationError("track log line " + std::to_string(line) + ", field '" + field +
                          "': " + what);
}

double finite_number(const json& value, std::size_t line, const std::string& field) {
    if (!value.is_number()) {
        line_error(line, field, "expected a number");
    }
    const double v = value.get<double>();
    if (!std::isfinite(v)) {
        line_error(line, field, "must be finite");
    }
    return v;
}

const json& require(const json& record, const char* key, std::size_t line) {
    const auto it = record.find(key);
    if (it == record.end()) {
        line_error(line, key, "missing");
    }
    return *it;
}

}  // namespace

TrackLog parse_track_log(const std::string& text) {
    TrackLog track;
    std::istringstream stream(text);
    std::string raw;
    std::size_t line = 0;
    while (std::getline(stream, raw)) {
        ++line;
        if (!raw.empty() && raw.back() == '\r') {
            raw.pop_back();
        }
        if (std::all_of(raw.begin(), raw.end(), [](unsigned char c) { return std::isspace(c); })) {
            continue;
        }
        json record;
        try {
            record = json::parse(raw);
        } catch (const json::exception& e) {
            line_error(line, "<record>", std::string("malformed JSON: ") + e.what());
        }
        if (!record.is_object()) {
            line_error(line, "<record>", "expected a JSON object");
        }

        const double t = finite_number(require(record, "t", line), line, "t");
        if (t < 0.0) {
            line_error(line, "t", "must be non-negative");
        }
        if (!track.entries.empty() && !(t > track.entries.back().time)) {
            line_error(line, "t", "time must increase strictly");
        }

        const auto& id = require(record, "track_id", line);
        if (!id.is_string() || id.get<std::string>().empty()) {
            line_error(line, "track_id", "expected a non-empty string");
        }
        if (track.track_id.empty()) {
            track.track_id = id.get<std::string>();
        } else if (track.track_id != id.get<std::string>()) {
            line_error(line, "track_id", "differs from the first record ('" + track.track_id + "')");
        }

        const auto& odom = require(record, "odom", line);
        if (!odom.is_array() || odom.size() != 3) {
            line_error(line, "odom", "expected [x, y, theta]");
        }
        Pose2 pose{finite_number(odom[0], line, "odom"),
                   finite_number(odom[1], line, "odom"),
                   finite_number(odom[2], line, "odom")};
        if (!(pose.theta > -std::numbers::pi && pose.theta <= std::numbers::pi)) {
            line_error(line, "odom", "theta must lie in (-pi, pi]");
        }

        const auto& rss = require(record, "rss", line);
        if (!rss.is_object()) {
            line_error(line, "rss", "expected an object of AP id to dBm");
        }
        Fingerprint fp;
        for (const auto& [ap, value] : rss.items()) {
            if (ap.empty()) {
                line_error(line, "rss", "empty AP id");
            }
            fp.set(ap, finite_number(value, line, "rss." + ap));
        }
        track.entries.push_back({t, pose, std::move(fp)});
    }
    if (track.entries.size() < 2) {
        throw ValidationError("track log: needs at least two records, found " +
                              std::to_string(track.entries.size()));
    }
    return track;
}

std::string serialize_track_log(const TrackLog& track) {
    std::string out;
    for (const auto& e : track.entries) {
        ojson record;
        record["t"] = e.time;
        record["track_id"] = track.track_id;
        record["odom"] = {e.odom_pose.x, e.odom_pose.y, e.odom_pose.theta};
        ojson rss = ojson::object();
        for (const auto& [ap, value] : e.fp.readings()) {
            rss[ap] = value;
        }
        record["rss"] = std::move(rss);
        out += record.dump();
        out += '\n';
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw IoError("failed reading '" + path.string() + "'");
    }
    return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open '" + tmp.string() + "' for writing");
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            throw IoError("failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "'");
    }
}

std::vector<std::filesystem::path> list_track_files(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw IoError("'" + dir.string() + "' is not a directory");
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<TrackLog> read_track_logs(const std::filesystem::path& dir) {
    std::vector<TrackLog> tracks;
    for (const auto& file : list_track_files(dir)) {
        try {
            tracks.push_back(parse_track_log(read_file(file)));
        } catch (const ValidationError& e) {
            throw ValidationError(file.string() + ": " + e.what());
        }
    }
    if (tracks.empty()) {
        throw ValidationError("no *.jsonl track logs in '" + dir.string() + "'");
    }
    return tracks;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

double csv_number(const std::string& cell, std::size_t line, const std::string& column) {
    const auto v = detail::parse_double(cell);
    if (!v) {
        throw ValidationError("csv line " + std::to_string(line) + ", column '" + column +
                              "': invalid number '" + cell + "'");
    }
    return *v;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> row_lines;

    std::size_t column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw ValidationError("csv: missing column '" + name + "'");
        }
        return static_cast<std::size_t>(it - header.begin());
    }
};

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream stream(text);
    std::string raw;
    std::size_t line = 0;
    while (std::getline(stream, raw)) {
        ++line;
        if (!raw.empty() && raw.back() == '\r') {
            raw.pop_back();
        }
        if (raw.empty()) {
            continue;
        }
        auto cells = split_csv(raw);
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw ValidationError("csv line " + std::to_string(line) + ": expected " +
                                  std::to_string(table.header.size()) + " cells, found " +
                                  std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
        table.row_lines.push_back(line);
    }
    if (table.header.empty()) {
        throw ValidationError("csv: empty input");
    }
    return table;
}

}  // namespace

std::string write_truth_csv(std::span<const sim::TruthEntry> truth) {
    std::string out = "node_id,track_id,time,x,y,theta\n";
    for (std::size_t n = 0; n < truth.size(); ++n) {
        const auto& t = truth[n];
        out += std::to_string(n) + ',' + t.track_id + ',' + format_double(t.time) + ',' +
               format_double(t.pose.x) + ',' + format_double(t.pose.y) + ',' +
               format_double(t.pose.theta) + '\n';
    }
    return out;
}

std::vector<TruthRow> parse_truth_csv(const std::string& text) {
    const auto table = parse_csv(text);
    const auto c_node = table.column("node_id");
    const auto c_track = table.column("track_id");
    const auto c_time = table.column("time");
    const auto c_x = table.column("x");
    const auto c_y = table.column("y");
    const auto c_theta = table.column("theta");
    std::vector<TruthRow> rows;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        const auto line = table.row_lines[r];
        const double node = csv_number(cells[c_node], line, "node_id");
        if (node != static_cast<double>(rows.size())) {
            throw ValidationError("csv line " + std::to_string(line) +
                                  ": node ids must run 0, 1, 2, ...");
        }
        rows.push_back({rows.size(), cells[c_track], csv_number(cells[c_time], line, "time"),
                        Pose2{csv_number(cells[c_x], line, "x"), csv_number(cells[c_y], line, "y"),
                              csv_number(cells[c_theta], line, "theta")}});
    }
    return rows;
}

std::string write_trajectory_csv(const RadioMap& map, std::span<const Pose2> truth) {
    if (!truth.empty() && truth.size() != map.size()) {
        throw ValidationError("trajectory: truth size does not match the radio map");
    }
    std::string out = "node_id,track_id,time,x,y,theta";
    out += truth.empty() ? "\n" : ",truth_x,truth_y\n";
    for (std::size_t n = 0; n < map.size(); ++n) {
        const auto& e = map[n];
        out += std::to_string(e.node) + ',' + e.track_id + ',' + format_double(e.time) + ',' +
               format_double(e.pose.x) + ',' + format_double(e.pose.y) + ',' +
               format_double(e.pose.theta);
        if (!truth.empty()) {
            out += ',' + format_double(truth[n].x) + ',' + format_double(truth[n].y);
        }
        out += '\n';
    }
    return out;
}

std::vector<Pose2> parse_pose_csv(const std::string& text) {
    const auto table = parse_csv(text);
    const auto c_x = table.column("x");
    const auto c_y = table.column("y");
    const auto c_theta = table.column("theta");
    std::vector<Pose2> poses;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        const auto line = table.row_lines[r];
        poses.push_back({csv_number(cells[c_x], line, "x"), csv_number(cells[c_y], line, "y"),
                         csv_number(cells[c_theta], line, "theta")});
    }
    return poses;
}

namespace {

ojson stats_to_json(const ErrorStats& s) {
    return ojson{{"rmse", s.rmse},     {"rmse_mean", s.mean}, {"rmse_std", s.stddev},
                 {"rmse_median", s.median}, {"rmse_max", s.max},   {"count", s.count}};
}

}  // namespace

std::string error_stats_json(const ErrorStats& stats) { return stats_to_json(stats).dump(2) + "\n"; }

std::string metrics_json(const SlamReport& report) {
    ojson doc;
    if (report.error) {
        const auto s = stats_to_json(*report.error);
        for (const auto& [k, v] : s.items()) {
            if (k != "count") {
                doc[k] = v;
            }
        }
    } else {
        for (const char* k : {"rmse", "rmse_mean", "rmse_std", "rmse_median", "rmse_max"}) {
            doc[k] = nullptr;
        }
    }
    doc["n_constraints"] = report.loop_edges;
    doc["n_candidates"] = report.candidates;
    doc["n_nodes"] = report.nodes;
    doc["n_odometry_edges"] = report.odometry_edges;
    doc["n_anchor_edges"] = report.anchor_edges;
    doc["n_training_samples"] = report.training_samples;
    doc["pairs_gated"] = report.search.pairs_gated;
    doc["similarity_ops"] = report.search.similarity_ops;
    const auto& opt = report.optimization;
    doc["iterations"] = opt.iterations;
    doc["converged"] = opt.converged;
    doc["chi2_history"] = opt.chi2_history;
    doc["odometry"] = report.odometry_error ? stats_to_json(*report.odometry_error) : ojson(nullptr);
    auto& per_track = doc["per_track"] = ojson::array();
    for (const auto& s : report.per_track_error) {
        per_track.push_back(stats_to_json(s));
    }
    return doc.dump(2) + "\n";
}

std::string constraints_jsonl(std::span<const LoopCandidate> constraints, const VarianceTable& table) {
    std::string out;
    for (const auto& c : constraints) {
        ojson line{{"i", c.i}, {"j", c.j}, {"s", c.similarity}, {"variance", table.lookup(c.similarity)}};
        out += line.dump();
        out += '\n';
    }
    return out;
}

namespace {

ojson config_json(const SlamConfig& c) {
    return ojson{
        {"theta_r", c.theta_r},
        {"floor_dbm", c.floor_dbm},
        {"bin_size", c.bin_size},
        {"training_distance", c.training_distance},
        {"max_samples_per_node", c.max_samples_per_node},
        {"screening",
         {{"min_gap", c.screening.min_gap},
          {"window", c.screening.window},
          {"theta_s", c.screening.theta_s},
          {"gate_distance", c.screening.gate_distance},
          {"gate_orientation", c.screening.gate_orientation}}},
        {"lm",
         {{"max_iterations", c.lm.max_iterations},
          {"lambda_init", c.lm.lambda_init},
          {"lambda_scale", c.lm.lambda_scale},
          {"convergence_tol", c.lm.convergence_tol}}},
        {"motion",
         {{"trans_sigma_per_meter", c.motion.trans_sigma_per_meter},
          {"rot_sigma_per_meter", c.motion.rot_sigma_per_meter}}},
    };
}

SlamConfig config_from(const json& doc) {
    SlamConfig c;
    c.theta_r = doc.value("theta_r", c.theta_r);
    c.floor_dbm = doc.value("floor_dbm", c.floor_dbm);
    c.bin_size = doc.value("bin_size", c.bin_size);
    c.training_distance = doc.value("training_distance", c.training_distance);
    c.max_samples_per_node = doc.value("max_samples_per_node", c.max_samples_per_node);
    if (const auto it = doc.find("screening"); it != doc.end()) {
        auto& s = c.screening;
        s.min_gap = it->value("min_gap", s.min_gap);
        s.window = it->value("window", s.window);
        s.theta_s = it->value("theta_s", s.theta_s);
        s.gate_distance = it->value("gate_distance", s.gate_distance);
        s.gate_orientation = it->value("gate_orientation", s.gate_orientation);
    }
    if (const auto it = doc.find("lm"); it != doc.end()) {
        auto& l = c.lm;
        l.max_iterations = it->value("max_iterations", l.max_iterations);
        l.lambda_init = it->value("lambda_init", l.lambda_init);
        l.lambda_scale = it->value("lambda_scale", l.lambda_scale);
        l.convergence_tol = it->value("convergence_tol", l.convergence_tol);
    }
    if (const auto it = doc.find("motion"); it != doc.end()) {
        auto& m = c.motion;
        m.trans_sigma_per_meter = it->value("trans_sigma_per_meter", m.trans_sigma_per_meter);
        m.rot_sigma_per_meter = it->value("rot_sigma_per_meter", m.rot_sigma_per_meter);
    }
    c.validate();
    return c;
}

}  // namespace

std::string config_to_json(const SlamConfig& config) { return config_json(config).dump(2) + "\n"; }

SlamConfig config_from_json(const std::string& text) {
    try {
        return config_from(json::parse(text));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
}

std::string RunManifest::to_json() const {
    ojson doc;
    doc["format"] = "crowdslam.run_manifest";
    doc["version"] = 1;
    doc["config"] = config_json(config);
    ojson inputs;
    inputs["logs_dir"] = logs_dir;
    inputs["table"] = table_path ? ojson(*table_path) : ojson(nullptr);
    inputs["truth"] = truth_path ? ojson(*truth_path) : ojson(nullptr);
    ojson digests = ojson::object();
    for (const auto& [path, digest] : input_digests) {
        digests[path] = digest;
    }
    inputs["sha256"] = std::move(digests);
    doc["inputs"] = std::move(inputs);
    return doc.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
    try {
        const auto doc = json::parse(text);
        if (doc.value("format", std::string{}) != "crowdslam.run_manifest") {
            throw ValidationError("manifest: unexpected format tag");
        }
        RunManifest m;
        m.config = config_from(doc.at("config"));
        const auto& inputs = doc.at("inputs");
        m.logs_dir = inputs.value("logs_dir", std::string{});
        if (inputs.contains("table") && inputs["table"].is_string()) {
            m.table_path = inputs["table"].get<std::string>();
        }
        if (inputs.contains("truth") && inputs["truth"].is_string()) {
            m.truth_path = inputs["truth"].get<std::string>();
        }
        if (inputs.contains("sha256")) {
            for (const auto& [path, digest] : inputs["sha256"].items()) {
                m.input_digests[path] = digest.get<std::string>();
            }
        }
        return m;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("manifest: ") + e.what());
    }
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256: digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * length);
    for (unsigned int k = 0; k < length; ++k) {
        out += hex[digest[k] >> 4];
        out += hex[digest[k] & 0xf];
    }
    return out;
}

void write_outputs(const SlamResult& result, const RunManifest& manifest,
                   const std::filesystem::path& out_dir, std::span<const Pose2> truth) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
    }
    write_file_atomic(out_dir / "trajectory.csv", write_trajectory_csv(result.radio_map, truth));
    write_file_atomic(out_dir / "metrics.json", metrics_json(result.report));
    write_file_atomic(out_dir / "candidates.jsonl", constraints_jsonl(result.candidates, result.table));
    write_file_atomic(out_dir / "constraints.jsonl",
                      constraints_jsonl(result.constraints, result.table));
    write_file_atomic(out_dir / "graph.g2o", write_g2o(result.graph));
    write_file_atomic(out_dir / "variance_table.json", result.table.to_json());
    write_file_atomic(out_dir / "manifest.json", manifest.to_json());
}

}  // namespace crowdslam::io
