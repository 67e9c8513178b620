#include "crowdslam/g2o_io.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "crowdslam/error.hpp"
#include "text_format.hpp"

namespace crowdslam {

using detail::format_double;

std::string write_g2o(const PoseGraph& graph) {
    std::string out;
    for (std::size_t n = 0; n < graph.nodes.size(); ++n) {
        const auto& p = graph.nodes[n];
        out += "VERTEX_SE2 " + std::to_string(n) + ' ' + format_double(p.x) + ' ' +
               format_double(p.y) + ' ' + format_double(p.theta) + '\n';
    }
    for (const auto id : graph.fixed) {
        out += "FIX " + std::to_string(id) + '\n';
    }
    for (const auto& e : graph.edges) {
        const Eigen::Vector3d info = e.information();
        out += "EDGE_SE2 " + std::to_string(e.from) + ' ' + std::to_string(e.to) + ' ' +
               format_double(e.measurement.x) + ' ' + format_double(e.measurement.y) + ' ' +
               format_double(e.measurement.theta) + ' ' + format_double(info[0]) + " 0 0 " +
               format_double(info[1]) + " 0 " + format_double(info[2]) + '\n';
    }
    return out;
}

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    throw ValidationError("g2o line " + std::to_string(line) + ": " + what);
}

std::vector<double> numbers(std::istringstream& in, std::size_t count, std::size_t line) {
    std::vector<double> values;
    std::string token;
    while (values.size() < count && in >> token) {
        const auto v = detail::parse_double(token);
        if (!v) {
            fail(line, "invalid number '" + token + "'");
        }
        values.push_back(*v);
    }
    if (values.size() != count || (in >> token)) {
        fail(line, "expected " + std::to_string(count) + " numeric fields");
    }
    return values;
}

std::size_t as_id(double v, std::size_t line) {
    if (v < 0.0 || v != std::floor(v) || v > 1e12) {
        fail(line, "invalid node id");
    }
    return static_cast<std::size_t>(v);
}

}  // namespace

PoseGraph read_g2o(const std::string& text) {
    std::vector<std::pair<std::size_t, Pose2>> vertices;
    std::vector<Edge> edges;
    std::vector<std::size_t> fixed;

    std::istringstream stream(text);
    std::string raw;
    std::size_t line = 0;
    while (std::getline(stream, raw)) {
        ++line;
        std::istringstream in(raw);
        std::string tag;
        if (!(in >> tag) || tag.front() == '#') {
            continue;
        }
        if (tag == "VERTEX_SE2") {
            const auto v = numbers(in, 4, line);
            vertices.emplace_back(as_id(v[0], line), Pose2{v[1], v[2], normalize_angle(v[3])});
        } else if (tag == "FIX") {
            fixed.push_back(as_id(numbers(in, 1, line)[0], line));
        } else if (tag == "EDGE_SE2") {
            const auto v = numbers(in, 11, line);
            if (v[6] != 0.0 || v[7] != 0.0 || v[9] != 0.0) {
                fail(line, "only diagonal information matrices are supported");
            }
            if (!(v[5] > 0.0 && v[8] > 0.0 && v[10] > 0.0)) {
                fail(line, "information diagonal must be positive");
            }
            Edge e;
            e.from = as_id(v[0], line);
            e.to = as_id(v[1], line);
            e.kind = e.to == e.from + 1 ? EdgeKind::Odometry : EdgeKind::Loop;
            e.measurement = {v[2], v[3], normalize_angle(v[4])};
            e.covariance = Eigen::Vector3d(1.0 / v[5], 1.0 / v[8], 1.0 / v[10]);
            edges.push_back(e);
        } else {
            fail(line, "unsupported tag '" + tag + "'");
        }
    }

    PoseGraph graph;
    graph.nodes.resize(vertices.size());
    std::vector<bool> seen(vertices.size(), false);
    for (const auto& [id, pose] : vertices) {
        if (id >= vertices.size() || seen[id]) {
            throw ValidationError("g2o: vertex ids must be unique and contiguous from 0");
        }
        seen[id] = true;
        graph.nodes[id] = pose;
    }
    graph.edges = std::move(edges);
    graph.fixed.insert(fixed.begin(), fixed.end());
    graph.validate();
    return graph;
}

}  // namespace crowdslam
