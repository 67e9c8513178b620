#include "crowdslam/loop_closure.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "crowdslam/error.hpp"

namespace crowdslam {

void ScreeningConfig::validate() const {
    if (min_gap < 1) {
        throw ValidationError("screening: min gap must be at least 1");
    }
    if (!(window >= 0.0)) {
        throw ValidationError("screening: window must be non-negative");
    }
    if (!(theta_s > 0.0 && theta_s <= 1.0)) {
        throw ValidationError("screening: similarity threshold must lie in (0, 1]");
    }
    if (!(gate_distance >= 0.0) || !(gate_orientation >= 0.0)) {
        throw ValidationError("screening: gates must be non-negative");
    }
}

namespace {

void check_node_table(std::span<const NodeRecord> nodes) {
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (nodes[k].id != k) {
            throw ValidationError("loop closure: node ids must be dense and ordered; entry " +
                                  std::to_string(k) + " has id " + std::to_string(nodes[k].id));
        }
    }
}

bool passes_gate(const NodeRecord& a, const NodeRecord& b, const ScreeningConfig& cfg) {
    if (planar_distance(a.pose, b.pose) > cfg.gate_distance) {
        return false;
    }
    return std::abs(normalize_angle(b.pose.theta - a.pose.theta)) <= cfg.gate_orientation;
}

}  // namespace

std::vector<LoopCandidate> find_candidates(std::span<const NodeRecord> nodes,
                                           const ScreeningConfig& cfg, double floor_dbm,
                                           CandidateSearchStats* stats) {
    cfg.validate();
    check_node_table(nodes);
    CandidateSearchStats local;
    std::vector<LoopCandidate> out;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < nodes.size(); ++j) {
            ++local.pairs_considered;
            if (!passes_gate(nodes[i], nodes[j], cfg)) {
                continue;
            }
            ++local.pairs_gated;
            local.similarity_ops += similarity_op_count(nodes[i].fp, nodes[j].fp);
            const double s = cosine_similarity(nodes[i].fp, nodes[j].fp, floor_dbm);
            if (s >= cfg.theta_s) {
                out.push_back({i, j, s});
            }
        }
    }
    if (stats != nullptr) {
        *stats = local;
    }
    return out;
}

std::vector<LoopCandidate> screen_candidates(std::span<const LoopCandidate> candidates,
                                             std::span<const NodeRecord> nodes,
                                             const ScreeningConfig& cfg) {
    cfg.validate();
    check_node_table(nodes);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const auto& c = candidates[k];
        if (c.i >= c.j || c.j >= nodes.size()) {
            throw ValidationError("screening: candidate " + std::to_string(k) +
                                  " has invalid node ids");
        }
        if (k > 0) {
            const auto& p = candidates[k - 1];
            if (std::tie(p.i, p.j) >= std::tie(c.i, c.j)) {
                throw ValidationError("screening: candidates must be sorted by (i, j) and unique");
            }
        }
    }

    // Rule 1.
    std::vector<LoopCandidate> kept;
    kept.reserve(candidates.size());
    for (const auto& c : candidates) {
        const auto& a = nodes[c.i];
        const auto& b = nodes[c.j];
        if (a.track == b.track && b.index_in_track - a.index_in_track < cfg.min_gap) {
            continue;
        }
        kept.push_back(c);
    }

    // Rule 2. Candidates sharing an anchor are contiguous because of the sort.
    auto beats = [](const LoopCandidate& x, const LoopCandidate& y) {
        return x.similarity > y.similarity || (x.similarity == y.similarity && x.j < y.j);
    };
    std::vector<LoopCandidate> out;
    out.reserve(kept.size());
    std::size_t group_begin = 0;
    while (group_begin < kept.size()) {
        std::size_t group_end = group_begin;
        while (group_end < kept.size() && kept[group_end].i == kept[group_begin].i) {
            ++group_end;
        }
        for (std::size_t a = group_begin; a < group_end; ++a) {
            const auto& target = nodes[kept[a].j];
            bool dominated = false;
            for (std::size_t b = group_begin; b < group_end && !dominated; ++b) {
                if (a == b) {
                    continue;
                }
                const auto& other = nodes[kept[b].j];
                dominated = other.track == target.track &&
                            std::abs(other.path_position - target.path_position) <= cfg.window &&
                            beats(kept[b], kept[a]);
            }
            if (!dominated) {
                out.push_back(kept[a]);
            }
        }
        group_begin = group_end;
    }
    return out;
}

Edge candidate_to_edge(const LoopCandidate& candidate, const VarianceTable& table) {
    const double v = table.lookup(candidate.similarity);
    Edge edge;
    edge.from = candidate.i;
    edge.to = candidate.j;
    edge.kind = EdgeKind::Loop;
    edge.measurement = Pose2{};
    edge.covariance = Eigen::Vector3d(v, v, kUninformativeHeadingVariance);
    return edge;
}

}  // namespace crowdslam
