#include "crowdslam/optimizer.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "crowdslam/error.hpp"

namespace crowdslam {

namespace {

constexpr std::ptrdiff_t kFixed = -1;
constexpr double kLambdaCeiling = 1e16;

struct NormalEquations {
    Eigen::SparseMatrix<double> hessian;
    Eigen::VectorXd gradient;
};

class LinearSystemBuilder {
public:
    LinearSystemBuilder(const PoseGraph& graph, std::vector<std::ptrdiff_t> block_of)
        : graph_(graph), block_of_(std::move(block_of)) {
        for (const auto b : block_of_) {
            if (b != kFixed) {
                ++free_blocks_;
            }
        }
    }

    std::size_t dimension() const { return 3 * free_blocks_; }

    // Edges are visited in storage order and setFromTriplets sums duplicates
    // in insertion order, so the assembled system is reproducible.
    NormalEquations build() const {
        const auto dim = static_cast<Eigen::Index>(dimension());
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(graph_.edges.size() * 36 + static_cast<std::size_t>(dim));
        for (Eigen::Index k = 0; k < dim; ++k) {
            triplets.emplace_back(k, k, 0.0);
        }
        Eigen::VectorXd gradient = Eigen::VectorXd::Zero(dim);

        for (const auto& edge : graph_.edges) {
            const auto lin = linearize(edge, graph_.nodes[edge.from], graph_.nodes[edge.to]);
            const Eigen::Matrix3d omega = edge.information().asDiagonal();
            const std::ptrdiff_t blocks[2] = {block_of_[edge.from], block_of_[edge.to]};
            const Eigen::Matrix3d* jac[2] = {&lin.jacobian_from, &lin.jacobian_to};
            for (int a = 0; a < 2; ++a) {
                if (blocks[a] == kFixed) {
                    continue;
                }
                const Eigen::Matrix3d jt_omega = jac[a]->transpose() * omega;
                gradient.segment<3>(3 * blocks[a]) += jt_omega * lin.error;
                for (int b = 0; b < 2; ++b) {
                    if (blocks[b] == kFixed) {
                        continue;
                    }
                    const Eigen::Matrix3d block = jt_omega * (*jac[b]);
                    for (int r = 0; r < 3; ++r) {
                        for (int c = 0; c < 3; ++c) {
                            triplets.emplace_back(3 * blocks[a] + r, 3 * blocks[b] + c, block(r, c));
                        }
                    }
                }
            }
        }
        NormalEquations eq;
        eq.hessian.resize(dim, dim);
        eq.hessian.setFromTriplets(triplets.begin(), triplets.end());
        eq.gradient = std::move(gradient);
        return eq;
    }

    std::vector<Pose2> apply(const std::vector<Pose2>& nodes, const Eigen::VectorXd& step) const {
        std::vector<Pose2> out = nodes;
        for (std::size_t n = 0; n < out.size(); ++n) {
            const auto b = block_of_[n];
            if (b == kFixed) {
                continue;
            }
            out[n].x += step[3 * b];
            out[n].y += step[3 * b + 1];
            out[n].theta = normalize_angle(out[n].theta + step[3 * b + 2]);
        }
        return out;
    }

private:
    const PoseGraph& graph_;
    std::vector<std::ptrdiff_t> block_of_;
    std::size_t free_blocks_ = 0;
};

double chi2_at(const std::vector<Pose2>& nodes, const std::vector<Edge>& edges) {
    double total = 0.0;
    for (const auto& e : edges) {
        const Eigen::Vector3d err = edge_error(e, nodes[e.from], nodes[e.to]);
        total += err.cwiseProduct(err).dot(e.information());
    }
    return total;
}

}  // namespace

OptimizeReport optimize(PoseGraph& graph, const LmOptions& opts) {
    graph.validate();
    if (graph.fixed.empty()) {
        throw ValidationError("optimize: no fixed node; the problem has a free gauge");
    }
    if (!graph.anchored()) {
        throw ValidationError("optimize: graph is disconnected; some nodes cannot be reached from "
                              "a fixed node");
    }
    if (!(opts.lambda_init > 0.0) || !(opts.lambda_scale > 1.0) || !(opts.convergence_tol >= 0.0)) {
        throw ValidationError("optimize: invalid Levenberg-Marquardt options");
    }

    std::vector<std::ptrdiff_t> block_of(graph.nodes.size(), kFixed);
    std::ptrdiff_t next = 0;
    for (std::size_t n = 0; n < graph.nodes.size(); ++n) {
        if (!graph.fixed.contains(n)) {
            block_of[n] = next++;
        }
    }
    const LinearSystemBuilder builder(graph, std::move(block_of));

    OptimizeReport report;
    double current = chi2(graph);
    report.chi2_history.push_back(current);
    if (current == 0.0 || builder.dimension() == 0) {
        report.converged = true;
        return report;
    }

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    NormalEquations eq = builder.build();
    solver.analyzePattern(eq.hessian);

    double lambda = opts.lambda_init;
    while (report.iterations < opts.max_iterations) {
        ++report.iterations;
        Eigen::SparseMatrix<double> damped = eq.hessian;
        damped.diagonal().array() += lambda;
        solver.factorize(damped);
        if (solver.info() != Eigen::Success) {
            throw ValidationError("optimize: damped normal equations are singular");
        }
        const Eigen::VectorXd step = solver.solve(-eq.gradient);
        if (solver.info() != Eigen::Success || !step.allFinite()) {
            throw ValidationError("optimize: linear solve failed");
        }

        std::vector<Pose2> trial = builder.apply(graph.nodes, step);
        const double trial_chi2 = chi2_at(trial, graph.edges);
        LmIteration it{lambda, current, trial_chi2, trial_chi2 < current};
        report.trace.push_back(it);

        if (it.accepted) {
            const double gain = current - trial_chi2;
            graph.nodes = std::move(trial);
            report.chi2_history.push_back(trial_chi2);
            lambda = std::max(lambda / opts.lambda_scale, std::numeric_limits<double>::min());
            if (gain <= opts.convergence_tol * current || trial_chi2 == 0.0) {
                current = trial_chi2;
                report.converged = true;
                break;
            }
            current = trial_chi2;
            eq = builder.build();
        } else {
            // A rejected step that barely moves chi2 means we are at the
            // numerical floor of the minimum.
            if (std::abs(trial_chi2 - current) <= opts.convergence_tol * current) {
                report.converged = true;
                break;
            }
            lambda *= opts.lambda_scale;
            if (lambda > kLambdaCeiling) {
                break;
            }
        }
    }
    return report;
}

}  // namespace crowdslam
