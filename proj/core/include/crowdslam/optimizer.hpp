#pragma once

#include <cstddef>
#include <vector>

#include "crowdslam/pose_graph.hpp"

namespace crowdslam {

struct LmOptions {
    std::size_t max_iterations = 100;
    double lambda_init = 1e-4;
    double lambda_scale = 10.0;
    /// Stop once an accepted step changes chi2 by less than this fraction.
    double convergence_tol = 1e-6;
};

struct LmIteration {
    double lambda = 0.0;
    double chi2_before = 0.0;
    double chi2_trial = 0.0;
    bool accepted = false;
};

struct OptimizeReport {
    std::size_t iterations = 0;
    /// Initial chi2 followed by the chi2 after every accepted step.
    std::vector<double> chi2_history;
    std::vector<LmIteration> trace;
    bool converged = false;

    double initial_chi2() const { return chi2_history.front(); }
    double final_chi2() const { return chi2_history.back(); }
};

/// Levenberg-Marquardt over all non-fixed nodes.
///
/// Each iteration solves (H + lambda*I) dx = -b with a sparse LDL^T
/// factorization. Improving steps are accepted and divide lambda by
/// `lambda_scale`; other steps leave the estimates untouched and multiply it.
/// Throws ValidationError if no node is fixed, if some node cannot be reached
/// from a fixed node, or if the damped system cannot be factorized.
OptimizeReport optimize(PoseGraph& graph, const LmOptions& opts = {});

}  // namespace crowdslam
