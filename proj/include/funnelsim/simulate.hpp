// funnelsim/simulate.hpp
//
// Adaptive integration of the closed-loop initial-value problem with a
// funnel-boundary guard, plus trajectory diagnostics.
#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "funnelsim/scenario.hpp"

namespace funnelsim {

struct TrajectorySample {
    double t;
    double x;
    double u;  ///< -eta h(t, x)
    double w;  ///< phi(t)|x|
    double k;  ///< alpha(w), the instantaneous gain
};

enum class TrajectoryStatus {
    CompletedHorizon,
    /// Step size fell below the floor while the guard kept rejecting steps.
    BoundaryEscape,
    /// Step size fell below the floor with the guard inactive.
    StepUnderflow,
    /// max_steps accepted steps without reaching t_end.
    StepLimit,
};

std::string to_string(TrajectoryStatus s);

struct TrajectoryStats {
    double max_w = 0.0;
    double sup_abs_u = 0.0;
    double final_abs_x = 0.0;
    double max_k = 1.0;
    long accepted_steps = 0;
    long rejected_steps = 0;
    long guard_rejections = 0;
};

struct Trajectory {
    /// Every accepted step, starting at t = 0. Times strictly increase.
    std::vector<TrajectorySample> samples;
    /// Indices into `samples` of the uniform reporting grid points reached.
    std::vector<std::size_t> report_indices;
    TrajectoryStatus status = TrajectoryStatus::CompletedHorizon;
    /// Time at which integration stopped early; t_end when completed.
    double t_fail = 0.0;
    double t_end = 0.0;
    FeedbackSign eta = FeedbackSign::Negative;
    TrajectoryStats stats;
};

/// Smallest step the integrator will attempt.
inline constexpr double kMinStep = 1e-12;

/// Integrates x' = f(p(t), x) + g(-eta h(t, x)) on [0, t_end].
///
/// Every accepted step lands strictly inside {phi(t)|x| < 1 - guard_margin}:
/// a step whose stages or endpoint reach the guard band is rejected and
/// retried with half the step. Steps are truncated so that each reporting
/// grid time is hit exactly.
[[nodiscard]] Trajectory integrate(const ScenarioSpec& scenario);

/// (t, k) over all samples.
[[nodiscard]] std::vector<std::pair<double, double>> gain_timeseries(const Trajectory& traj);

struct InvariantReport {
    bool funnel_contained = false;
    /// 1 - max_w.
    double epsilon = 0.0;
    bool converged = false;
    bool control_bounded = false;
    double sup_abs_u = 0.0;
    /// (1 - eps) alpha(1 - eps) = max_w / (1 - max_w); +inf when max_w >= 1.
    double control_bound = 0.0;
    bool global = false;
    double max_w = 0.0;
    /// max |x| over the trailing convergence window (NaN if the window is empty).
    double window_max_abs_x = 0.0;
};

/// Default convergence test: |x| <= 1e-2 over the final 20% of the horizon.
inline constexpr double kDefaultConvThreshold = 1e-2;
inline constexpr double kDefaultConvWindow = 0.2;

[[nodiscard]] InvariantReport check_invariants(const Trajectory& traj,
                                               double conv_threshold = kDefaultConvThreshold,
                                               double conv_window = kDefaultConvWindow);

/// Header `t,x,u,w,k`, one row per reporting-grid sample, 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// Parses the CSV form back into samples. Throws std::runtime_error on
/// malformed input, naming the line.
[[nodiscard]] std::vector<TrajectorySample> read_trajectory_csv(std::istream& is);

}  // namespace funnelsim
