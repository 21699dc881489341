// funnelsim/scenario.hpp
//
// A closed-loop instance x' = f(p(t), x) + g(-eta h(t, x)), x(0) = x0.
#pragma once

#include <string>

#include "funnelsim/drift.hpp"
#include "funnelsim/funnel.hpp"
#include "funnelsim/perturbation.hpp"

namespace funnelsim {

enum class StepMethod {
    Sdirk4,         // L-stable singly diagonally implicit pair, orders 4(3)
    DormandPrince,  // explicit pair, orders 5(4)
};

std::string to_string(StepMethod m);
/// Accepts "sdirk4" and "dopri5".
StepMethod step_method_from_string(const std::string& s);

struct Tolerances {
    double rel = 1e-6;
    double abs = 1e-9;

    bool operator==(const Tolerances&) const = default;
};

struct ScenarioSpec {
    DriftFunction drift;
    PerturbationSignal perturbation;
    FunnelFunction funnel = FunnelFunction::identity();
    FeedbackSign eta = FeedbackSign::Negative;
    double x0 = 0.0;
    double t_end = 50.0;
    Tolerances tolerances;
    /// Steps reaching phi(t)|x| >= 1 - guard_margin are rejected.
    double guard_margin = 1e-3;
    StepMethod method = StepMethod::Sdirk4;
    /// Uniform reporting grid (including both ends) that the stepper lands on.
    int report_points = 2000;
    long max_steps = 20'000'000;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;

    bool operator==(const ScenarioSpec&) const = default;
};

struct RhsValue {
    double dxdt;
    /// Control value u = -eta h(t, x).
    double u;
};

/// f(p(t), x) + g(-eta h(t, x)) together with u. Throws FunnelBoundaryError off F.
[[nodiscard]] RhsValue closed_loop_rhs(const ScenarioSpec& s, double t, double x);

/// d/dx of the right-hand side: f_xi(p, x) - eta g'(-eta h) h_x.
[[nodiscard]] double closed_loop_jacobian(const ScenarioSpec& s, double t, double x);

}  // namespace funnelsim
