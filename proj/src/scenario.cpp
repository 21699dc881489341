#include "funnelsim/scenario.hpp"

#include <cmath>
#include <stdexcept>

namespace funnelsim {

std::string to_string(StepMethod m) {
    return m == StepMethod::Sdirk4 ? "sdirk4" : "dopri5";
}

StepMethod step_method_from_string(const std::string& s) {
    if (s == "sdirk4") return StepMethod::Sdirk4;
    if (s == "dopri5") return StepMethod::DormandPrince;
    throw std::invalid_argument("unknown step method '" + s + "' (expected sdirk4 or dopri5)");
}

void ScenarioSpec::validate() const {
    auto fail = [](const char* what) { throw std::invalid_argument(std::string("scenario: ") + what); };
    if (!std::isfinite(x0)) fail("x0 must be finite");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) fail("t_end must be finite and > 0");
    if (!(tolerances.rel > 0.0) || !(tolerances.abs > 0.0)) fail("tolerances must be > 0");
    if (!(guard_margin > 0.0 && guard_margin < 1.0)) fail("guard_margin must lie in (0, 1)");
    if (report_points < 2) fail("report_points must be >= 2");
    if (max_steps < 1) fail("max_steps must be >= 1");
    // phi(0) = 0 for every admissible funnel, so (0, x0) is always inside F.
}

RhsValue closed_loop_rhs(const ScenarioSpec& s, double t, double x) {
    const double u = -eta_value(s.eta) * h(s.funnel, t, x);
    return {s.drift(s.perturbation(t), x) + g(u), u};
}

double closed_loop_jacobian(const ScenarioSpec& s, double t, double x) {
    const double eta = eta_value(s.eta);
    const double u = -eta * h(s.funnel, t, x);
    return s.drift.d_xi(s.perturbation(t), x) - eta * g_derivative(u) * h_derivative(s.funnel, t, x);
}

}  // namespace funnelsim
