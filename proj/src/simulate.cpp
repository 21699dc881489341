#include "funnelsim/simulate.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "funnelsim/detail/tableaus.hpp"

namespace funnelsim {

std::string to_string(TrajectoryStatus s) {
    switch (s) {
        case TrajectoryStatus::CompletedHorizon:
            return "completed";
        case TrajectoryStatus::BoundaryEscape:
            return "boundary-escape";
        case TrajectoryStatus::StepUnderflow:
            return "step-underflow";
        case TrajectoryStatus::StepLimit:
            return "step-limit";
    }
    return "unknown";
}

namespace {

enum class Outcome { Accepted, Guard, Failed };

struct StepResult {
    Outcome outcome = Outcome::Failed;
    double x_new = 0.0;
    double err_norm = 0.0;
};

class Stepper {
public:
    explicit Stepper(const ScenarioSpec& s) : s_(s), limit_(1.0 - s.guard_margin) {}

    StepResult step(double t, double x, double dt) const {
        return s_.method == StepMethod::Sdirk4 ? sdirk(t, x, dt) : dopri(t, x, dt);
    }

    static constexpr int controller_order(StepMethod m) {
        return m == StepMethod::Sdirk4 ? detail::Sdirk4::kEmbeddedOrder + 1
                                       : detail::DormandPrince5::kEmbeddedOrder + 1;
    }

private:
    bool inside(double t, double x) const { return funnel_ratio(s_.funnel, t, x) < limit_; }

    // The absolute tolerance shrinks with the funnel half-width 1/phi(t), so the
    // error test stays meaningful once the funnel is narrower than abs itself.
    double scale(double t, double x_old, double x_new) const {
        const double phi = s_.funnel.value(t);
        return s_.tolerances.abs / std::max(1.0, phi) +
               s_.tolerances.rel * std::max(std::fabs(x_old), std::fabs(x_new));
    }

    double rhs(double t, double x) const { return closed_loop_rhs(s_, t, x).dxdt; }

    StepResult sdirk(double t, double x, double dt) const {
        using T = detail::Sdirk4;
        std::array<double, T::kStages> k{};
        const double hg = dt * T::gamma;
        double prev = x;
        bool guard_touched = false;

        for (int i = 0; i < T::kStages; ++i) {
            const double ti = t + T::c[i] * dt;
            double base = x;
            for (int j = 0; j < i; ++j) base += dt * T::a[i][j] * k[j];

            double stage = 0.0;
            for (double guess : {prev, base}) {
                if (inside(ti, guess)) {
                    stage = guess;
                    break;
                }
            }

            bool converged = false;
            for (int iter = 0; iter < 12; ++iter) {
                const double residual = stage - base - hg * rhs(ti, stage);
                const double denom = 1.0 - hg * closed_loop_jacobian(s_, ti, stage);
                if (!std::isfinite(residual) || !std::isfinite(denom) || denom == 0.0) {
                    return {Outcome::Failed};
                }
                const double delta = -residual / denom;
                double lambda = 1.0;
                while (!inside(ti, stage + lambda * delta)) {
                    guard_touched = true;
                    lambda *= 0.5;
                    if (lambda < 1e-10) return {Outcome::Guard};
                }
                stage += lambda * delta;
                if (lambda == 1.0 && std::fabs(delta) <= 1e-2 * scale(ti, stage, stage)) {
                    converged = true;
                    break;
                }
            }
            if (!converged) return {guard_touched ? Outcome::Guard : Outcome::Failed};
            k[i] = (stage - base) / hg;
            prev = stage;
        }

        const double x_new = prev;
        double err = 0.0;
        for (int i = 0; i < T::kStages; ++i) err += dt * (T::b[i] - T::b_hat[i]) * k[i];
        // Filter the estimate through (1 - h gamma J)^-1 on stiff decay so that
        // the embedded difference does not overstate the error of damped modes.
        const double denom = 1.0 - hg * closed_loop_jacobian(s_, t + dt, x_new);
        if (denom > 1.0) err /= denom;
        const double norm = std::fabs(err) / scale(t + dt, x, x_new);
        if (!std::isfinite(norm)) return {Outcome::Failed};
        return {Outcome::Accepted, x_new, norm};
    }

    StepResult dopri(double t, double x, double dt) const {
        using T = detail::DormandPrince5;
        std::array<double, T::kStages> k{};
        double stage = x;
        for (int i = 0; i < T::kStages; ++i) {
            const double ti = t + T::c[i] * dt;
            stage = x;
            for (int j = 0; j < i; ++j) stage += dt * T::a[i][j] * k[j];
            if (!inside(ti, stage)) return {Outcome::Guard};
            k[i] = rhs(ti, stage);
            if (!std::isfinite(k[i])) return {Outcome::Failed};
        }
        // Last stage is evaluated at the 5th-order solution (FSAL row).
        const double x_new = stage;
        double err = 0.0;
        for (int i = 0; i < T::kStages; ++i) err += dt * (T::b[i] - T::b_hat[i]) * k[i];
        const double norm = std::fabs(err) / scale(t + dt, x, x_new);
        if (!std::isfinite(norm)) return {Outcome::Failed};
        return {Outcome::Accepted, x_new, norm};
    }

    const ScenarioSpec& s_;
    double limit_;
};

TrajectorySample make_sample(const ScenarioSpec& s, double t, double x) {
    const double u = -eta_value(s.eta) * h(s.funnel, t, x);
    const double w = funnel_ratio(s.funnel, t, x);
    return {t, x, u, w, alpha(w)};
}

void absorb(TrajectoryStats& st, const TrajectorySample& smp) {
    st.max_w = std::max(st.max_w, smp.w);
    st.sup_abs_u = std::max(st.sup_abs_u, std::fabs(smp.u));
    st.max_k = std::max(st.max_k, smp.k);
    st.final_abs_x = std::fabs(smp.x);
}

}  // namespace

Trajectory integrate(const ScenarioSpec& scenario) {
    scenario.validate();
    const Stepper stepper(scenario);
    const int order = Stepper::controller_order(scenario.method);

    Trajectory traj;
    traj.t_end = scenario.t_end;
    traj.eta = scenario.eta;

    const int n_report = scenario.report_points;
    auto report_time = [&](int i) {
        return i == n_report - 1 ? scenario.t_end : scenario.t_end * i / (n_report - 1);
    };

    double t = 0.0;
    double x = scenario.x0;
    traj.samples.push_back(make_sample(scenario, t, x));
    traj.report_indices.push_back(0);
    absorb(traj.stats, traj.samples.back());

    int next_report = 1;
    double dt = std::min(report_time(1), 1e-4 * std::max(1.0, scenario.t_end));
    double err_prev = 1.0;
    bool last_rejected = false;

    auto stop = [&](TrajectoryStatus status) {
        traj.status = status;
        traj.t_fail = t;
    };

    while (next_report < n_report) {
        if (traj.stats.accepted_steps >= scenario.max_steps) {
            stop(TrajectoryStatus::StepLimit);
            return traj;
        }
        const double target = report_time(next_report);
        const double remaining = target - t;
        bool landing = false;
        double trial = dt;
        if (trial >= remaining) {
            trial = remaining;
            landing = true;
        } else if (trial > 0.5 * remaining) {
            trial = 0.5 * remaining;
        }

        StepResult r;
        try {
            r = stepper.step(t, x, trial);
        } catch (const DomainError&) {
            r = {Outcome::Guard};
        }

        if (r.outcome != Outcome::Accepted || r.err_norm > 1.0) {
            ++traj.stats.rejected_steps;
            const bool guard = r.outcome == Outcome::Guard;
            if (guard) ++traj.stats.guard_rejections;
            if (r.outcome == Outcome::Accepted) {
                dt = trial * std::max(0.2, 0.9 * std::pow(r.err_norm, -1.0 / order));
            } else {
                dt = 0.5 * trial;
            }
            last_rejected = true;
            if (dt < kMinStep) {
                stop(guard ? TrajectoryStatus::BoundaryEscape : TrajectoryStatus::StepUnderflow);
                return traj;
            }
            continue;
        }

        t = landing ? target : t + trial;
        x = r.x_new;
        traj.samples.push_back(make_sample(scenario, t, x));
        absorb(traj.stats, traj.samples.back());
        ++traj.stats.accepted_steps;
        if (landing) {
            traj.report_indices.push_back(traj.samples.size() - 1);
            ++next_report;
        }

        // PI step-size controller.
        double fac = 5.0;
        if (r.err_norm > 0.0) {
            fac = 0.9 * std::pow(r.err_norm, -0.7 / order) * std::pow(err_prev, 0.4 / order);
        }
        fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
        err_prev = std::max(r.err_norm, 1e-4);
        last_rejected = false;
        dt = trial * fac;
    }
    traj.status = TrajectoryStatus::CompletedHorizon;
    traj.t_fail = scenario.t_end;
    return traj;
}

std::vector<std::pair<double, double>> gain_timeseries(const Trajectory& traj) {
    std::vector<std::pair<double, double>> out;
    out.reserve(traj.samples.size());
    for (const auto& s : traj.samples) out.emplace_back(s.t, s.k);
    return out;
}

InvariantReport check_invariants(const Trajectory& traj, double conv_threshold, double conv_window) {
    InvariantReport rep;
    rep.max_w = traj.stats.max_w;
    rep.sup_abs_u = traj.stats.sup_abs_u;
    rep.global = traj.status == TrajectoryStatus::CompletedHorizon;
    rep.funnel_contained = rep.global && rep.max_w < 1.0;
    rep.epsilon = 1.0 - rep.max_w;
    rep.control_bound =
        rep.max_w < 1.0 ? rep.max_w * (1.0 / (1.0 - rep.max_w)) : std::numeric_limits<double>::infinity();
    rep.control_bounded = rep.sup_abs_u <= rep.control_bound + 1e-9;

    const double window_start = (1.0 - conv_window) * traj.t_end;
    bool any = false;
    double worst = 0.0;
    for (const auto& s : traj.samples) {
        if (s.t >= window_start) {
            any = true;
            worst = std::max(worst, std::fabs(s.x));
        }
    }
    rep.window_max_abs_x = any ? worst : std::numeric_limits<double>::quiet_NaN();
    rep.converged = rep.global && any && worst <= conv_threshold;
    return rep;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    char buf[128];
    os << "t,x,u,w,k\n";
    for (std::size_t idx : traj.report_indices) {
        const auto& s = traj.samples[idx];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.x, s.u, s.w, s.k);
        os << buf;
    }
}

std::vector<TrajectorySample> read_trajectory_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "t,x,u,w,k") {
        throw std::runtime_error("trajectory csv: line 1: expected header 't,x,u,w,k'");
    }
    std::vector<TrajectorySample> out;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        double vals[5];
        int n = 0;
        while (std::getline(row, cell, ',')) {
            if (n == 5) break;
            try {
                std::size_t used = 0;
                vals[n] = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw std::runtime_error("trajectory csv: line " + std::to_string(lineno) + ": bad number '" +
                                         cell + "'");
            }
            ++n;
        }
        if (n != 5 || row.rdbuf()->in_avail() > 0) {
            throw std::runtime_error("trajectory csv: line " + std::to_string(lineno) + ": expected 5 fields");
        }
        out.push_back({vals[0], vals[1], vals[2], vals[3], vals[4]});
    }
    return out;
}

}  // namespace funnelsim
