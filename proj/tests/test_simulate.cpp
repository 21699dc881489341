#include <doctest.h>

#include <cmath>
#include <sstream>

#include "funnelsim/detail/tableaus.hpp"
#include "funnelsim/simulate.hpp"

using namespace funnelsim;

namespace {

ScenarioSpec base(double x0, FeedbackSign eta) {
    ScenarioSpec s;
    s.x0 = x0;
    s.eta = eta;
    return s;
}

template <class T>
void check_order_conditions(double tol) {
    double sb = 0, sbc = 0, sbc2 = 0, sbac = 0, sbh = 0, sbhc = 0, sbhc2 = 0;
    for (int i = 0; i < T::kStages; ++i) {
        double row = 0.0, ac = 0.0;
        for (int j = 0; j < T::kStages; ++j) {
            row += T::a[i][j];
            ac += T::a[i][j] * T::c[j];
        }
        CHECK(row == doctest::Approx(T::c[i]).epsilon(tol));
        sb += T::b[i];
        sbc += T::b[i] * T::c[i];
        sbc2 += T::b[i] * T::c[i] * T::c[i];
        sbac += T::b[i] * ac;
        sbh += T::b_hat[i];
        sbhc += T::b_hat[i] * T::c[i];
        sbhc2 += T::b_hat[i] * T::c[i] * T::c[i];
    }
    CHECK(sb == doctest::Approx(1.0).epsilon(tol));
    CHECK(sbc == doctest::Approx(0.5).epsilon(tol));
    CHECK(sbc2 == doctest::Approx(1.0 / 3).epsilon(tol));
    CHECK(sbac == doctest::Approx(1.0 / 6).epsilon(tol));
    CHECK(sbh == doctest::Approx(1.0).epsilon(tol));
    CHECK(sbhc == doctest::Approx(0.5).epsilon(tol));
    CHECK(sbhc2 == doctest::Approx(1.0 / 3).epsilon(tol));
}

}  // namespace

TEST_CASE("tableaus satisfy the low-order conditions") {
    check_order_conditions<detail::Sdirk4>(1e-14);
    check_order_conditions<detail::DormandPrince5>(1e-14);
    // Stiffly accurate: the last stage row equals b.
    for (int i = 0; i < detail::Sdirk4::kStages; ++i) {
        CHECK(detail::Sdirk4::a[4][i] == detail::Sdirk4::b[i]);
        CHECK(detail::Sdirk4::a[i][i] == detail::Sdirk4::gamma);
    }
}

TEST_CASE("zero initial state stays at zero") {
    for (auto eta : {FeedbackSign::Negative, FeedbackSign::Positive}) {
        const auto traj = integrate(base(0.0, eta));
        CHECK(traj.status == TrajectoryStatus::CompletedHorizon);
        CHECK(traj.report_indices.size() == 2000);
        for (const auto& s : traj.samples) {
            CHECK(s.x == 0.0);
            CHECK(s.u == 0.0);
            CHECK(s.k == 1.0);
        }
        const auto rep = check_invariants(traj);
        CHECK(rep.funnel_contained);
        CHECK(rep.converged);
        CHECK(rep.sup_abs_u == 0.0);
    }
}

TEST_CASE("trajectories stay inside the funnel under both feedback signs") {
    for (auto eta : {FeedbackSign::Negative, FeedbackSign::Positive}) {
        for (const auto& phi : {FunnelFunction::identity(), FunnelFunction::exp_minus_one(0.5)}) {
            auto s = base(0.5, eta);
            s.funnel = phi;
            s.perturbation = PerturbationSignal::sinusoid(1.0, 1.0);
            s.drift = DriftFunction::affine(1.0, 0.5);
            const auto traj = integrate(s);
            REQUIRE(traj.status == TrajectoryStatus::CompletedHorizon);
            CHECK(traj.t_fail == s.t_end);
            double prev_t = -1.0;
            for (const auto& smp : traj.samples) {
                CHECK(smp.t > prev_t);
                prev_t = smp.t;
                CHECK(smp.w < 1.0 - s.guard_margin);
                if (smp.t > 0.0) CHECK(std::fabs(smp.x) < 1.0 / phi.value(smp.t));
                CHECK(smp.k == doctest::Approx(1.0 / (1.0 - smp.w)));
            }
            const auto rep = check_invariants(traj);
            CHECK(rep.funnel_contained);
            CHECK(rep.control_bounded);
            CHECK(rep.epsilon == doctest::Approx(1.0 - rep.max_w));
        }
    }
}

TEST_CASE("reporting grid is hit exactly") {
    auto s = base(0.4, FeedbackSign::Negative);
    s.t_end = 7.0;
    s.report_points = 15;
    const auto traj = integrate(s);
    REQUIRE(traj.report_indices.size() == 15);
    for (int i = 0; i < 15; ++i) {
        CHECK(traj.samples[traj.report_indices[i]].t == (i == 14 ? 7.0 : 7.0 * i / 14));
    }
}

TEST_CASE("integration is deterministic") {
    auto s = base(1.3, FeedbackSign::Positive);
    s.perturbation = PerturbationSignal::noise_spline(5, 1.0);
    s.drift = DriftFunction::quadratic(0.3);
    const auto a = integrate(s);
    const auto b = integrate(s);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].t == b.samples[i].t);
        CHECK(a.samples[i].x == b.samples[i].x);
    }
}

TEST_CASE("negating the initial state negates the trajectory for zero drift") {
    // g and h are odd in x, so x -> -x maps solutions to solutions.
    for (auto eta : {FeedbackSign::Negative, FeedbackSign::Positive}) {
        const auto a = integrate(base(0.8, eta));
        const auto b = integrate(base(-0.8, eta));
        REQUIRE(a.samples.size() == b.samples.size());
        for (std::size_t i = 0; i < a.samples.size(); ++i) {
            CHECK(a.samples[i].t == b.samples[i].t);
            CHECK(a.samples[i].x == -b.samples[i].x);
            CHECK(a.samples[i].u == -b.samples[i].u);
        }
    }
}

TEST_CASE("tightening tolerances changes the end state by a tolerance-sized amount") {
    for (auto eta : {FeedbackSign::Negative, FeedbackSign::Positive}) {
        auto s = base(0.9, eta);
        s.drift = DriftFunction::affine(1.0, 0.2);
        s.perturbation = PerturbationSignal::sinusoid(0.5, 2.0);
        s.t_end = 20.0;
        const auto coarse = integrate(s);
        s.tolerances = {s.tolerances.rel / 100, s.tolerances.abs / 100};
        const auto fine = integrate(s);
        const double xc = coarse.samples.back().x;
        const double xf = fine.samples.back().x;
        CHECK(std::fabs(xc - xf) < 10.0 * (1e-9 + 1e-6 * std::fabs(xc)));
    }
}

TEST_CASE("implicit and explicit steppers agree on moderate funnels") {
    for (auto eta : {FeedbackSign::Negative, FeedbackSign::Positive}) {
        auto s = base(0.6, eta);
        s.t_end = 10.0;
        s.tolerances = {1e-9, 1e-12};
        s.report_points = 101;
        const auto a = integrate(s);
        s.method = StepMethod::DormandPrince;
        const auto b = integrate(s);
        REQUIRE(a.report_indices.size() == b.report_indices.size());
        for (std::size_t i = 0; i < a.report_indices.size(); ++i) {
            const double xa = a.samples[a.report_indices[i]].x;
            const double xb = b.samples[b.report_indices[i]].x;
            CHECK(xa == doctest::Approx(xb).epsilon(1e-6).scale(1e-3));
        }
    }
}

TEST_CASE("wide guard band forces a boundary escape") {
    // With a 0.999 margin the admissible band is phi|x| < 0.001, and x0 = 1
    // leaves it as soon as phi(t) exceeds 0.001.
    auto s = base(1.0, FeedbackSign::Negative);
    s.guard_margin = 0.999;
    const auto traj = integrate(s);
    CHECK(traj.status == TrajectoryStatus::BoundaryEscape);
    CHECK(traj.t_fail < 0.01);
    const auto rep = check_invariants(traj);
    CHECK(!rep.global);
    CHECK(!rep.funnel_contained);
    CHECK(!rep.converged);
}

TEST_CASE("step budget exhaustion is reported") {
    auto s = base(0.5, FeedbackSign::Negative);
    s.max_steps = 10;
    const auto traj = integrate(s);
    CHECK(traj.status == TrajectoryStatus::StepLimit);
    CHECK(traj.stats.accepted_steps == 10);
    CHECK(traj.t_fail < s.t_end);
}

TEST_CASE("invariant report on synthetic trajectories") {
    Trajectory traj;
    traj.t_end = 10.0;
    traj.status = TrajectoryStatus::CompletedHorizon;
    traj.stats.max_w = 0.5;
    traj.stats.sup_abs_u = 1.0;
    traj.samples = {{0.0, 1.0, 0, 0, 1}, {7.9, 0.5, 0, 0, 1}, {8.0, 0.005, 0, 0, 1}, {10.0, -0.009, 0, 0, 1}};
    auto rep = check_invariants(traj);
    CHECK(rep.control_bound == doctest::Approx(1.0));
    CHECK(rep.control_bounded);
    CHECK(rep.funnel_contained);
    CHECK(rep.converged);
    CHECK(rep.window_max_abs_x == doctest::Approx(0.009));

    traj.stats.sup_abs_u = 1.01;
    CHECK(!check_invariants(traj).control_bounded);
    CHECK(!check_invariants(traj, 1e-3).converged);
    CHECK(!check_invariants(traj, 1e-2, 0.3).converged);

    traj.status = TrajectoryStatus::StepUnderflow;
    rep = check_invariants(traj);
    CHECK(!rep.global);
    CHECK(!rep.funnel_contained);
}

TEST_CASE("gain time series follows the samples") {
    const auto traj = integrate(base(0.3, FeedbackSign::Negative));
    const auto ks = gain_timeseries(traj);
    REQUIRE(ks.size() == traj.samples.size());
    for (std::size_t i = 0; i < ks.size(); ++i) {
        CHECK(ks[i].first == traj.samples[i].t);
        CHECK(ks[i].second >= 1.0);
    }
}

TEST_CASE("trajectory csv round trip") {
    auto s = base(0.7, FeedbackSign::Positive);
    s.t_end = 3.0;
    s.report_points = 31;
    const auto traj = integrate(s);
    std::stringstream ss;
    write_trajectory_csv(ss, traj);
    std::string header;
    std::getline(std::istringstream(ss.str()), header);
    CHECK(header == "t,x,u,w,k");
    const auto back = read_trajectory_csv(ss);
    REQUIRE(back.size() == 31);
    for (std::size_t i = 0; i < back.size(); ++i) {
        const auto& a = traj.samples[traj.report_indices[i]];
        CHECK(back[i].t == a.t);
        CHECK(back[i].x == a.x);
        CHECK(back[i].u == a.u);
        CHECK(back[i].w == a.w);
        CHECK(back[i].k == a.k);
    }
}

TEST_CASE("malformed trajectory csv is rejected with a line number") {
    std::istringstream bad_header("t,x\n0,0\n");
    CHECK_THROWS_AS((void)read_trajectory_csv(bad_header), std::runtime_error);
    std::istringstream bad_cell("t,x,u,w,k\n0,0,0,0,1\n0,abc,0,0,1\n");
    try {
        (void)read_trajectory_csv(bad_cell);
        FAIL("expected error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::istringstream short_row("t,x,u,w,k\n0,0,0\n");
    CHECK_THROWS_AS((void)read_trajectory_csv(short_row), std::runtime_error);
}
