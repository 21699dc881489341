#include "funnelsim/funnel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace funnelsim {

namespace {

std::string boundary_message(double t, double xi, double w) {
    std::ostringstream os;
    os.precision(17);
    os << "point (t=" << t << ", xi=" << xi << ") outside funnel: phi(t)|xi| = " << w;
    return os.str();
}

}  // namespace

FunnelBoundaryError::FunnelBoundaryError(double t, double xi, double w)
    : DomainError(boundary_message(t, xi, w)), t_(t), xi_(xi), w_(w) {}

FeedbackSign feedback_sign_from_int(int eta) {
    if (eta == 1) return FeedbackSign::Negative;
    if (eta == -1) return FeedbackSign::Positive;
    throw std::invalid_argument("eta must be +1 or -1, got " + std::to_string(eta));
}

FunnelFunction FunnelFunction::exp_minus_one(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw std::invalid_argument("ExpMinusOne funnel needs a finite rate > 0");
    }
    return FunnelFunction(Kind::ExpMinusOne, rate);
}

double FunnelFunction::value(double t) const noexcept {
    switch (kind_) {
        case Kind::Identity:
            return t;
        case Kind::ExpMinusOne:
            return std::expm1(rate_ * t);
    }
    return t;
}

double FunnelFunction::derivative(double t) const noexcept {
    switch (kind_) {
        case Kind::Identity:
            return 1.0;
        case Kind::ExpMinusOne:
            return rate_ * std::exp(rate_ * t);
    }
    return 1.0;
}

std::string FunnelFunction::describe() const {
    if (kind_ == Kind::Identity) return "identity";
    std::ostringstream os;
    os << "expm1(" << rate_ << ")";
    return os.str();
}

double growth_violation(const FunnelFunction& phi, double t_end, int samples, double delta) {
    if (samples < 1 || !(t_end >= 0.0) || !(delta > 0.0)) {
        throw std::invalid_argument("growth_violation: need samples >= 1, t_end >= 0, delta > 0");
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        const double t = samples == 1 ? 0.0 : t_end * i / (samples - 1);
        // Central difference; one-sided at the left end of the domain.
        const double lo = std::max(0.0, t - delta);
        const double fd = (phi.value(t + delta) - phi.value(lo)) / (t + delta - lo);
        const double bound = phi.c_phi() * (1.0 + phi.value(t));
        // Relative once phi is large: the difference quotient of exp(25) ~ 1e10
        // carries absolute rounding error far above any fixed tolerance.
        worst = std::max(worst, (fd - bound) / std::max(1.0, bound));
    }
    return worst;
}

double alpha(double s) {
    if (!(s >= 0.0) || !(s < 1.0)) {
        std::ostringstream os;
        os.precision(17);
        os << "alpha: argument " << s << " outside [0, 1)";
        throw DomainError(os.str());
    }
    return 1.0 / (1.0 - s);
}

double g(double v) noexcept {
    return v * std::sin(std::log1p(std::fabs(v)));
}

double g_derivative(double v) noexcept {
    const double a = std::fabs(v);
    const double l = std::log1p(a);
    return std::sin(l) + a * std::cos(l) / (1.0 + a);
}

double h(const FunnelFunction& phi, double t, double xi) {
    const double p = phi.value(t);
    const double w = p * std::fabs(xi);
    if (!(w < 1.0)) throw FunnelBoundaryError(t, xi, w);
    return alpha(w) * p * xi;
}

double h_derivative(const FunnelFunction& phi, double t, double xi) {
    const double p = phi.value(t);
    const double w = p * std::fabs(xi);
    if (!(w < 1.0)) throw FunnelBoundaryError(t, xi, w);
    const double d = 1.0 - w;
    return p / (d * d);
}

}  // namespace funnelsim
