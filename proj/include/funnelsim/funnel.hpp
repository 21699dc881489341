// funnelsim/funnel.hpp
//
// Scalar function layer of the funnel feedback loop: the funnel shape phi,
// the singular gain alpha, the input nonlinearity g and the feedback law h.
#pragma once

#include <stdexcept>
#include <string>

namespace funnelsim {

/// Raised when a function is evaluated outside its domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when (t, xi) lies on or beyond the funnel boundary phi(t)|xi| >= 1.
class FunnelBoundaryError : public DomainError {
public:
    FunnelBoundaryError(double t, double xi, double w);

    double t() const noexcept { return t_; }
    double xi() const noexcept { return xi_; }
    /// phi(t)|xi| at the offending point.
    double w() const noexcept { return w_; }

private:
    double t_;
    double xi_;
    double w_;
};

/// Sign parameter eta of the feedback u = -eta h(t, x).
/// eta = +1 is negative feedback, eta = -1 positive feedback.
enum class FeedbackSign : int { Negative = +1, Positive = -1 };

[[nodiscard]] constexpr double eta_value(FeedbackSign s) noexcept {
    return s == FeedbackSign::Negative ? 1.0 : -1.0;
}

/// Parses +1/-1. Any other integer raises std::invalid_argument.
[[nodiscard]] FeedbackSign feedback_sign_from_int(int eta);

[[nodiscard]] constexpr int eta_int(FeedbackSign s) noexcept {
    return s == FeedbackSign::Negative ? 1 : -1;
}

/// Funnel shape phi with its growth constant c_phi.
///
/// Both shipped families are C^1 bijections of [0, inf) with phi(0) = 0 and
/// satisfy phi'(t) <= c_phi (1 + phi(t)):
///   Identity        phi(t) = t,                c_phi = 1
///   ExpMinusOne(l)  phi(t) = exp(l t) - 1,     c_phi = l   (equality holds)
class FunnelFunction {
public:
    enum class Kind { Identity, ExpMinusOne };

    static FunnelFunction identity() { return FunnelFunction(Kind::Identity, 1.0); }
    /// Throws std::invalid_argument unless rate > 0 and finite.
    static FunnelFunction exp_minus_one(double rate);

    Kind kind() const noexcept { return kind_; }
    /// lambda for ExpMinusOne, 1 for Identity.
    double rate() const noexcept { return rate_; }
    double c_phi() const noexcept { return rate_; }

    [[nodiscard]] double value(double t) const noexcept;
    [[nodiscard]] double derivative(double t) const noexcept;

    /// Short descriptor, e.g. "identity" or "expm1(0.5)".
    std::string describe() const;

    bool operator==(const FunnelFunction&) const = default;

private:
    FunnelFunction(Kind k, double rate) : kind_(k), rate_(rate) {}

    Kind kind_;
    double rate_;
};

/// Largest value of (phi(t+delta) - phi(t))/delta - c_phi (1 + phi(t)) over
/// `samples` uniformly spaced t in [0, t_end]. Non-positive (up to rounding)
/// for every admissible funnel.
[[nodiscard]] double growth_violation(const FunnelFunction& phi, double t_end, int samples,
                                      double delta = 1e-7);

/// alpha(s) = 1 / (1 - s) on [0, 1). Throws DomainError outside.
[[nodiscard]] double alpha(double s);

/// g(v) = v sin(ln(1 + |v|)). Odd, |g(v)| <= |v|.
[[nodiscard]] double g(double v) noexcept;

/// g'(v) = sin(L) + |v| cos(L) / (1 + |v|), L = ln(1 + |v|).
[[nodiscard]] double g_derivative(double v) noexcept;

/// phi(t)|xi|, the normalised distance from the funnel centre line.
[[nodiscard]] inline double funnel_ratio(const FunnelFunction& phi, double t, double xi) noexcept {
    return phi.value(t) * (xi < 0 ? -xi : xi);
}

/// Membership in F = {(t, xi) : phi(t)|xi| < 1}.
[[nodiscard]] inline bool in_funnel(const FunnelFunction& phi, double t, double xi) noexcept {
    return funnel_ratio(phi, t, xi) < 1.0;
}

/// h(t, xi) = alpha(phi(t)|xi|) phi(t) xi. Throws FunnelBoundaryError off F.
[[nodiscard]] double h(const FunnelFunction& phi, double t, double xi);

/// dh/dxi = phi(t) / (1 - phi(t)|xi|)^2 on F.
[[nodiscard]] double h_derivative(const FunnelFunction& phi, double t, double xi);

}  // namespace funnelsim
