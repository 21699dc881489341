// funnelsim/chi.hpp
//
// Brute-force evaluation of the worst-case dissipation rate
//
//     chi(s) = min { v f(rho, xi) + v g(s v) : rho in P, xi in K, v in V },
//     V = [-1, -1/2] u [1/2, 1],
//
// and numerical certificates of sup_{s >= 0} chi(eta s) = +inf along the gain
// sequence s_n = exp((n + 1) pi) / 2 - 1.
#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "funnelsim/drift.hpp"
#include "funnelsim/funnel.hpp"

namespace funnelsim {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const noexcept { return hi - lo; }
    bool degenerate() const noexcept { return hi == lo; }
    bool contains(double x) const noexcept { return lo <= x && x <= hi; }

    bool operator==(const Interval&) const = default;
};

/// The fixed scaled-state set V, stored as its two halves.
inline constexpr Interval kVNegative{-1.0, -0.5};
inline constexpr Interval kVPositive{0.5, 1.0};

[[nodiscard]] inline bool in_v(double v) noexcept {
    return kVNegative.contains(v) || kVPositive.contains(v);
}

/// Compacts P (perturbation range) and K (state range). A zero-width interval
/// stands for a single point.
struct CompactBox {
    Interval P{0.0, 0.0};
    Interval K{-1.0, 1.0};

    /// Throws InvalidBoxError on non-finite or inverted intervals.
    void validate() const;

    bool operator==(const CompactBox&) const = default;
};

class InvalidBoxError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Per-axis grid resolution and local refinement depth.
struct ChiGrid {
    int p_points = 64;
    int k_points = 64;
    int v_points_per_half = 32;
    int refinement_depth = 6;

    /// Nested refinement: every axis goes from n to 2n - 1 points, so the old
    /// grid is a subset of the new one.
    [[nodiscard]] ChiGrid doubled() const noexcept {
        return {2 * p_points - 1, 2 * k_points - 1, 2 * v_points_per_half - 1, refinement_depth};
    }

    bool operator==(const ChiGrid&) const = default;
};

struct ChiPoint {
    double rho = 0.0;
    double xi = 0.0;
    double v = 0.0;
};

struct ChiEvaluation {
    double s = 0.0;
    /// Objective at `argmin`; an upper bound on the true minimum.
    double value = 0.0;
    /// Grid minimum before local refinement (value <= coarse_value).
    double coarse_value = 0.0;
    ChiPoint argmin;
    ChiGrid grid;
};

/// v f(rho, xi) + v g(s v).
[[nodiscard]] double chi_objective(const DriftFunction& drift, double s, const ChiPoint& z) noexcept;

/// Grid minimum of the objective followed by pattern-search refinement around
/// the coarse argmin. Ties on the grid resolve to the lexicographically
/// smallest (rho, xi, v) index.
[[nodiscard]] ChiEvaluation chi_eval(const CompactBox& box, const DriftFunction& drift, double s,
                                     const ChiGrid& grid = {});

/// c1 = min { v f(rho, xi) } over the same compact, computed the same way.
/// The returned evaluation has s = 0 and excludes the g term.
[[nodiscard]] ChiEvaluation drift_floor_eval(const CompactBox& box, const DriftFunction& drift,
                                             const ChiGrid& grid = {});

/// max(chi(eta s), 0) for s >= 0.
[[nodiscard]] double nu_eval(const CompactBox& box, const DriftFunction& drift, FeedbackSign eta, double s,
                             const ChiGrid& grid = {});

/// s_n = exp((n + 1) pi) / 2 - 1. Throws std::overflow_error once the result is
/// no longer finite (n >= 225) and std::invalid_argument for n < 0.
[[nodiscard]] double s_sequence(int n);

/// Smallest (even n) or largest (odd n) value of sin(ln(1 + s_n |v|)) over a
/// uniform grid of `points` values spanning V (split evenly over both halves).
[[nodiscard]] double sine_branch_extreme(int n, int points);

struct CertificateEntry {
    int n = 0;
    double s = 0.0;
    /// Argument passed to chi: s for eta = +1, -s for eta = -1.
    double argument = 0.0;
    double chi = 0.0;
    double bound = 0.0;
    double margin = 0.0;
    ChiPoint argmin;
};

struct UnboundednessCertificate {
    FeedbackSign eta = FeedbackSign::Negative;
    double c1 = 0.0;
    double sin_ln2 = 0.0;
    double tolerance = 1e-6;
    std::vector<CertificateEntry> entries;

    /// Index n of the first entry with margin < -tolerance.
    [[nodiscard]] std::optional<int> first_violation() const;
    [[nodiscard]] bool satisfied() const { return !first_violation().has_value(); }
    [[nodiscard]] double min_margin() const;
};

class CertificationFailure : public std::runtime_error {
public:
    CertificationFailure(int index, UnboundednessCertificate certificate);

    int index() const noexcept { return index_; }
    const UnboundednessCertificate& certificate() const noexcept { return certificate_; }

private:
    int index_;
    UnboundednessCertificate certificate_;
};

/// Evaluates chi(s_n) for even n <= n_max (eta = +1) or chi(-s_n) for odd
/// n <= n_max (eta = -1) against the lower bound c1 + s_n sin(ln 2) / 4.
/// Violations are recorded, not thrown. Throws std::invalid_argument when the
/// relevant branch is empty.
[[nodiscard]] UnboundednessCertificate build_certificate(const CompactBox& box, const DriftFunction& drift,
                                                         FeedbackSign eta, int n_max, const ChiGrid& grid = {},
                                                         double tolerance = 1e-6);

/// As build_certificate, but throws CertificationFailure at the first violation.
UnboundednessCertificate certify_unboundedness(const CompactBox& box, const DriftFunction& drift,
                                               FeedbackSign eta, int n_max, const ChiGrid& grid = {},
                                               double tolerance = 1e-6);

/// Text form: '#'-prefixed metadata lines, then a `n,s_n,chi,bound,margin`
/// header and one row per entry, 17 significant digits.
void write_certificate(std::ostream& os, const UnboundednessCertificate& cert);

struct ContinuityProbe {
    std::vector<double> s;
    std::vector<double> chi;
    /// max |chi(s_i+1) - chi(s_i)| / (s_i+1 - s_i) over adjacent samples.
    double modulus = 0.0;
};

/// Samples chi on `samples` uniform points of [s_center - radius, s_center + radius].
[[nodiscard]] ContinuityProbe continuity_probe(const CompactBox& box, const DriftFunction& drift,
                                               double s_center, double radius, int samples,
                                               const ChiGrid& grid = {});

}  // namespace funnelsim
