#include "funnelsim/chi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

namespace funnelsim {

namespace {

std::vector<double> axis_points(const Interval& iv, int n) {
    if (iv.degenerate()) return {iv.lo};
    std::vector<double> pts(static_cast<std::size_t>(n));
    const double w = iv.width();
    // (w * i) / (n - 1) is bit-identical at shared nodes of nested grids.
    for (int i = 0; i < n; ++i) pts[i] = iv.lo + (w * i) / (n - 1);
    pts.back() = iv.hi;
    return pts;
}

double spacing(const Interval& iv, int n) {
    return iv.degenerate() ? 0.0 : iv.width() / (n - 1);
}

void check_grid(const ChiGrid& grid) {
    if (grid.p_points < 3 || grid.k_points < 3 || grid.v_points_per_half < 3) {
        throw std::invalid_argument("chi grid needs at least 3 points per axis");
    }
    if (grid.refinement_depth < 0) throw std::invalid_argument("chi refinement depth must be >= 0");
}

// Minimises drift_weight * v f(rho, xi) + vg[k] over the grid, then refines.
// `objective` must agree with the gridded sum at grid nodes.
template <class Objective>
ChiEvaluation minimise(const CompactBox& box, const DriftFunction& drift, const ChiGrid& grid,
                       const std::vector<double>& v_pts, const std::vector<double>& v_term,
                       Objective&& objective) {
    box.validate();
    const auto rho_pts = axis_points(box.P, grid.p_points);
    const auto xi_pts = axis_points(box.K, grid.k_points);

    std::vector<double> f_grid(rho_pts.size() * xi_pts.size());
    for (std::size_t i = 0; i < rho_pts.size(); ++i) {
        for (std::size_t j = 0; j < xi_pts.size(); ++j) f_grid[i * xi_pts.size() + j] = drift(rho_pts[i], xi_pts[j]);
    }

    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0, bk = 0;
    for (std::size_t i = 0; i < rho_pts.size(); ++i) {
        for (std::size_t j = 0; j < xi_pts.size(); ++j) {
            const double f = f_grid[i * xi_pts.size() + j];
            for (std::size_t k = 0; k < v_pts.size(); ++k) {
                const double val = v_pts[k] * f + v_term[k];
                if (val < best) {
                    best = val;
                    bi = i;
                    bj = j;
                    bk = k;
                }
            }
        }
    }

    ChiEvaluation out;
    out.grid = grid;
    out.coarse_value = best;
    ChiPoint z{rho_pts[bi], xi_pts[bj], v_pts[bk]};
    const Interval v_half = z.v < 0 ? kVNegative : kVPositive;
    const Interval bounds[3] = {box.P, box.K, v_half};
    double step[3] = {spacing(box.P, grid.p_points), spacing(box.K, grid.k_points),
                      spacing(v_half, grid.v_points_per_half)};

    // Pattern search: halve the cell width `refinement_depth` times, sweeping
    // coordinate moves at each level while they improve.
    for (int level = 0; level < grid.refinement_depth; ++level) {
        for (double& d : step) d *= 0.5;
        for (int sweep = 0; sweep < 8; ++sweep) {
            bool improved = false;
            for (int axis = 0; axis < 3; ++axis) {
                if (step[axis] == 0.0) continue;
                for (double dir : {-1.0, 1.0}) {
                    ChiPoint c = z;
                    double* coord = axis == 0 ? &c.rho : axis == 1 ? &c.xi : &c.v;
                    *coord = std::clamp(*coord + dir * step[axis], bounds[axis].lo, bounds[axis].hi);
                    const double val = objective(c);
                    if (val < best) {
                        best = val;
                        z = c;
                        improved = true;
                        break;
                    }
                }
            }
            if (!improved) break;
        }
    }
    out.value = best;
    out.argmin = z;
    return out;
}

std::vector<double> v_grid(int per_half) {
    auto neg = axis_points(kVNegative, per_half);
    const auto pos = axis_points(kVPositive, per_half);
    neg.insert(neg.end(), pos.begin(), pos.end());
    return neg;
}

std::string fmt17(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

}  // namespace

void CompactBox::validate() const {
    for (const auto* iv : {&P, &K}) {
        if (!std::isfinite(iv->lo) || !std::isfinite(iv->hi)) throw InvalidBoxError("box interval is not finite");
        if (iv->lo > iv->hi) {
            throw InvalidBoxError("box interval [" + fmt17(iv->lo) + ", " + fmt17(iv->hi) + "] is inverted");
        }
    }
}

double chi_objective(const DriftFunction& drift, double s, const ChiPoint& z) noexcept {
    return z.v * drift(z.rho, z.xi) + z.v * g(s * z.v);
}

ChiEvaluation chi_eval(const CompactBox& box, const DriftFunction& drift, double s, const ChiGrid& grid) {
    check_grid(grid);
    if (!std::isfinite(s)) throw std::invalid_argument("chi_eval: s must be finite");
    const auto v_pts = v_grid(grid.v_points_per_half);
    std::vector<double> v_term(v_pts.size());
    for (std::size_t k = 0; k < v_pts.size(); ++k) v_term[k] = v_pts[k] * g(s * v_pts[k]);
    auto out = minimise(box, drift, grid, v_pts, v_term,
                        [&](const ChiPoint& z) { return chi_objective(drift, s, z); });
    out.s = s;
    return out;
}

ChiEvaluation drift_floor_eval(const CompactBox& box, const DriftFunction& drift, const ChiGrid& grid) {
    check_grid(grid);
    const auto v_pts = v_grid(grid.v_points_per_half);
    const std::vector<double> v_term(v_pts.size(), 0.0);
    return minimise(box, drift, grid, v_pts, v_term,
                    [&](const ChiPoint& z) { return z.v * drift(z.rho, z.xi) + 0.0; });
}

double nu_eval(const CompactBox& box, const DriftFunction& drift, FeedbackSign eta, double s,
               const ChiGrid& grid) {
    if (!(s >= 0.0)) throw std::invalid_argument("nu_eval: s must be >= 0");
    return std::max(chi_eval(box, drift, eta_value(eta) * s, grid).value, 0.0);
}

double s_sequence(int n) {
    if (n < 0) throw std::invalid_argument("s_sequence: n must be >= 0");
    const double s = 0.5 * std::exp((n + 1) * std::numbers::pi) - 1.0;
    if (!std::isfinite(s)) throw std::overflow_error("s_sequence: s_" + std::to_string(n) + " overflows double");
    return s;
}

double sine_branch_extreme(int n, int points) {
    if (points < 4) throw std::invalid_argument("sine_branch_extreme: need at least 4 points");
    const double s = s_sequence(n);
    const auto v = v_grid(points / 2);
    const bool even = n % 2 == 0;
    double extreme = even ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    for (double vi : v) {
        const double val = std::sin(std::log1p(s * std::fabs(vi)));
        extreme = even ? std::min(extreme, val) : std::max(extreme, val);
    }
    return extreme;
}

std::optional<int> UnboundednessCertificate::first_violation() const {
    for (const auto& e : entries) {
        if (e.margin < -tolerance) return e.n;
    }
    return std::nullopt;
}

double UnboundednessCertificate::min_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& e : entries) m = std::min(m, e.margin);
    return m;
}

CertificationFailure::CertificationFailure(int index, UnboundednessCertificate certificate)
    : std::runtime_error("chi lower bound violated at n = " + std::to_string(index)),
      index_(index),
      certificate_(std::move(certificate)) {}

UnboundednessCertificate build_certificate(const CompactBox& box, const DriftFunction& drift, FeedbackSign eta,
                                           int n_max, const ChiGrid& grid, double tolerance) {
    const int first = eta == FeedbackSign::Negative ? 0 : 1;
    if (n_max < first) {
        throw std::invalid_argument("certificate needs n_max >= " + std::to_string(first) + " for eta = " +
                                    std::to_string(eta_int(eta)));
    }
    UnboundednessCertificate cert;
    cert.eta = eta;
    cert.tolerance = tolerance;
    cert.sin_ln2 = std::sin(std::numbers::ln2);
    cert.c1 = drift_floor_eval(box, drift, grid).value;
    for (int n = first; n <= n_max; n += 2) {
        CertificateEntry e;
        e.n = n;
        e.s = s_sequence(n);
        e.argument = eta_value(eta) * e.s;
        const auto ev = chi_eval(box, drift, e.argument, grid);
        e.chi = ev.value;
        e.argmin = ev.argmin;
        e.bound = cert.c1 + 0.25 * e.s * cert.sin_ln2;
        e.margin = e.chi - e.bound;
        cert.entries.push_back(e);
    }
    return cert;
}

UnboundednessCertificate certify_unboundedness(const CompactBox& box, const DriftFunction& drift,
                                               FeedbackSign eta, int n_max, const ChiGrid& grid,
                                               double tolerance) {
    auto cert = build_certificate(box, drift, eta, n_max, grid, tolerance);
    if (auto bad = cert.first_violation()) throw CertificationFailure(*bad, std::move(cert));
    return cert;
}

void write_certificate(std::ostream& os, const UnboundednessCertificate& cert) {
    os << "# eta=" << (eta_int(cert.eta) > 0 ? "+1" : "-1") << '\n';
    os << "# c1=" << fmt17(cert.c1) << '\n';
    os << "# sin_ln2=" << fmt17(cert.sin_ln2) << '\n';
    os << "# tolerance=" << fmt17(cert.tolerance) << '\n';
    os << "n,s_n,chi,bound,margin\n";
    for (const auto& e : cert.entries) {
        os << e.n << ',' << fmt17(e.s) << ',' << fmt17(e.chi) << ',' << fmt17(e.bound) << ',' << fmt17(e.margin)
           << '\n';
    }
}

ContinuityProbe continuity_probe(const CompactBox& box, const DriftFunction& drift, double s_center,
                                 double radius, int samples, const ChiGrid& grid) {
    if (samples < 2) throw std::invalid_argument("continuity_probe: samples must be >= 2");
    if (!(radius > 0.0)) throw std::invalid_argument("continuity_probe: radius must be > 0");
    ContinuityProbe probe;
    for (int i = 0; i < samples; ++i) {
        const double s = s_center - radius + 2.0 * radius * i / (samples - 1);
        probe.s.push_back(s);
        probe.chi.push_back(chi_eval(box, drift, s, grid).value);
    }
    for (int i = 1; i < samples; ++i) {
        const double slope = std::fabs(probe.chi[i] - probe.chi[i - 1]) / (probe.s[i] - probe.s[i - 1]);
        probe.modulus = std::max(probe.modulus, slope);
    }
    return probe;
}

}  // namespace funnelsim
