#include "funnelsim/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace funnelsim {

PerturbationSignal PerturbationSignal::constant(double c) {
    PerturbationSignal p;
    p.kind_ = Kind::Constant;
    p.c_ = c;
    p.bound_ = std::fabs(c);
    return p;
}

PerturbationSignal PerturbationSignal::sinusoid(double amplitude, double omega, double phase) {
    PerturbationSignal p;
    p.kind_ = Kind::Sinusoid;
    p.c_ = amplitude;
    p.omega_ = omega;
    p.phase_ = phase;
    p.bound_ = std::fabs(amplitude);
    return p;
}

PerturbationSignal PerturbationSignal::noise_spline(std::uint64_t seed, double bound, double knot_spacing) {
    if (!(bound >= 0.0) || !std::isfinite(bound)) {
        throw std::invalid_argument("noise spline bound must be finite and >= 0");
    }
    if (!(knot_spacing > 0.0) || !std::isfinite(knot_spacing)) {
        throw std::invalid_argument("noise spline knot spacing must be finite and > 0");
    }
    PerturbationSignal p;
    p.kind_ = Kind::NoiseSpline;
    p.seed_ = seed;
    p.bound_ = bound;
    p.spacing_ = knot_spacing;

    const auto count = static_cast<std::size_t>(
        std::min(std::ceil(kSplineHorizon / knot_spacing) + 2.0, double(1u << 22)));
    std::vector<double> knots(count);
    // mt19937_64 output is fully specified; uniform_real_distribution is not,
    // so map the raw 53 high bits ourselves for cross-platform reproducibility.
    std::mt19937_64 engine(seed);
    for (auto& k : knots) {
        const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
        k = bound * (2.0 * u - 1.0);
    }
    p.knots_ = std::make_shared<const std::vector<double>>(std::move(knots));
    return p;
}

double PerturbationSignal::operator()(double t) const noexcept {
    switch (kind_) {
        case Kind::Constant:
            return c_;
        case Kind::Sinusoid:
            return c_ * std::sin(omega_ * t + phase_);
        case Kind::NoiseSpline: {
            const auto& k = *knots_;
            const double pos = std::max(0.0, t) / spacing_;
            const double cell = std::floor(pos);
            if (cell >= double(k.size() - 1)) return k.back();
            const auto i = static_cast<std::size_t>(cell);
            const double s = pos - cell;
            // Smoothstep keeps each segment between its two knot values.
            const double blend = s * s * (3.0 - 2.0 * s);
            return k[i] + blend * (k[i + 1] - k[i]);
        }
    }
    return 0.0;
}

std::string PerturbationSignal::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::Constant:
            os << "const(" << c_ << ")";
            break;
        case Kind::Sinusoid:
            os << "sin(" << c_ << "," << omega_ << "," << phase_ << ")";
            break;
        case Kind::NoiseSpline:
            os << "spline(" << seed_ << "," << bound_ << "," << spacing_ << ")";
            break;
    }
    return os.str();
}

bool PerturbationSignal::operator==(const PerturbationSignal& other) const {
    return kind_ == other.kind_ && c_ == other.c_ && omega_ == other.omega_ && phase_ == other.phase_ &&
           bound_ == other.bound_ && seed_ == other.seed_ && spacing_ == other.spacing_;
}

}  // namespace funnelsim
