// funnelsim/perturbation.hpp
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace funnelsim {

/// Bounded continuous perturbation p(t) entering the drift as f(p(t), x).
///
/// Families:
///   Constant(c)                        bound |c|
///   Sinusoid(A, omega, phase)          A sin(omega t + phase), bound |A|
///   NoiseSpline(seed, B, spacing)      seeded knot values in [-B, B] joined
///                                      by smoothstep segments (C^1), bound B
class PerturbationSignal {
public:
    enum class Kind { Constant, Sinusoid, NoiseSpline };

    /// Knots are generated on [0, kSplineHorizon]; the last knot value is held beyond.
    static constexpr double kSplineHorizon = 1.0e4;

    PerturbationSignal() = default;

    static PerturbationSignal constant(double c);
    static PerturbationSignal sinusoid(double amplitude, double omega, double phase = 0.0);
    /// Throws std::invalid_argument unless bound >= 0 and spacing > 0.
    static PerturbationSignal noise_spline(std::uint64_t seed, double bound, double knot_spacing = 1.0);

    Kind kind() const noexcept { return kind_; }
    /// sup_t |p(t)|; P = [-bound, bound] contains the range.
    double bound() const noexcept { return bound_; }

    double constant_value() const noexcept { return c_; }
    double amplitude() const noexcept { return c_; }
    double omega() const noexcept { return omega_; }
    double phase() const noexcept { return phase_; }
    std::uint64_t seed() const noexcept { return seed_; }
    double knot_spacing() const noexcept { return spacing_; }

    [[nodiscard]] double operator()(double t) const noexcept;

    std::string describe() const;

    bool operator==(const PerturbationSignal& other) const;

private:
    Kind kind_ = Kind::Constant;
    double c_ = 0.0;
    double omega_ = 0.0;
    double phase_ = 0.0;
    double bound_ = 0.0;
    std::uint64_t seed_ = 0;
    double spacing_ = 1.0;
    std::shared_ptr<const std::vector<double>> knots_;
};

}  // namespace funnelsim
