// funnelsim/drift.hpp
#pragma once

#include <memory>
#include <string>
#include <vector>

namespace funnelsim {

/// Tabulated drift samples on a rectilinear (rho, xi) grid.
/// values[i * xi.size() + j] is f(rho[i], xi[j]).
struct DriftTable {
    std::vector<double> rho;
    std::vector<double> xi;
    std::vector<double> values;

    bool operator==(const DriftTable&) const = default;
};

/// Drift f(rho, xi) of the plant x' = f(p(t), x) + g(u).
///
/// Families: Zero, Affine(a, b) = a rho + b xi, Quadratic(a) = rho + a xi^2,
/// and Table (bilinear interpolation, constant extension outside the grid).
class DriftFunction {
public:
    enum class Kind { Zero, Affine, Quadratic, Table };

    DriftFunction() = default;

    static DriftFunction zero() { return {}; }
    static DriftFunction affine(double a, double b);
    static DriftFunction quadratic(double a);
    /// Throws std::invalid_argument unless both axes are strictly increasing with
    /// at least two nodes and values has rho.size() * xi.size() finite entries.
    static DriftFunction table(DriftTable table);

    Kind kind() const noexcept { return kind_; }
    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    /// Only meaningful for Kind::Table.
    const DriftTable& tabulated() const;

    [[nodiscard]] double operator()(double rho, double xi) const noexcept;
    /// Partial derivative with respect to xi (one-sided inside table cells).
    [[nodiscard]] double d_xi(double rho, double xi) const noexcept;

    /// The mirrored drift (rho, xi) -> -f(rho, -xi).
    [[nodiscard]] DriftFunction mirrored() const;

    std::string describe() const;

    bool operator==(const DriftFunction& other) const;

private:
    Kind kind_ = Kind::Zero;
    double a_ = 0.0;
    double b_ = 0.0;
    std::shared_ptr<const DriftTable> table_;
};

}  // namespace funnelsim
