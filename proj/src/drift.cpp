#include "funnelsim/drift.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace funnelsim {

namespace {

bool strictly_increasing(const std::vector<double>& axis) {
    if (axis.size() < 2) return false;
    for (std::size_t i = 0; i < axis.size(); ++i) {
        if (!std::isfinite(axis[i])) return false;
        if (i > 0 && !(axis[i] > axis[i - 1])) return false;
    }
    return true;
}

// Cell index i with axis[i] <= x <= axis[i+1] and the local coordinate in
// [0, 1]; clamped to the end cells outside the grid.
struct Locate {
    std::size_t cell;
    double frac;
    bool inside;
};

Locate locate(const std::vector<double>& axis, double x) {
    const std::size_t n = axis.size();
    if (x <= axis.front()) return {0, 0.0, false};
    if (x >= axis.back()) return {n - 2, 1.0, false};
    auto it = std::upper_bound(axis.begin(), axis.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - axis.begin()) - 1;
    return {i, (x - axis[i]) / (axis[i + 1] - axis[i]), true};
}

}  // namespace

DriftFunction DriftFunction::affine(double a, double b) {
    DriftFunction f;
    f.kind_ = Kind::Affine;
    f.a_ = a;
    f.b_ = b;
    return f;
}

DriftFunction DriftFunction::quadratic(double a) {
    DriftFunction f;
    f.kind_ = Kind::Quadratic;
    f.a_ = a;
    return f;
}

DriftFunction DriftFunction::table(DriftTable table) {
    if (!strictly_increasing(table.rho) || !strictly_increasing(table.xi)) {
        throw std::invalid_argument("drift table axes must be finite, strictly increasing, size >= 2");
    }
    if (table.values.size() != table.rho.size() * table.xi.size()) {
        throw std::invalid_argument("drift table needs rho.size() * xi.size() values");
    }
    for (double v : table.values) {
        if (!std::isfinite(v)) throw std::invalid_argument("drift table values must be finite");
    }
    DriftFunction f;
    f.kind_ = Kind::Table;
    f.table_ = std::make_shared<const DriftTable>(std::move(table));
    return f;
}

const DriftTable& DriftFunction::tabulated() const {
    if (!table_) throw std::logic_error("drift is not tabulated");
    return *table_;
}

double DriftFunction::operator()(double rho, double xi) const noexcept {
    switch (kind_) {
        case Kind::Zero:
            return 0.0;
        case Kind::Affine:
            return a_ * rho + b_ * xi;
        case Kind::Quadratic:
            return rho + a_ * xi * xi;
        case Kind::Table: {
            const auto& t = *table_;
            const auto r = locate(t.rho, rho);
            const auto c = locate(t.xi, xi);
            const std::size_t m = t.xi.size();
            const double f00 = t.values[r.cell * m + c.cell];
            const double f01 = t.values[r.cell * m + c.cell + 1];
            const double f10 = t.values[(r.cell + 1) * m + c.cell];
            const double f11 = t.values[(r.cell + 1) * m + c.cell + 1];
            const double lo = f00 + c.frac * (f01 - f00);
            const double hi = f10 + c.frac * (f11 - f10);
            return lo + r.frac * (hi - lo);
        }
    }
    return 0.0;
}

double DriftFunction::d_xi(double rho, double xi) const noexcept {
    switch (kind_) {
        case Kind::Zero:
            return 0.0;
        case Kind::Affine:
            return b_;
        case Kind::Quadratic:
            return 2.0 * a_ * xi;
        case Kind::Table: {
            const auto& t = *table_;
            const auto c = locate(t.xi, xi);
            if (!c.inside) return 0.0;
            const auto r = locate(t.rho, rho);
            const std::size_t m = t.xi.size();
            const double width = t.xi[c.cell + 1] - t.xi[c.cell];
            const double lo = (t.values[r.cell * m + c.cell + 1] - t.values[r.cell * m + c.cell]) / width;
            const double hi =
                (t.values[(r.cell + 1) * m + c.cell + 1] - t.values[(r.cell + 1) * m + c.cell]) / width;
            return lo + r.frac * (hi - lo);
        }
    }
    return 0.0;
}

DriftFunction DriftFunction::mirrored() const {
    switch (kind_) {
        case Kind::Zero:
            return zero();
        case Kind::Affine:
            return affine(-a_, b_);
        case Kind::Quadratic:
            throw std::invalid_argument("mirrored quadratic drift -rho - a xi^2 is not in the family");
        case Kind::Table: {
            DriftTable m;
            m.rho = table_->rho;
            const std::size_t nx = table_->xi.size();
            m.xi.resize(nx);
            for (std::size_t j = 0; j < nx; ++j) m.xi[j] = -table_->xi[nx - 1 - j];
            m.values.resize(table_->values.size());
            for (std::size_t i = 0; i < m.rho.size(); ++i) {
                for (std::size_t j = 0; j < nx; ++j) {
                    m.values[i * nx + j] = -table_->values[i * nx + (nx - 1 - j)];
                }
            }
            return table(std::move(m));
        }
    }
    return zero();
}

std::string DriftFunction::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::Zero:
            os << "zero";
            break;
        case Kind::Affine:
            os << "affine(" << a_ << "," << b_ << ")";
            break;
        case Kind::Quadratic:
            os << "quadratic(" << a_ << ")";
            break;
        case Kind::Table:
            os << "table(" << table_->rho.size() << "x" << table_->xi.size() << ")";
            break;
    }
    return os.str();
}

bool DriftFunction::operator==(const DriftFunction& other) const {
    if (kind_ != other.kind_ || a_ != other.a_ || b_ != other.b_) return false;
    if (kind_ != Kind::Table) return true;
    return *table_ == *other.table_;
}

}  // namespace funnelsim
