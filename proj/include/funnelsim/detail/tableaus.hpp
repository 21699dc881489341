// funnelsim/detail/tableaus.hpp
#pragma once

#include <array>

namespace funnelsim::detail {

/// L-stable, stiffly accurate SDIRK of order 4 with an embedded order-3
/// solution (Hairer & Wanner, Solving ODEs II, Table IV.6.5).
struct Sdirk4 {
    static constexpr int kStages = 5;
    static constexpr double gamma = 0.25;
    static constexpr std::array<double, kStages> c{0.25, 0.75, 11.0 / 20.0, 0.5, 1.0};
    static constexpr std::array<std::array<double, kStages>, kStages> a{{
        {0.25, 0.0, 0.0, 0.0, 0.0},
        {0.5, 0.25, 0.0, 0.0, 0.0},
        {17.0 / 50.0, -1.0 / 25.0, 0.25, 0.0, 0.0},
        {371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0, 0.25, 0.0},
        {25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25},
    }};
    static constexpr std::array<double, kStages> b{25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25};
    static constexpr std::array<double, kStages> b_hat{59.0 / 48.0, -17.0 / 96.0, 225.0 / 32.0, -85.0 / 12.0, 0.0};
    static constexpr int kOrder = 4;
    static constexpr int kEmbeddedOrder = 3;
};

/// Dormand-Prince 5(4), first-same-as-last.
struct DormandPrince5 {
    static constexpr int kStages = 7;
    static constexpr std::array<double, kStages> c{0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0};
    static constexpr std::array<std::array<double, kStages>, kStages> a{{
        {0, 0, 0, 0, 0, 0, 0},
        {1.0 / 5.0, 0, 0, 0, 0, 0, 0},
        {3.0 / 40.0, 9.0 / 40.0, 0, 0, 0, 0, 0},
        {44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0, 0, 0, 0},
        {19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0, 0, 0},
        {9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0, 0},
        {35.0 / 384.0, 0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0},
    }};
    static constexpr std::array<double, kStages> b{35.0 / 384.0, 0, 500.0 / 1113.0, 125.0 / 192.0,
                                                   -2187.0 / 6784.0, 11.0 / 84.0, 0};
    static constexpr std::array<double, kStages> b_hat{5179.0 / 57600.0, 0, 7571.0 / 16695.0, 393.0 / 640.0,
                                                       -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0};
    static constexpr int kOrder = 5;
    static constexpr int kEmbeddedOrder = 4;
};

}  // namespace funnelsim::detail
