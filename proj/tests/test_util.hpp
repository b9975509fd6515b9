// Shared helpers for the unit suites: seeded random states and regions, a few
// dense matrices, and the two-box fixture several suites exercise.

#pragma once

#include "qcp/hilbert.hpp"
#include "qcp/rng.hpp"
#include "qcp/spaces.hpp"
#include "qcp/squant.hpp"

#include <cmath>

namespace qcp::testutil {

inline WaveFunction random_state(const SpacePtr& space, Rng& rng) {
    CVector amps(static_cast<Eigen::Index>(space->size()));
    for (Eigen::Index i = 0; i < amps.size(); ++i)
        amps[i] = Complex(2.0 * rng.next_unit() - 1.0, 2.0 * rng.next_unit() - 1.0);
    WaveFunction psi{space, std::move(amps), 0.0};
    return psi.normalized();
}

// Random nonempty proper-subset mask.
inline Region random_region(const SpacePtr& space, Rng& rng) {
    std::vector<std::uint8_t> mask(space->size());
    while (true) {
        std::size_t count = 0;
        for (auto& b : mask) {
            b = rng.next_bernoulli(0.5) ? 1 : 0;
            count += b;
        }
        if (count > 0 && count < mask.size()) break;
    }
    return Region(space, std::move(mask));
}

// 50/50 beam splitter convention used throughout the scenarios.
inline CMatrix beam_splitter_2x2() {
    CMatrix u(2, 2);
    double s = 1.0 / std::sqrt(2.0);
    u << Complex(s, 0), Complex(0, s), Complex(0, s), Complex(s, 0);
    return u;
}

// Two-box grid process: symmetric split packet with a static wall. Each
// packet is truncated to its own box at preparation time (the analytic
// Gaussian tail would otherwise seed ~1e-11 of cross-box mass), and the wall
// height exceeds the grid kinetic cutoff (k_max^2/2 = 315), so every
// representable mode tunnels rather than flying over.
inline QuantumProcess two_box_process() {
    auto grid = GridSpace::make_1d(64.0, 512);
    RVector pot = sample_potential(*grid, [](double x, double) {
        return std::abs(x) < 1.0 ? 400.0 : 0.0;
    });
    Propagator prop = Propagator::potential_schedule(grid, 1.0, {{0.0, pot}}, 1.0 / 1024);
    RVector center(1), zero(1);
    zero[0] = 0.0;
    center[0] = -8.0;
    WaveFunction left = project(gaussian_packet(grid, center, 1.2, zero),
                                Region::axis_interval(grid, 0, -32.0, -1.0));
    center[0] = 8.0;
    WaveFunction right = project(gaussian_packet(grid, center, 1.2, zero),
                                 Region::axis_interval(grid, 0, 1.0, 32.0));
    WaveFunction both{grid, left.amplitudes + right.amplitudes, 0.0};
    return QuantumProcess(std::move(prop), both.normalized(), 0.0, 3.0);
}

// The 13-point snapshot grid the two-box suites share.
inline std::vector<double> two_box_grid() {
    std::vector<double> grid;
    for (int k = 0; k <= 12; ++k) grid.push_back(0.25 * k);
    return grid;
}

} // namespace qcp::testutil
