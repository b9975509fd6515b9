#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qcp/hilbert.hpp"
#include "qcp/rng.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace qcp;
using qcp::testutil::beam_splitter_2x2;
using qcp::testutil::random_region;
using qcp::testutil::random_state;

namespace {

RVector scalar(double x) {
    RVector v(1);
    v[0] = x;
    return v;
}

} // namespace

TEST_CASE("grid space invariants") {
    auto grid = GridSpace::make_1d(40.0, 512);
    CHECK(grid->size() == 512);
    CHECK(grid->spacing(0) == doctest::Approx(40.0 / 512).epsilon(1e-15));
    CHECK(grid->coordinate(0, 0) == doctest::Approx(-20.0));
    CHECK_THROWS(GridSpace::make_1d(40.0, 100));  // not a power of two
    CHECK_THROWS(GridSpace::make_1d(40.0, 4));    // too few points
    CHECK_THROWS(GridSpace::make_1d(-1.0, 64));
}

TEST_CASE("mode space labels") {
    auto modes = ModeSpace::make({"a", "b", "c"});
    CHECK(modes->index_of("b") == 1);
    CHECK_THROWS(modes->index_of("z"));
    CHECK_THROWS(ModeSpace::make({"a", "a"}));
    CHECK_THROWS(ModeSpace::make({"only"}));
}

TEST_CASE("region algebra is exact") {
    auto grid = GridSpace::make_1d(16.0, 64);
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Region r = random_region(grid, rng);
        Region s = random_region(grid, rng);
        CHECK(r.complement().complement().same_as(r));
        CHECK(r.intersect(r.complement()).is_empty());
        CHECK(r.unite(r.complement()).same_as(Region::full(grid)));
        // Projector identity E(A)E(B) = E(A cap B) holds exactly on masks.
        Region both = r.intersect(s);
        WaveFunction psi = random_state(grid, rng);
        WaveFunction projected_twice = project(project(psi, r), s);
        WaveFunction projected_once = project(psi, both);
        CHECK((projected_twice.amplitudes - projected_once.amplitudes).norm() == 0.0);
    }
}

TEST_CASE("gaussian packet moments") {
    auto grid = GridSpace::make_1d(40.0, 512);

    SUBCASE("symmetric packet at rest") {
        WaveFunction psi = gaussian_packet(grid, scalar(0.0), 1.0, scalar(0.0));
        CHECK(std::abs(psi.norm2() - 1.0) < 1e-12);
        CHECK(std::abs(position_mean(psi)[0]) < 1e-8);
        CHECK(std::abs(momentum_mean(psi)[0]) < 1e-8);
    }

    SUBCASE("moved packet with momentum, moments by direct quadrature") {
        WaveFunction psi = gaussian_packet(grid, scalar(-5.0), 1.0, scalar(2.0));
        // Oracle: direct quadrature on the produced amplitudes.
        double q = 0.0;
        for (int i = 0; i < 512; ++i)
            q += grid->coordinate(0, i) * std::norm(psi.amplitudes[i]);
        CHECK(std::abs(q - (-5.0)) < 1e-6);
        CHECK(std::abs(position_mean(psi)[0] - q) < 1e-12);
        CHECK(std::abs(momentum_mean(psi)[0] - 2.0) < 1e-6);
    }

    SUBCASE("precondition violations") {
        CHECK_THROWS_WITH_AS(gaussian_packet(grid, scalar(0.0), 0.01, scalar(0.0)),
                             doctest::Contains("packet-too-narrow"), std::invalid_argument);
        CHECK_THROWS_WITH_AS(gaussian_packet(grid, scalar(19.5), 1.0, scalar(0.0)),
                             doctest::Contains("packet-clipped"), std::invalid_argument);
    }
}

TEST_CASE("free evolution moves the packet ballistically") {
    auto grid = GridSpace::make_1d(64.0, 512);
    Propagator prop = Propagator::split_operator(
        grid, 1.0, RVector::Zero(static_cast<Eigen::Index>(grid->size())), 1.0 / 1024);
    WaveFunction psi = gaussian_packet(grid, scalar(-10.0), 1.5, scalar(2.0));

    SUBCASE("duration zero is the identity") {
        WaveFunction same = evolve(psi, prop, 0.0);
        CHECK((same.amplitudes - psi.amplitudes).norm() == 0.0);
        CHECK(same.time == psi.time);
    }

    SUBCASE("analytic drift: <Q> moves by p t / m") {
        WaveFunction moved = evolve(psi, prop, 3.0);
        CHECK(moved.time == doctest::Approx(3.0));
        CHECK(std::abs(position_mean(moved)[0] - (-10.0 + 2.0 * 3.0)) < 1e-6);
        CHECK(std::abs(momentum_mean(moved)[0] - 2.0) < 1e-8);
        CHECK(std::abs(moved.norm2() - 1.0) < 1e-10);
    }

    SUBCASE("non-commensurate duration is rejected") {
        CHECK_THROWS_WITH_AS(evolve(psi, prop, 0.4 / 1024), doctest::Contains("non-commensurate"),
                             std::invalid_argument);
    }
}

TEST_CASE("dense 2-mode beam splitter") {
    auto modes = ModeSpace::make({"r", "t"});
    Propagator prop = Propagator::mode_unitary(modes, 1.0, beam_splitter_2x2());
    CVector in(2);
    in << Complex(1, 0), Complex(0, 0);
    WaveFunction psi{modes, in, 0.0};
    WaveFunction out = evolve(psi, prop, 1.0);
    // Oracle: direct matrix product.
    CVector expect = beam_splitter_2x2() * in;
    CHECK((out.amplitudes - expect).norm() < 1e-12);
    CHECK(std::abs(out.amplitudes[0] - Complex(1 / std::sqrt(2.0), 0)) < 1e-12);
    CHECK(std::abs(out.amplitudes[1] - Complex(0, 1 / std::sqrt(2.0))) < 1e-12);
}

TEST_CASE("unitarity and reversibility over long runs") {
    auto grid = GridSpace::make_1d(32.0, 256);
    RVector pot = sample_potential(*grid, [](double x, double) { return 0.5 * x * x; });
    Propagator prop = Propagator::split_operator(grid, 1.0, pot, 1.0 / 1024);
    Rng rng(23);
    for (int trial = 0; trial < 4; ++trial) {
        WaveFunction psi = random_state(grid, rng);
        WaveFunction far = evolve(psi, prop, 1000.0 / 1024);  // 1000 steps
        CHECK(std::abs(far.norm2() - 1.0) < 1e-10);
        WaveFunction back = evolve(far, prop, -1000.0 / 1024);
        CHECK((back.amplitudes - psi.amplitudes).cwiseAbs().maxCoeff() < 1e-8);
    }

    auto modes = ModeSpace::make({"a", "b"});
    Propagator mode_prop = Propagator::mode_unitary(modes, 1.0, beam_splitter_2x2());
    WaveFunction phi = random_state(modes, rng);
    WaveFunction cycled = evolve(evolve(phi, mode_prop, 1024.0), mode_prop, -1024.0);
    CHECK((cycled.amplitudes - phi.amplitudes).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("projection splits the norm exactly") {
    auto grid = GridSpace::make_1d(40.0, 512);
    WaveFunction psi = gaussian_packet(grid, scalar(0.0), 1.0, scalar(0.0));
    Region left = Region::axis_interval(grid, 0, -20.0, -grid->spacing(0) / 2);

    CHECK((project(psi, Region::full(grid)).amplitudes - psi.amplitudes).norm() == 0.0);
    CHECK(project(psi, Region::empty(grid)).amplitudes.norm() == 0.0);

    double left_mass = project(psi, left).norm2();
    double right_mass = project(psi, left.complement()).norm2();
    CHECK(std::abs(left_mass + right_mass - psi.norm2()) < 1e-12);
    // Symmetric packet on a symmetric split: grid points sit at -L/2 + i dx,
    // so x = 0 is a grid point; exclude it from "left" and its mirror weight
    // splits evenly up to the lone x=0 cell.
    double zero_cell = std::norm(psi.amplitudes[256]);
    CHECK(std::abs(left_mass - 0.5 * (1.0 - zero_cell)) < 1e-9);

    auto other = GridSpace::make_1d(40.0, 256);
    CHECK_THROWS_WITH_AS(project(psi, Region::full(other)), doctest::Contains("space-mismatch"),
                         std::invalid_argument);
}

TEST_CASE("inner product basics") {
    auto modes = ModeSpace::make({"a", "b", "c"});
    Rng rng(5);
    WaveFunction x = random_state(modes, rng);
    WaveFunction y = random_state(modes, rng);
    CHECK(std::abs(inner(x, x).real() - x.norm2()) < 1e-14);
    CHECK(std::abs(inner(x, x).imag()) < 1e-14);
    CHECK(std::abs(inner(x, y) - std::conj(inner(y, x))) < 1e-14);

    CVector ea = CVector::Zero(3), eb = CVector::Zero(3);
    ea[0] = 1.0;
    eb[1] = 1.0;
    CHECK(inner(WaveFunction{modes, ea, 0.0}, WaveFunction{modes, eb, 0.0}) == Complex(0, 0));

    // Half-overlapping masks of a uniform state: overlap mass by direct sum.
    auto grid = GridSpace::make_1d(8.0, 8);
    CVector uniform = CVector::Constant(8, Complex(1.0 / std::sqrt(8.0), 0));
    WaveFunction u{grid, uniform, 0.0};
    Region first = Region::of_indices(grid, {0, 1, 2, 3});
    Region mid = Region::of_indices(grid, {2, 3, 4, 5});
    double overlap = inner(project(u, first), project(u, mid)).real();
    CHECK(std::abs(overlap - 2.0 / 8.0) < 1e-14);
}

TEST_CASE("split-operator matches the dense small-instance oracle") {
    auto grid = GridSpace::make_1d(16.0, 64);
    RVector pot = sample_potential(*grid, [](double x, double) { return 0.5 * x * x; });
    double dt = 1.0 / 1024;
    Propagator prop = Propagator::split_operator(grid, 1.0, pot, dt);
    WaveFunction psi = gaussian_packet(grid, scalar(1.0), 1.0, scalar(0.5));

    CMatrix h = dense_grid_hamiltonian(*grid, 1.0, pot);
    CMatrix u = dense_evolution_operator(h, 100 * dt);
    CVector dense_out = u * psi.amplitudes;

    WaveFunction split_out = evolve(psi, prop, 100 * dt);
    CHECK((split_out.amplitudes - dense_out).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(unitarity_defect(u) < 1e-12);
}

TEST_CASE("ehrenfest diagnostics") {
    auto grid = GridSpace::make_1d(32.0, 256);
    double dt = 1.0 / 1024;

    SUBCASE("free particle") {
        Propagator prop = Propagator::split_operator(
            grid, 1.0, RVector::Zero(static_cast<Eigen::Index>(grid->size())), dt);
        WaveFunction psi = gaussian_packet(grid, scalar(-6.0), 1.5, scalar(1.0));
        std::vector<WaveFunction> snaps;
        for (int k = 0; k <= 40; ++k) snaps.push_back(prop.advance(psi, k * 8 * dt));
        auto report = ehrenfest_diagnostics(snaps, prop, 1e-4);
        CHECK(report.within_tolerance);
        CHECK(report.max_residual <= 1e-4);
    }

    SUBCASE("harmonic coherent packet") {
        RVector pot = sample_potential(*grid, [](double x, double) { return 0.5 * x * x; });
        Propagator prop = Propagator::split_operator(grid, 1.0, pot, dt);
        // Coherent state of the unit oscillator: position spread 1/sqrt(2).
        WaveFunction psi = gaussian_packet(grid, scalar(1.0), 1.0 / std::sqrt(2.0), scalar(0.0));
        std::vector<WaveFunction> snaps;
        for (int k = 0; k <= 60; ++k) snaps.push_back(prop.advance(psi, k * 8 * dt));
        auto report = ehrenfest_diagnostics(snaps, prop, 1e-4);
        CHECK(report.within_tolerance);
    }

    SUBCASE("uniform state in zero potential has representable-zero residuals") {
        Propagator prop = Propagator::split_operator(
            grid, 1.0, RVector::Zero(static_cast<Eigen::Index>(grid->size())), dt);
        CVector uniform = CVector::Constant(static_cast<Eigen::Index>(grid->size()),
                                            Complex(1.0 / 16.0, 0));
        std::vector<WaveFunction> snaps;
        for (int k = 0; k < 5; ++k)
            snaps.push_back(prop.advance(WaveFunction{grid, uniform, 0.0}, k * 8 * dt));
        auto report = ehrenfest_diagnostics(snaps, prop, 1e-4);
        CHECK(report.max_residual < 1e-12);
    }

    SUBCASE("too few snapshots") {
        Propagator prop = Propagator::split_operator(
            grid, 1.0, RVector::Zero(static_cast<Eigen::Index>(grid->size())), dt);
        WaveFunction psi = gaussian_packet(grid, scalar(0.0), 1.0, scalar(0.0));
        std::vector<WaveFunction> snaps{psi, prop.advance(psi, 8 * dt)};
        CHECK_THROWS_WITH_AS(ehrenfest_diagnostics(snaps, prop), doctest::Contains("too-few"),
                             std::invalid_argument);
    }
}

TEST_CASE("2d grid evolution") {
    auto grid = GridSpace::make_2d(24.0, 64, 24.0, 64);
    Propagator prop = Propagator::split_operator(
        grid, 1.0, RVector::Zero(static_cast<Eigen::Index>(grid->size())), 1.0 / 512);
    RVector center(2), momentum(2);
    center << -4.0, 2.0;
    momentum << 1.0, -0.5;
    WaveFunction psi = gaussian_packet(grid, center, 1.2, momentum);
    CHECK(std::abs(position_mean(psi)[0] + 4.0) < 1e-6);
    CHECK(std::abs(momentum_mean(psi)[1] + 0.5) < 1e-6);

    WaveFunction moved = evolve(psi, prop, 2.0);
    CHECK(std::abs(moved.norm2() - 1.0) < 1e-10);
    CHECK(std::abs(position_mean(moved)[0] - (-4.0 + 2.0)) < 1e-6);
    CHECK(std::abs(position_mean(moved)[1] - (2.0 - 1.0)) < 1e-6);
}

TEST_CASE("mode schedule applies per tick and is reversible") {
    auto modes = ModeSpace::make({"s", "a", "b"});
    // s -> (a + b)/sqrt(2); remaining columns complete the rotation.
    double s = 1.0 / std::sqrt(2.0);
    CMatrix stage1(3, 3);
    stage1 << Complex(0, 0), Complex(1, 0), Complex(0, 0),
              Complex(s, 0), Complex(0, 0), Complex(s, 0),
              Complex(s, 0), Complex(0, 0), Complex(-s, 0);
    REQUIRE(unitarity_defect(stage1) < 1e-12);

    CMatrix phase = CMatrix::Identity(3, 3);
    phase(2, 2) = Complex(-1.0, 0.0);  // sign plate on arm b

    Propagator prop = Propagator::mode_schedule(modes, 1.0, {stage1, phase});
    CVector e0 = CVector::Zero(3);
    e0[0] = 1.0;
    WaveFunction psi{modes, e0, 0.0};

    WaveFunction at1 = evolve(psi, prop, 1.0);
    CHECK(std::abs(std::norm(at1.amplitudes[1]) - 0.5) < 1e-12);
    WaveFunction at2 = evolve(at1, prop, 1.0);
    CHECK(std::abs(at2.amplitudes[2] + at1.amplitudes[2]) < 1e-12);  // flipped sign
    // Beyond the listed ticks the schedule is the identity.
    WaveFunction at5 = evolve(at2, prop, 3.0);
    CHECK((at5.amplitudes - at2.amplitudes).norm() == 0.0);
    // Round trip.
    WaveFunction back = prop.advance(at5, 0.0);
    CHECK((back.amplitudes - psi.amplitudes).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS(Propagator::mode_schedule(modes, 1.0, {2.0 * stage1}));  // not unitary
}
