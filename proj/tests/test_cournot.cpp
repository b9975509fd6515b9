#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qcp/cournot.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace qcp;
using qcp::testutil::random_region;
using qcp::testutil::two_box_process;
using qcp::testutil::random_state;

namespace {

RVector scalar(double x) {
    RVector v(1);
    v[0] = x;
    return v;
}

// Random 8-mode process driven by a random unitary per tick (QR of a random
// complex matrix).
QuantumProcess random_mode_process(std::uint64_t seed, int ticks = 3) {
    Rng rng(seed);
    auto modes = ModeSpace::make({"m0", "m1", "m2", "m3", "m4", "m5", "m6", "m7"});
    std::vector<CMatrix> steps;
    for (int t = 0; t < ticks; ++t) {
        CMatrix g(8, 8);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                g(i, j) = Complex(2.0 * rng.next_unit() - 1.0, 2.0 * rng.next_unit() - 1.0);
        Eigen::HouseholderQR<CMatrix> qr(g);
        CMatrix q = qr.householderQ();
        steps.push_back(q);
    }
    WaveFunction psi = random_state(modes, rng);
    return QuantumProcess(Propagator::mode_schedule(modes, 1.0, std::move(steps)),
                          std::move(psi), 0.0, static_cast<double>(ticks));
}


} // namespace

TEST_CASE("overlap index basics") {
    QuantumProcess qp = random_mode_process(101);
    auto modes = std::dynamic_pointer_cast<const ModeSpace>(qp.space());
    Rng rng(11);

    SUBCASE("identical arguments give exactly 1") {
        for (int trial = 0; trial < 10; ++trial) {
            SSet s{static_cast<double>(rng.next_below(3)), random_region(modes, rng)};
            if (sset_weight(qp, s) <= 1e-14) continue;
            CHECK(std::abs(overlap_index(qp, s, s) - 1.0) <= 1e-12);
        }
    }

    SUBCASE("symmetry is exact and values are bounded") {
        for (int trial = 0; trial < 50; ++trial) {
            SSet s1{static_cast<double>(rng.next_below(4)), random_region(modes, rng)};
            SSet s2{static_cast<double>(rng.next_below(4)), random_region(modes, rng)};
            double m12 = overlap_index(qp, s1, s2);
            double m21 = overlap_index(qp, s2, s1);
            CHECK(m12 == m21);
            CHECK(m12 <= 1.0 + 1e-12);
        }
    }

    SUBCASE("equality characterization as an algebraic identity") {
        SsetCache cache(qp);
        for (int trial = 0; trial < 30; ++trial) {
            SSet s1{static_cast<double>(rng.next_below(4)), random_region(modes, rng)};
            SSet s2{static_cast<double>(rng.next_below(4)), random_region(modes, rng)};
            const WaveFunction& v1 = cache.value(s1);
            const WaveFunction& v2 = cache.value(s2);
            double denom = v1.norm2() + v2.norm2();
            double m = overlap_index(cache, s1, s2);
            double diff = (v1.amplitudes - v2.amplitudes).squaredNorm();
            CHECK(std::abs((1.0 - m) - diff / denom) <= 1e-12);
        }
    }

    SUBCASE("both weights vanishing is an error") {
        CVector point = CVector::Zero(8);
        point[0] = 1.0;
        Propagator id = Propagator::mode_schedule(modes, 1.0, {});
        QuantumProcess still(id, WaveFunction{modes, point, 0.0}, 0.0, 2.0);
        Region unused = Region::of_labels(modes, {"m5"});
        CHECK_THROWS_WITH_AS(overlap_index(still, SSet{0.0, unused}, SSet{1.0, unused}),
                             doctest::Contains("both-weights-vanish"), std::invalid_argument);
    }
}

TEST_CASE("equal-time reduction to mass ratios") {
    // At equal times the overlap reduces to 2 P(A and B) / (P(A) + P(B)).
    auto grid = GridSpace::make_1d(32.0, 256);
    Propagator prop = Propagator::split_operator(
        grid, 1.0, RVector::Zero(static_cast<Eigen::Index>(grid->size())), 1.0 / 1024);
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        QuantumProcess qp(prop, random_state(grid, rng), 0.0, 1.0);
        double t = 32.0 / 1024;
        Region a = random_region(grid, rng);
        Region b = random_region(grid, rng);
        double m = overlap_index(qp, SSet{t, a}, SSet{t, b});
        WaveFunction at_t = qp.snapshot(t);
        double pa = region_mass(at_t, a);
        double pb = region_mass(at_t, b);
        double pab = region_mass(at_t, a.intersect(b));
        CHECK(std::abs(m - 2.0 * pab / (pa + pb)) <= 1e-10);
    }
}

TEST_CASE("einstein boxes overlap structure") {
    QuantumProcess qp = two_box_process();
    auto grid = std::dynamic_pointer_cast<const GridSpace>(qp.space());
    Region left = Region::axis_interval(grid, 0, -32.0, -grid->spacing(0) / 2);
    Region right = left.complement();

    SUBCASE("same box across times stays near 1") {
        for (double t : {0.0, 0.5, 1.0, 2.0}) {
            double m = overlap_index(qp, SSet{t, left}, SSet{3.0, left});
            CHECK(m >= 1.0 - 1e-8);
        }
    }

    SUBCASE("cross box stays near 0") {
        double m = overlap_index(qp, SSet{1.0, left}, SSet{3.0, right});
        CHECK(std::abs(m) <= 1e-8);
    }
}

TEST_CASE("particular case against the full space") {
    QuantumProcess qp = two_box_process();
    auto grid = std::dynamic_pointer_cast<const GridSpace>(qp.space());

    SUBCASE("full region carries certainty") {
        auto report = particular_case(qp, SSet{1.0, Region::full(grid)});
        CHECK(std::abs(report.weight - 1.0) < 1e-10);
        CHECK(std::abs(report.m_vs_full - 1.0) < 1e-10);
        CHECK(report.verdict.holds);
    }

    SUBCASE("closed-form overlap for intermediate weights") {
        Region left = Region::axis_interval(grid, 0, -32.0, -grid->spacing(0) / 2);
        auto report = particular_case(qp, SSet{0.0, left});
        CHECK(report.m_vs_full ==
              doctest::Approx(2.0 * report.weight / (1.0 + report.weight)).epsilon(1e-12));
        CHECK(report.inequality_residual <= 1e-12);
        CHECK_FALSE(report.verdict.holds);
        // The worked value: w = 0.999 maps to 2(0.999)/1.999.
        CHECK(2.0 * 0.999 / 1.999 == doctest::Approx(0.99949974987).epsilon(1e-9));
    }

    SUBCASE("empty region carries nothing") {
        auto report = particular_case(qp, SSet{1.0, Region::empty(grid)});
        CHECK(report.weight == 0.0);
        CHECK(report.m_vs_full == 0.0);
        CHECK_FALSE(report.verdict.holds);
    }
}

TEST_CASE("consistency probe finds no violations on randomized scans") {
    QuantumProcess qp = random_mode_process(2024, 4);
    auto modes = std::dynamic_pointer_cast<const ModeSpace>(qp.space());
    Rng rng(55);

    std::vector<std::pair<SSet, SSet>> candidates;
    while (candidates.size() < 1000) {
        double t = static_cast<double>(rng.next_below(5));
        Region r1 = random_region(modes, rng);
        Region r2 = random_region(modes, rng).intersect(r1.complement());
        if (r2.is_empty()) continue;
        SSet s1{t, r1}, s2{t, r2};
        if (sset_weight(qp, s1) <= 1e-14 && sset_weight(qp, s2) <= 1e-14) continue;
        candidates.emplace_back(s1, s2);
    }
    SSet anchor{0.0, random_region(modes, rng)};
    auto report = consistency_probe(qp, anchor, candidates, 0.05);
    CHECK(report.rows.size() == 1000);
    CHECK(report.violations == 0);

    SUBCASE("complementary regions never both hold, even at loose thresholds") {
        Region half = random_region(modes, rng);
        std::vector<std::pair<SSet, SSet>> comp{{SSet{1.0, half}, SSet{1.0, half.complement()}}};
        auto loose = consistency_probe(qp, SSet{1.0, half}, comp, 0.5);
        CHECK(loose.violations == 0);
        CHECK_FALSE(loose.rows[0].both_within_threshold);
    }

    SUBCASE("malformed candidates are rejected") {
        Region half = random_region(modes, rng);
        std::vector<std::pair<SSet, SSet>> bad{{SSet{1.0, half}, SSet{1.0, half}}};
        CHECK_THROWS(consistency_probe(qp, anchor, bad, 0.05));
        std::vector<std::pair<SSet, SSet>> mixed{
            {SSet{1.0, half}, SSet{2.0, half.complement()}}};
        CHECK_THROWS(consistency_probe(qp, anchor, mixed, 0.05));
    }
}

TEST_CASE("conditional ratio and one-sided residual") {
    QuantumProcess qp = two_box_process();
    auto grid = std::dynamic_pointer_cast<const GridSpace>(qp.space());
    Region left = Region::axis_interval(grid, 0, -32.0, -grid->spacing(0) / 2);

    SUBCASE("identical equal-time s-sets") {
        SSet s{1.0, left};
        CHECK(std::abs(conditional_ratio(qp, s, s) - 1.0) <= 1e-12);
        CHECK(one_sided_residual(qp, s, s) == 0.0);
    }

    SUBCASE("relay within one box is faithful") {
        // The left-box wave at t2 is reconstructed from the left box at t1.
        // The residual is an amplitude ratio, so 1e-5 here corresponds to a
        // relayed-mass mismatch of 1e-10 (truncation ripple plus wall skin).
        SSet s1{0.5, left}, s2{1.5, left};
        CHECK(one_sided_residual(qp, s1, s2) <= 1e-5);
        CHECK(std::abs(conditional_ratio(qp, s1, s2) - 1.0) <= 1e-6);
    }

    SUBCASE("vanishing denominators are reported") {
        Region nothing = Region::empty(grid);
        SSet s1{0.5, left}, s2{1.5, nothing};
        CHECK_THROWS_WITH_AS(conditional_ratio(qp, s1, s2),
                             doctest::Contains("division-by-vanishing-weight"),
                             std::invalid_argument);
        CHECK_THROWS_WITH_AS(one_sided_residual(qp, s1, s2),
                             doctest::Contains("division-by-vanishing-weight"),
                             std::invalid_argument);
    }
}
