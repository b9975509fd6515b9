#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qcp/compat.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace qcp;
using qcp::testutil::beam_splitter_2x2;
using qcp::testutil::two_box_process;

namespace {

RVector scalar(double x) {
    RVector v(1);
    v[0] = x;
    return v;
}


// Static 8-mode process with a fixed non-uniform profile.
QuantumProcess static_mode_process(int ticks = 4) {
    auto modes = ModeSpace::make({"m0", "m1", "m2", "m3", "m4", "m5", "m6", "m7"});
    CVector amps(8);
    amps << 0.6, 0.4, 0.35, 0.3, 0.25, 0.2, 0.15, 0.1;
    WaveFunction psi{modes, amps, 0.0};
    return QuantumProcess(Propagator::mode_schedule(modes, 1.0, {}),
                          psi.normalized(), 0.0, static_cast<double>(ticks));
}

} // namespace

TEST_CASE("static process: marginals match and monotone trajectories freeze") {
    QuantumProcess qp = static_mode_process();
    std::vector<double> grid{0.0, 1.0, 2.0, 3.0};
    auto modes = std::dynamic_pointer_cast<const ModeSpace>(qp.space());

    for (auto method : {EnsembleMethod::Independent, EnsembleMethod::MonotoneTransport}) {
        auto ens = sample_ensemble(qp, grid, 20000, 7, method);
        // Marginal fidelity within a 4-sigma band at every time and mode.
        for (double t : grid) {
            for (std::size_t m = 0; m < 8; ++m) {
                SSet s{t, Region::of_indices(modes, {m})};
                double p = sset_weight(qp, s);
                double band = 4.0 * std::sqrt(p * (1.0 - p) / 20000.0);
                CHECK(std::abs(empirical_frequency(ens, s) - p) <= band);
            }
        }
    }

    // Time-independent law plus quantile coupling: positions never move.
    auto frozen = sample_ensemble(qp, grid, 5000, 11, EnsembleMethod::MonotoneTransport);
    for (std::size_t traj = 0; traj < frozen.count; ++traj)
        for (std::size_t k = 1; k < grid.size(); ++k)
            REQUIRE(frozen.at(traj, k) == frozen.at(traj, 0));
}

TEST_CASE("ensemble determinism and csv export") {
    QuantumProcess qp = static_mode_process();
    std::vector<double> grid{0.0, 1.0, 2.0};
    auto a = sample_ensemble(qp, grid, 500, 42, EnsembleMethod::Independent);
    auto b = sample_ensemble(qp, grid, 500, 42, EnsembleMethod::Independent);
    CHECK(a.positions == b.positions);
    auto c = sample_ensemble(qp, grid, 500, 43, EnsembleMethod::Independent);
    CHECK(a.positions != c.positions);

    std::string csv = ensemble_to_csv(a);
    CHECK(csv == ensemble_to_csv(b));
    CHECK(csv.substr(0, 5) == "0,1,2");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 501);
}

TEST_CASE("einstein boxes: monotone transport keeps trajectories boxed") {
    QuantumProcess qp = two_box_process();
    auto grid_space = std::dynamic_pointer_cast<const GridSpace>(qp.space());
    Region left = Region::axis_interval(grid_space, 0, -32.0, -grid_space->spacing(0) / 2);
    Region right = left.complement();
    auto times = qcp::testutil::two_box_grid();

    std::vector<std::vector<Region>> branch_maps{
        std::vector<Region>(times.size(), left), std::vector<Region>(times.size(), right)};

    SUBCASE("monotone transport crosses at most 1e-3") {
        auto ens = sample_ensemble(qp, times, 20000, 7, EnsembleMethod::MonotoneTransport);
        auto stat = branch_transition_frequency(ens, branch_maps);
        CHECK(stat.transition_frequency <= 1e-3);
        CHECK(stat.outside_fraction == 0.0);
    }

    SUBCASE("independent resampling is the negative control") {
        auto ens = sample_ensemble(qp, times, 20000, 7, EnsembleMethod::Independent);
        auto stat = branch_transition_frequency(ens, branch_maps);
        // Fresh draws cross boxes roughly half the time per step.
        CHECK(stat.transition_frequency > 0.2);
    }
}

TEST_CASE("compatibility condition separates the two methods") {
    QuantumProcess qp = two_box_process();
    auto grid_space = std::dynamic_pointer_cast<const GridSpace>(qp.space());
    Region left = Region::axis_interval(grid_space, 0, -32.0, -grid_space->spacing(0) / 2);
    Region right = left.complement();
    auto times = qcp::testutil::two_box_grid();

    std::vector<std::pair<SSet, SSet>> pairs;
    for (double t : {0.5, 1.0, 2.0}) {
        pairs.emplace_back(SSet{t, left}, SSet{3.0, left});
        pairs.emplace_back(SSet{t, right}, SSet{3.0, right});
        pairs.emplace_back(SSet{t, left}, SSet{3.0, right});  // quantum overlap ~ 0
    }

    auto monotone = sample_ensemble(qp, times, 20000, 7, EnsembleMethod::MonotoneTransport);
    auto report = compatibility_check(monotone, qp, pairs, 1e-2, 2e-2);
    CHECK(report.violations == 0);
    // Same-box rows really are in the near-1 regime on both sides.
    CHECK(report.rows[0].m_quantum >= 1.0 - 1e-6);
    CHECK(report.rows[0].m_empirical >= 1.0 - 1e-6);

    auto independent = sample_ensemble(qp, times, 20000, 7, EnsembleMethod::Independent);
    auto control = compatibility_check(independent, qp, pairs, 1e-2, 2e-2);
    CHECK(control.violations > 0);

    SUBCASE("pair times must sit on the ensemble grid") {
        std::vector<std::pair<SSet, SSet>> off{{SSet{0.1, left}, SSet{3.0, left}}};
        CHECK_THROWS_WITH_AS(compatibility_check(monotone, qp, off, 1e-2, 2e-2),
                             doctest::Contains("time-off-grid"), std::invalid_argument);
    }
}

TEST_CASE("majority statistic and the tail bound") {
    // 64-mode static profile; 50 s-sets each excluding one light mode, so the
    // per-set weight is exactly 1 - q.
    const double q = 1e-4;
    std::vector<std::string> labels;
    for (int i = 0; i < 64; ++i) labels.push_back("m" + std::to_string(i));
    auto modes = ModeSpace::make(labels);
    CVector amps = CVector::Zero(64);
    for (int i = 1; i <= 50; ++i) amps[i] = std::sqrt(q);
    amps[0] = std::sqrt(1.0 - 50.0 * q);
    QuantumProcess qp(Propagator::mode_schedule(modes, 1.0, {}),
                      WaveFunction{modes, amps, 0.0}, 0.0, 50.0);

    std::vector<double> grid;
    std::vector<SSet> ssets;
    for (int i = 1; i <= 50; ++i) {
        grid.push_back(static_cast<double>(i - 1));
        ssets.push_back(SSet{static_cast<double>(i - 1),
                             Region::of_indices(modes, {static_cast<std::size_t>(i)})
                                 .complement()});
    }
    for (const auto& s : ssets)
        CHECK(sset_weight(qp, s) == doctest::Approx(1.0 - q).epsilon(1e-12));

    auto ens = sample_ensemble(qp, grid, 100000, 7, EnsembleMethod::MonotoneTransport);
    auto stat = majority_statistic(ens, ssets, 1e-3);

    // Expectation bound: E(Y) >= 1 - eps with eps = max single-set shortfall.
    double band = 4.0 * std::sqrt(q * (1 - q) / 100000.0);
    CHECK(stat.mean_y >= 1.0 - q - band);

    // Tail bound: P(Y <= 1 - delta) <= eps / delta plus sampling room.
    double p_true_band = 4.0 * std::sqrt(50.0 * q / 100000.0);
    CHECK(stat.prob_y_below <= q / 1e-3 + p_true_band);

    SUBCASE("single certain set pins Y at one") {
        std::vector<SSet> certain{SSet{0.0, Region::full(modes)}};
        auto one = majority_statistic(ens, certain, 1e-3);
        CHECK(one.mean_y == 1.0);
        CHECK(one.prob_y_below == 0.0);
    }

    SUBCASE("the tail bound is distribution-free: independent method too") {
        auto indep = sample_ensemble(qp, grid, 100000, 7, EnsembleMethod::Independent);
        auto istat = majority_statistic(indep, ssets, 1e-3);
        CHECK(istat.mean_y >= 1.0 - q - band);
        CHECK(istat.prob_y_below <= q / 1e-3 + p_true_band);
    }

    SUBCASE("empty list is rejected") {
        CHECK_THROWS(majority_statistic(ens, {}, 1e-3));
    }

    SUBCASE("identical pair has empirical overlap exactly one") {
        CHECK(empirical_overlap(ens, ssets[0], ssets[0]) == 1.0);
    }
}

TEST_CASE("sup expectation closed form") {
    CHECK(sup_expectation(1.0, 0.3) == 1.0);
    CHECK(sup_expectation(0.2, 0.0) == 1.0);
    // Tail-bound algebra: requiring 1 - p(1-a) >= 1 - eps at a = 1 - delta
    // caps p at eps/delta; the worked numbers give 1e-6.
    double p_cap = 1e-9 / 1e-3;
    CHECK(sup_expectation(1.0 - 1e-3, p_cap) >= 1.0 - 1e-9);
    CHECK(p_cap == doctest::Approx(1e-6).epsilon(1e-12));
    CHECK_THROWS(sup_expectation(-0.1, 0.5));
    CHECK_THROWS(sup_expectation(0.5, 1.5));
}

TEST_CASE("method names round trip") {
    CHECK(method_from_name("independent") == EnsembleMethod::Independent);
    CHECK(method_from_name("monotone-transport") == EnsembleMethod::MonotoneTransport);
    CHECK(method_name(EnsembleMethod::MonotoneTransport) == "monotone-transport");
    CHECK_THROWS_WITH_AS(method_from_name("bogus"), doctest::Contains("unknown-method"),
                         std::invalid_argument);
}
