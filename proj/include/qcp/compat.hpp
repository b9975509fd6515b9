// Sampled trajectory ensembles standing in for canonical stochastic processes,
// plus the statistics checking them against a quantum process: single-time
// marginals, the compatibility condition (overlap near 1 on the quantum side
// must show up as overlap near 1 in trajectory frequencies), and the
// majority-fraction variables with their distribution-free tail bound.

#pragma once

#include "qcp/cournot.hpp"
#include "qcp/squant.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qcp {

enum class EnsembleMethod {
    // Positions resampled independently at every grid time. Matches all
    // single-time marginals but carries no memory; serves as the negative
    // control for the compatibility condition.
    Independent,
    // One latent uniform per trajectory pushed through each marginal's
    // quantile function. Consecutive marginals are coupled by matching
    // cumulative distributions, so mass never moves between regions whose
    // masses are separately conserved (disjoint branches in particular).
    MonotoneTransport,
};

std::string method_name(EnsembleMethod method);
EnsembleMethod method_from_name(const std::string& name);

struct TrajectoryEnsemble {
    std::vector<double> times;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    EnsembleMethod method = EnsembleMethod::MonotoneTransport;
    // Flat count x times.size() array of basis-point indices.
    std::vector<std::int32_t> positions;

    std::int32_t at(std::size_t trajectory, std::size_t time_index) const {
        return positions[trajectory * times.size() + time_index];
    }
    std::size_t time_index(double t) const;  // throws time-off-grid
};

// Samples `count` trajectories over the grid. Single-time marginals follow the
// Born weights of the process; transitions come from the selected method. For
// mode spaces whose natural index order interleaves decohered sectors, pass
// `transport_order_hint` (per grid time, an ordered list of regions; points
// are ranked by the first region containing them) so the quantile coupling
// transports within sectors. Throws unknown-method on a bad method name and
// marginal-mismatch if the sampled marginals fail an internal
// Dvoretzky-Kiefer-Wolfowitz self-check.
TrajectoryEnsemble sample_ensemble(
    const QuantumProcess& qp, const std::vector<double>& time_grid, std::size_t count,
    std::uint64_t seed, EnsembleMethod method,
    const std::vector<std::vector<Region>>* transport_order_hint = nullptr);

// Fraction of trajectories inside the region at the grid time.
double empirical_frequency(const TrajectoryEnsemble& ensemble, const SSet& s);

// 2 f(S1 and S2) / (f(S1) + f(S2)) over trajectories.
double empirical_overlap(const TrajectoryEnsemble& ensemble, const SSet& s1, const SSet& s2);

struct CompatibilityRow {
    SSet s1;
    SSet s2;
    double m_quantum = 0.0;
    double m_empirical = 0.0;
    double freq_s1 = 0.0;
    double freq_s2 = 0.0;
    double freq_joint = 0.0;
    bool violation = false;
};

struct CompatibilityReport {
    double eps = 0.0;    // quantum closeness threshold
    double slack = 0.0;  // empirical closeness threshold (>= eps plus sampling room)
    std::vector<CompatibilityRow> rows;
    std::size_t violations = 0;
};

// Violation: m_quantum >= 1 - eps while m_empirical < 1 - slack.
CompatibilityReport compatibility_check(const TrajectoryEnsemble& ensemble,
                                        const QuantumProcess& qp,
                                        const std::vector<std::pair<SSet, SSet>>& pairs,
                                        double eps, double slack);

// Per-trajectory fraction of the given s-sets the trajectory belongs to,
// with the summary statistics used by the tail bound.
struct MajorityStatistic {
    std::vector<double> y_values;
    double mean_y = 0.0;
    double delta = 0.0;
    double prob_y_below = 0.0;  // fraction with Y <= 1 - delta
};

MajorityStatistic majority_statistic(const TrajectoryEnsemble& ensemble,
                                     const std::vector<SSet>& ssets, double delta = 1e-3);

// sup of E(Y) over [0,1]-valued variables with P(Y <= a) = p_a:
// a p_a + (1 - p_a) = 1 - p_a (1 - a).
double sup_expectation(double a, double p_a);

// Fraction of consecutive-time steps on which a trajectory changes branch,
// given branch regions per grid time (branch_maps[branch][time_index]).
// Points outside every branch are counted separately, not as transitions.
struct TransitionStatistic {
    double transition_frequency = 0.0;
    double outside_fraction = 0.0;
    long long transitions = 0;
    long long opportunities = 0;
};

TransitionStatistic branch_transition_frequency(
    const TrajectoryEnsemble& ensemble, const std::vector<std::vector<Region>>& branch_maps);

// Columnar CSV: header row of grid times, one trajectory per row of indices.
std::string ensemble_to_csv(const TrajectoryEnsemble& ensemble);

} // namespace qcp
