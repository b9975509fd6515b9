// Forward tree structures: families of branch maps (grid time -> region)
// subject to four exactly-testable axioms, the permanence residuals tying
// branches to the wave function, branch-residence statistics over trajectory
// ensembles, and extraction of trees from simulated densities.
//
// Axioms (all on exact masks): branches are pairwise equal-or-disjoint at
// every time; branches equal at a time are equal at all earlier times
// (no rejoining); all branches coincide at the first time; all branches are
// pairwise disjoint at the last time.

#pragma once

#include "qcp/compat.hpp"
#include "qcp/squant.hpp"

#include <string>
#include <vector>

namespace qcp {

struct TreeStructure {
    std::vector<double> times;
    std::vector<std::vector<Region>> branches;  // [branch][time index]

    std::size_t branch_count() const { return branches.size(); }
    std::size_t time_count() const { return times.size(); }
    const Region& region(std::size_t branch, std::size_t time_index) const {
        return branches[branch][time_index];
    }
    // Branch maps in the [branch][time] layout the ensemble statistics take.
    const std::vector<std::vector<Region>>& branch_maps() const { return branches; }
};

struct TreeViolation {
    std::string axiom;  // "disjoint-or-equal" | "no-rejoin" | "common-root" | "full-split"
    double time = 0.0;
    std::size_t branch_i = 0;
    std::size_t branch_j = 0;
};

// Empty result iff all four axioms hold at every grid time. Violations are
// data, not errors.
std::vector<TreeViolation> validate_tree(const TreeStructure& tree);

// Branch index groups with equal regions at the given time (the level sets of
// the equality relation), in first-member order.
std::vector<std::vector<std::size_t>> branch_partition(const TreeStructure& tree,
                                                       std::size_t time_index);

// Union of the group members' regions at the given time.
Region merged_region(const TreeStructure& tree, const std::vector<std::size_t>& group,
                     std::size_t time_index);

// Permanence of the branch family relative to the process:
//   support residual   max over grid t of 1 - weight(t, union of branches)
//   branch residual    max over levels t, times s >= t and merged branches k
//                      of 1 - overlap((s, merged_k(s)), (t_F, merged_k(t_F)))
struct PermanenceReport {
    double support_residual = 0.0;
    double branch_residual = 0.0;
    double max_residual = 0.0;
};

PermanenceReport permanence_residuals(const QuantumProcess& qp, const TreeStructure& tree);

// Per-trajectory fraction of the probe times at which the trajectory sits in
// the branch it ends in (branch fixed by the position at the tree's final
// time; 0 when that position lies outside every branch).
struct ResidenceStatistic {
    std::vector<double> y_values;
    double mean_y = 0.0;
    double delta = 0.0;
    double prob_y_below = 0.0;
};

ResidenceStatistic residence_statistic(const TrajectoryEnsemble& ensemble,
                                       const TreeStructure& tree,
                                       const std::vector<double>& probe_times,
                                       double delta = 1e-3);

// Extracts a tree from the |psi|^2 profiles of a 1D grid process: per time,
// the support {density >= mass_floor * max} is clustered into components
// separated by sub-floor gaps of at least gap_threshold (a length; <= 0 means
// 4 grid spacings). Component lineages are joined across times by overlap;
// recombining lineages are coarsened into a single branch, so the output
// always passes validate_tree. Permanence is reported by the caller, not
// guaranteed. Throws cluster-lineage-ambiguous when a component has no parent.
TreeStructure extract_tree(const QuantumProcess& qp, const std::vector<double>& time_grid,
                           double gap_threshold = -1.0, double mass_floor = 1e-8);

// Clustering/lineage core on raw densities; extract_tree wraps this, and the
// idempotence property feeds a tree's own indicator masses back through it.
TreeStructure extract_tree_from_densities(const std::shared_ptr<const GridSpace>& grid,
                                          const std::vector<double>& times,
                                          const std::vector<RVector>& densities,
                                          int gap_cells, double mass_floor);

// Structured-text round trip: per grid time, per branch, an index-interval
// list (grids) or label set (mode spaces).
std::string tree_to_text(const TreeStructure& tree);
TreeStructure tree_from_text(const std::string& text, const SpacePtr& space);

} // namespace qcp
