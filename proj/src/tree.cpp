#include "qcp/tree.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qcp {

namespace {

void check_tree_shape(const TreeStructure& tree) {
    if (tree.branches.empty() || tree.times.empty())
        throw std::invalid_argument("TreeStructure: empty tree");
    for (const auto& branch : tree.branches)
        if (branch.size() != tree.times.size())
            throw std::invalid_argument("TreeStructure: branch map length mismatch");
}

} // namespace

std::vector<TreeViolation> validate_tree(const TreeStructure& tree) {
    check_tree_shape(tree);
    std::vector<TreeViolation> out;
    std::size_t n = tree.branch_count();
    std::size_t t_count = tree.time_count();

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            bool seen_unequal = false;
            for (std::size_t k = 0; k < t_count; ++k) {
                const Region& a = tree.region(i, k);
                const Region& b = tree.region(j, k);
                bool equal = a.same_as(b);
                if (!equal && !a.disjoint_with(b))
                    out.push_back({"disjoint-or-equal", tree.times[k], i, j});
                if (equal && seen_unequal)
                    out.push_back({"no-rejoin", tree.times[k], i, j});
                if (!equal) seen_unequal = true;
            }
            if (!tree.region(i, 0).same_as(tree.region(j, 0)))
                out.push_back({"common-root", tree.times[0], i, j});
            if (!tree.region(i, t_count - 1).disjoint_with(tree.region(j, t_count - 1)))
                out.push_back({"full-split", tree.times[t_count - 1], i, j});
        }
    }
    return out;
}

std::vector<std::vector<std::size_t>> branch_partition(const TreeStructure& tree,
                                                       std::size_t time_index) {
    check_tree_shape(tree);
    std::vector<std::vector<std::size_t>> groups;
    std::vector<bool> placed(tree.branch_count(), false);
    for (std::size_t i = 0; i < tree.branch_count(); ++i) {
        if (placed[i]) continue;
        std::vector<std::size_t> group{i};
        placed[i] = true;
        for (std::size_t j = i + 1; j < tree.branch_count(); ++j)
            if (!placed[j] && tree.region(i, time_index).same_as(tree.region(j, time_index))) {
                group.push_back(j);
                placed[j] = true;
            }
        groups.push_back(std::move(group));
    }
    return groups;
}

Region merged_region(const TreeStructure& tree, const std::vector<std::size_t>& group,
                     std::size_t time_index) {
    Region merged = tree.region(group.front(), time_index);
    for (std::size_t g = 1; g < group.size(); ++g)
        merged = merged.unite(tree.region(group[g], time_index));
    return merged;
}

PermanenceReport permanence_residuals(const QuantumProcess& qp, const TreeStructure& tree) {
    check_tree_shape(tree);
    if (!validate_tree(tree).empty())
        throw std::invalid_argument("permanence_residuals: invalid tree");

    PermanenceReport report;
    std::size_t t_count = tree.time_count();
    SsetCache cache(qp);

    // Support: the branch union must carry the wave at every time.
    std::vector<Region> unions;
    unions.reserve(t_count);
    std::vector<std::size_t> all(tree.branch_count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    for (std::size_t k = 0; k < t_count; ++k) {
        unions.push_back(merged_region(tree, all, k));
        double w = sset_weight(qp, SSet{tree.times[k], unions[k]});
        report.support_residual = std::max(report.support_residual, 1.0 - w);
    }

    // Branch self-overlap: merged families fixed at level t, compared between
    // any later time s and the final time.
    double t_final = tree.times[t_count - 1];
    std::set<std::pair<std::uint64_t, std::uint64_t>> seen;  // (hash(s-region), hash(final))
    for (std::size_t level = 0; level < t_count; ++level) {
        for (const auto& group : branch_partition(tree, level)) {
            Region at_final = merged_region(tree, group, t_count - 1);
            double w_final = sset_weight(qp, SSet{t_final, at_final});
            for (std::size_t k = level; k < t_count; ++k) {
                Region at_s = merged_region(tree, group, k);
                auto key = std::make_pair(at_s.mask_hash() ^ (0x9e3779b97f4a7c15ull * k),
                                          at_final.mask_hash());
                if (!seen.insert(key).second) continue;
                double w_s = sset_weight(qp, SSet{tree.times[k], at_s});
                if (w_s <= 1e-14 && w_final <= 1e-14) continue;  // vacuous branch
                double m = overlap_index(cache, SSet{tree.times[k], at_s},
                                         SSet{t_final, at_final});
                report.branch_residual = std::max(report.branch_residual, 1.0 - m);
            }
        }
    }
    report.max_residual = std::max(report.support_residual, report.branch_residual);
    return report;
}

ResidenceStatistic residence_statistic(const TrajectoryEnsemble& ensemble,
                                       const TreeStructure& tree,
                                       const std::vector<double>& probe_times, double delta) {
    check_tree_shape(tree);
    if (!validate_tree(tree).empty())
        throw std::invalid_argument("residence_statistic: invalid tree");
    if (probe_times.empty())
        throw std::invalid_argument("residence_statistic: no probe times");

    std::size_t n = tree.region(0, 0).space()->size();
    auto labels_at = [&](std::size_t tree_k) {
        std::vector<std::int16_t> label(n, -1);
        for (std::size_t b = 0; b < tree.branch_count(); ++b)
            for (std::size_t i = 0; i < n; ++i)
                if (tree.region(b, tree_k).mask()[i] && label[i] < 0)
                    label[i] = static_cast<std::int16_t>(b);
        return label;
    };

    std::size_t final_k = ensemble.time_index(tree.times.back());
    auto final_labels = labels_at(tree.time_count() - 1);

    std::vector<std::size_t> probe_ens_k, probe_tree_k;
    for (double t : probe_times) {
        probe_ens_k.push_back(ensemble.time_index(t));
        auto it = std::find_if(tree.times.begin(), tree.times.end(), [&](double tt) {
            return std::abs(tt - t) <= 1e-9 * std::max(1.0, std::abs(t));
        });
        if (it == tree.times.end())
            throw std::invalid_argument("residence_statistic: probe time off the tree grid");
        probe_tree_k.push_back(static_cast<std::size_t>(it - tree.times.begin()));
    }
    std::vector<std::vector<std::int16_t>> probe_labels;
    probe_labels.reserve(probe_tree_k.size());
    for (std::size_t k : probe_tree_k) probe_labels.push_back(labels_at(k));

    ResidenceStatistic stat;
    stat.delta = delta;
    stat.y_values.resize(ensemble.count);
    double sum = 0.0;
    long long below = 0;
    for (std::size_t traj = 0; traj < ensemble.count; ++traj) {
        std::int16_t home = final_labels[static_cast<std::size_t>(ensemble.at(traj, final_k))];
        long long hits = 0;
        if (home >= 0) {
            for (std::size_t p = 0; p < probe_ens_k.size(); ++p) {
                auto pos = static_cast<std::size_t>(ensemble.at(traj, probe_ens_k[p]));
                if (probe_labels[p][pos] == home) ++hits;
            }
        }
        double y = static_cast<double>(hits) / static_cast<double>(probe_ens_k.size());
        stat.y_values[traj] = y;
        sum += y;
        if (y <= 1.0 - delta) ++below;
    }
    stat.mean_y = sum / static_cast<double>(ensemble.count);
    stat.prob_y_below = static_cast<double>(below) / static_cast<double>(ensemble.count);
    return stat;
}

// ---------------------------------------------------------------------------
// Extraction

namespace {

// Circular above-floor components, bridged across sub-floor gaps shorter than
// gap_cells. Returns masks.
std::vector<std::vector<std::uint8_t>> density_components(const RVector& density,
                                                          int gap_cells, double mass_floor) {
    auto n = static_cast<std::size_t>(density.size());
    double floor_level = mass_floor * density.maxCoeff();
    std::vector<std::uint8_t> above(n);
    std::size_t above_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        above[i] = density[static_cast<Eigen::Index>(i)] >= floor_level ? 1 : 0;
        above_count += above[i];
    }
    if (above_count == n)
        return {std::vector<std::uint8_t>(n, 1)};

    // Walk the circle starting from an above-floor cell, so every sub-floor
    // run is seen whole. Runs of length >= gap_cells separate components;
    // shorter dips are bridged into the surrounding component.
    std::size_t anchor = 0;
    while (!above[anchor]) ++anchor;
    std::vector<std::uint8_t> separator(n, 0);
    for (std::size_t i = 0; i < n;) {
        std::size_t pos = (anchor + i) % n;
        if (above[pos]) {
            ++i;
            continue;
        }
        std::size_t len = 0;
        while (len < n && !above[(pos + len) % n]) ++len;
        if (len >= static_cast<std::size_t>(gap_cells))
            for (std::size_t g = 0; g < len; ++g) separator[(pos + g) % n] = 1;
        i += len;
    }

    std::vector<std::vector<std::uint8_t>> comps;
    for (std::size_t i = 0; i < n;) {
        std::size_t pos = (anchor + i) % n;
        if (separator[pos]) {
            ++i;
            continue;
        }
        std::vector<std::uint8_t> mask(n, 0);
        std::size_t len = 0;
        while (len < n && !separator[(pos + len) % n]) {
            mask[(pos + len) % n] = 1;
            ++len;
        }
        comps.push_back(std::move(mask));
        i += len;
    }
    return comps;
}

bool masks_overlap(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] && b[i]) return true;
    return false;
}

std::vector<std::uint8_t> mask_union(const std::vector<std::uint8_t>& a,
                                     const std::vector<std::uint8_t>& b) {
    std::vector<std::uint8_t> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] | b[i];
    return out;
}

} // namespace

TreeStructure extract_tree_from_densities(const std::shared_ptr<const GridSpace>& grid,
                                          const std::vector<double>& times,
                                          const std::vector<RVector>& densities,
                                          int gap_cells, double mass_floor) {
    if (grid->dimension() != 1)
        throw std::invalid_argument("extract_tree: 1D grid scenarios only");
    if (times.size() < 2 || times.size() != densities.size())
        throw std::invalid_argument("extract_tree: need >= 2 aligned times and densities");

    std::size_t t_count = times.size();
    std::vector<std::vector<std::vector<std::uint8_t>>> comps(t_count);
    for (std::size_t k = 0; k < t_count; ++k)
        comps[k] = density_components(densities[k], gap_cells, mass_floor);

    // parents[k][c] = indices of comps at k-1 overlapping comp c at k.
    std::vector<std::vector<std::vector<std::size_t>>> parents(t_count);
    for (std::size_t k = 1; k < t_count; ++k) {
        parents[k].resize(comps[k].size());
        for (std::size_t c = 0; c < comps[k].size(); ++c) {
            for (std::size_t p = 0; p < comps[k - 1].size(); ++p)
                if (masks_overlap(comps[k][c], comps[k - 1][p])) parents[k][c].push_back(p);
            if (parents[k][c].empty()) {
                std::ostringstream os;
                os << "cluster-lineage-ambiguous: component with no parent at time "
                   << times[k];
                throw std::runtime_error(os.str());
            }
        }
    }

    // Leaves are the final-time components. Each leaf's region at time k is
    // the union of its ancestor components there; a merge therefore coarsens
    // every pre-merge distinction, which is what enforces no-rejoin.
    std::size_t leaf_count = comps[t_count - 1].size();
    std::vector<std::vector<std::vector<std::uint8_t>>> ancestors(
        leaf_count, std::vector<std::vector<std::uint8_t>>(t_count));
    for (std::size_t leaf = 0; leaf < leaf_count; ++leaf) {
        std::vector<std::uint8_t> current(comps[t_count - 1].size(), 0);
        current[leaf] = 1;
        for (std::size_t k = t_count; k-- > 0;) {
            std::vector<std::uint8_t> mask(grid->size(), 0);
            for (std::size_t c = 0; c < comps[k].size(); ++c)
                if (current[c]) mask = mask_union(mask, comps[k][c]);
            ancestors[leaf][k] = std::move(mask);
            if (k == 0) break;
            std::vector<std::uint8_t> prev(comps[k - 1].size(), 0);
            for (std::size_t c = 0; c < comps[k].size(); ++c)
                if (current[c])
                    for (std::size_t p : parents[k][c]) prev[p] = 1;
            current = std::move(prev);
        }
    }

    // Common root: all leaves share the full support at the first time.
    std::vector<std::uint8_t> root(grid->size(), 0);
    for (const auto& c : comps[0]) root = mask_union(root, c);

    std::vector<std::vector<Region>> branch_regions(leaf_count);
    for (std::size_t leaf = 0; leaf < leaf_count; ++leaf) {
        branch_regions[leaf].reserve(t_count);
        for (std::size_t k = 0; k < t_count; ++k)
            branch_regions[leaf].push_back(
                Region(grid, k == 0 ? root : ancestors[leaf][k]));
    }

    TreeStructure tree{times, std::move(branch_regions)};

    // Partial-overlap lineages (a component feeding several leaves while a
    // sibling feeds only some of them) are resolved by coarsening the
    // offending pair until the axioms hold.
    while (true) {
        auto violations = validate_tree(tree);
        if (violations.empty()) break;
        std::size_t i = violations.front().branch_i;
        std::size_t j = violations.front().branch_j;
        for (std::size_t k = 0; k < tree.time_count(); ++k)
            tree.branches[i][k] = tree.branches[i][k].unite(tree.branches[j][k]);
        tree.branches.erase(tree.branches.begin() + static_cast<std::ptrdiff_t>(j));
    }
    return tree;
}

TreeStructure extract_tree(const QuantumProcess& qp, const std::vector<double>& time_grid,
                           double gap_threshold, double mass_floor) {
    auto grid = std::dynamic_pointer_cast<const GridSpace>(qp.space());
    if (!grid) throw std::invalid_argument("extract_tree: grid-space processes only");
    if (grid->dimension() != 1)
        throw std::invalid_argument("extract_tree: 1D grid scenarios only");
    double dx = grid->spacing(0);
    int gap_cells = gap_threshold > 0.0
                        ? std::max(1, static_cast<int>(std::lround(gap_threshold / dx)))
                        : 4;
    std::vector<RVector> densities;
    densities.reserve(time_grid.size());
    for (double t : time_grid) {
        WaveFunction snap = qp.snapshot(t);
        RVector rho(snap.amplitudes.size());
        for (Eigen::Index i = 0; i < rho.size(); ++i) rho[i] = std::norm(snap.amplitudes[i]);
        densities.push_back(std::move(rho));
    }
    return extract_tree_from_densities(grid, time_grid, densities, gap_cells, mass_floor);
}

// ---------------------------------------------------------------------------
// Text round trip

std::string tree_to_text(const TreeStructure& tree) {
    check_tree_shape(tree);
    nlohmann::json doc;
    doc["times"] = tree.times;
    auto grid = std::dynamic_pointer_cast<const GridSpace>(tree.region(0, 0).space());
    auto modes = std::dynamic_pointer_cast<const ModeSpace>(tree.region(0, 0).space());
    doc["space"] = tree.region(0, 0).space()->describe();
    nlohmann::json branches = nlohmann::json::array();
    for (const auto& branch : tree.branches) {
        nlohmann::json per_time = nlohmann::json::array();
        for (const auto& region : branch) {
            if (grid) {
                nlohmann::json intervals = nlohmann::json::array();
                const auto& mask = region.mask();
                std::size_t i = 0;
                while (i < mask.size()) {
                    if (!mask[i]) {
                        ++i;
                        continue;
                    }
                    std::size_t begin = i;
                    while (i < mask.size() && mask[i]) ++i;
                    intervals.push_back({begin, i - 1});
                }
                per_time.push_back({{"intervals", intervals}});
            } else {
                nlohmann::json labels = nlohmann::json::array();
                for (std::size_t i : region.indices()) labels.push_back(modes->label(i));
                per_time.push_back({{"labels", labels}});
            }
        }
        branches.push_back(per_time);
    }
    doc["branches"] = branches;
    return doc.dump(2) + "\n";
}

TreeStructure tree_from_text(const std::string& text, const SpacePtr& space) {
    nlohmann::json doc = nlohmann::json::parse(text);
    TreeStructure tree;
    tree.times = doc.at("times").get<std::vector<double>>();
    auto grid = std::dynamic_pointer_cast<const GridSpace>(space);
    auto modes = std::dynamic_pointer_cast<const ModeSpace>(space);
    for (const auto& branch : doc.at("branches")) {
        std::vector<Region> maps;
        for (const auto& entry : branch) {
            if (grid) {
                std::vector<std::size_t> idx;
                for (const auto& iv : entry.at("intervals")) {
                    auto begin = iv.at(0).get<std::size_t>();
                    auto end = iv.at(1).get<std::size_t>();
                    for (std::size_t i = begin; i <= end; ++i) idx.push_back(i);
                }
                maps.push_back(Region::of_indices(space, idx));
            } else if (modes) {
                std::vector<std::string> labels;
                for (const auto& l : entry.at("labels")) labels.push_back(l.get<std::string>());
                maps.push_back(Region::of_labels(modes, labels));
            } else {
                throw std::invalid_argument("tree_from_text: unsupported space");
            }
        }
        tree.branches.push_back(std::move(maps));
    }
    check_tree_shape(tree);
    return tree;
}

} // namespace qcp
