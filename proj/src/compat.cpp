#include "qcp/compat.hpp"

#include "qcp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qcp {

std::string method_name(EnsembleMethod method) {
    switch (method) {
        case EnsembleMethod::Independent: return "independent";
        case EnsembleMethod::MonotoneTransport: return "monotone-transport";
    }
    return "unknown";
}

EnsembleMethod method_from_name(const std::string& name) {
    if (name == "independent") return EnsembleMethod::Independent;
    if (name == "monotone-transport" || name == "monotone_transport")
        return EnsembleMethod::MonotoneTransport;
    throw std::invalid_argument("unknown-method: '" + name + "'");
}

std::size_t TrajectoryEnsemble::time_index(double t) const {
    for (std::size_t k = 0; k < times.size(); ++k)
        if (std::abs(times[k] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return k;
    std::ostringstream os;
    os << "time-off-grid: t = " << t << " is not an ensemble grid time";
    throw std::invalid_argument(os.str());
}

namespace {

// Per-time sampling table: basis indices in transport order with the
// cumulative distribution over that order.
struct QuantileTable {
    std::vector<std::int32_t> order;    // rank -> basis index
    std::vector<double> cumulative;     // size n+1, cumulative[0] = 0
    std::vector<std::int32_t> rank_of;  // basis index -> rank

    std::int32_t sample(double u) const {
        auto it = std::upper_bound(cumulative.begin() + 1, cumulative.end(), u);
        auto rank = static_cast<std::size_t>(it - cumulative.begin() - 1);
        if (rank >= order.size()) rank = order.size() - 1;
        return order[rank];
    }
};

QuantileTable build_table(const WaveFunction& snap, const std::vector<Region>* order_regions) {
    std::size_t n = snap.space->size();
    QuantileTable table;
    table.order.reserve(n);
    std::vector<std::uint8_t> taken(n, 0);
    if (order_regions) {
        for (const auto& region : *order_regions) {
            if (region.mask().size() != n)
                throw std::invalid_argument("sample_ensemble: order hint region size mismatch");
            for (std::size_t i = 0; i < n; ++i)
                if (region.mask()[i] && !taken[i]) {
                    taken[i] = 1;
                    table.order.push_back(static_cast<std::int32_t>(i));
                }
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!taken[i]) table.order.push_back(static_cast<std::int32_t>(i));

    table.cumulative.resize(n + 1);
    table.cumulative[0] = 0.0;
    for (std::size_t r = 0; r < n; ++r)
        table.cumulative[r + 1] =
            table.cumulative[r] + std::norm(snap.amplitudes[table.order[r]]);
    // Normalize the tiny rounding drift so u in [0,1) always lands.
    double total = table.cumulative[n];
    for (auto& c : table.cumulative) c /= total;

    table.rank_of.resize(n);
    for (std::size_t r = 0; r < n; ++r)
        table.rank_of[static_cast<std::size_t>(table.order[r])] = static_cast<std::int32_t>(r);
    return table;
}

} // namespace

TrajectoryEnsemble sample_ensemble(const QuantumProcess& qp,
                                   const std::vector<double>& time_grid, std::size_t count,
                                   std::uint64_t seed, EnsembleMethod method,
                                   const std::vector<std::vector<Region>>* hint) {
    if (time_grid.empty()) throw std::invalid_argument("sample_ensemble: empty time grid");
    if (count < 1) throw std::invalid_argument("sample_ensemble: count must be >= 1");
    for (double t : time_grid)
        if (!qp.contains_time(t))
            throw std::invalid_argument("time-outside-interval: ensemble grid exceeds process");
    if (hint && hint->size() != time_grid.size())
        throw std::invalid_argument("sample_ensemble: order hint must cover every grid time");

    std::size_t t_count = time_grid.size();
    std::vector<QuantileTable> tables;
    tables.reserve(t_count);
    for (std::size_t k = 0; k < t_count; ++k)
        tables.push_back(build_table(qp.snapshot(time_grid[k]), hint ? &(*hint)[k] : nullptr));

    TrajectoryEnsemble ensemble;
    ensemble.times = time_grid;
    ensemble.count = count;
    ensemble.seed = seed;
    ensemble.method = method;
    ensemble.positions.resize(count * t_count);

    for (std::size_t traj = 0; traj < count; ++traj) {
        Rng rng = Rng::stream(seed, traj);
        if (method == EnsembleMethod::MonotoneTransport) {
            double u = rng.next_unit();
            for (std::size_t k = 0; k < t_count; ++k)
                ensemble.positions[traj * t_count + k] = tables[k].sample(u);
        } else {
            for (std::size_t k = 0; k < t_count; ++k)
                ensemble.positions[traj * t_count + k] = tables[k].sample(rng.next_unit());
        }
    }

    // Marginal self-check: empirical vs exact CDF in transport order, with a
    // Dvoretzky-Kiefer-Wolfowitz band at confidence 1 - 1e-9.
    double band = std::sqrt(std::log(2.0 / 1e-9) / (2.0 * static_cast<double>(count)));
    std::size_t n = qp.space()->size();
    std::vector<double> occupancy(n);
    for (std::size_t k = 0; k < t_count; ++k) {
        std::fill(occupancy.begin(), occupancy.end(), 0.0);
        for (std::size_t traj = 0; traj < count; ++traj)
            occupancy[static_cast<std::size_t>(
                tables[k].rank_of[static_cast<std::size_t>(
                    ensemble.positions[traj * t_count + k])])] += 1.0;
        double cdf = 0.0, worst = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            cdf += occupancy[r] / static_cast<double>(count);
            worst = std::max(worst, std::abs(cdf - tables[k].cumulative[r + 1]));
        }
        if (worst > band) {
            std::ostringstream os;
            os << "marginal-mismatch: sampled CDF deviates by " << worst
               << " at grid time " << time_grid[k] << " (allowed " << band << ")";
            throw std::runtime_error(os.str());
        }
    }
    return ensemble;
}

namespace {

std::vector<std::uint8_t> membership(const TrajectoryEnsemble& e, const SSet& s) {
    std::size_t k = e.time_index(s.time);
    std::vector<std::uint8_t> in(e.count);
    for (std::size_t traj = 0; traj < e.count; ++traj)
        in[traj] = s.region.mask()[static_cast<std::size_t>(e.at(traj, k))];
    return in;
}

} // namespace

double empirical_frequency(const TrajectoryEnsemble& ensemble, const SSet& s) {
    auto in = membership(ensemble, s);
    long long hits = 0;
    for (auto b : in) hits += b;
    return static_cast<double>(hits) / static_cast<double>(ensemble.count);
}

double empirical_overlap(const TrajectoryEnsemble& ensemble, const SSet& s1, const SSet& s2) {
    auto in1 = membership(ensemble, s1);
    auto in2 = membership(ensemble, s2);
    long long h1 = 0, h2 = 0, joint = 0;
    for (std::size_t i = 0; i < ensemble.count; ++i) {
        h1 += in1[i];
        h2 += in2[i];
        joint += in1[i] & in2[i];
    }
    if (h1 + h2 == 0)
        throw std::invalid_argument("empirical_overlap: both events unobserved");
    return 2.0 * static_cast<double>(joint) / static_cast<double>(h1 + h2);
}

CompatibilityReport compatibility_check(const TrajectoryEnsemble& ensemble,
                                        const QuantumProcess& qp,
                                        const std::vector<std::pair<SSet, SSet>>& pairs,
                                        double eps, double slack) {
    CompatibilityReport report;
    report.eps = eps;
    report.slack = slack;
    SsetCache cache(qp);
    for (const auto& [s1, s2] : pairs) {
        ensemble.time_index(s1.time);  // reject off-grid pairs up front
        ensemble.time_index(s2.time);
        CompatibilityRow row;
        row.s1 = s1;
        row.s2 = s2;
        row.m_quantum = overlap_index(cache, s1, s2);
        row.freq_s1 = empirical_frequency(ensemble, s1);
        row.freq_s2 = empirical_frequency(ensemble, s2);
        auto in1 = membership(ensemble, s1);
        auto in2 = membership(ensemble, s2);
        long long joint = 0;
        for (std::size_t i = 0; i < ensemble.count; ++i) joint += in1[i] & in2[i];
        row.freq_joint = static_cast<double>(joint) / static_cast<double>(ensemble.count);
        double denom = row.freq_s1 + row.freq_s2;
        row.m_empirical = denom > 0.0 ? 2.0 * row.freq_joint / denom : 0.0;
        row.violation = row.m_quantum >= 1.0 - eps && row.m_empirical < 1.0 - slack;
        if (row.violation) ++report.violations;
        report.rows.push_back(std::move(row));
    }
    return report;
}

MajorityStatistic majority_statistic(const TrajectoryEnsemble& ensemble,
                                     const std::vector<SSet>& ssets, double delta) {
    if (ssets.empty())
        throw std::invalid_argument("majority_statistic: empty s-set list");
    std::vector<std::vector<std::uint8_t>> in;
    in.reserve(ssets.size());
    for (const auto& s : ssets) in.push_back(membership(ensemble, s));

    MajorityStatistic stat;
    stat.delta = delta;
    stat.y_values.resize(ensemble.count);
    double sum = 0.0;
    long long below = 0;
    for (std::size_t traj = 0; traj < ensemble.count; ++traj) {
        long long hits = 0;
        for (const auto& member : in) hits += member[traj];
        double y = static_cast<double>(hits) / static_cast<double>(ssets.size());
        stat.y_values[traj] = y;
        sum += y;
        if (y <= 1.0 - delta) ++below;
    }
    stat.mean_y = sum / static_cast<double>(ensemble.count);
    stat.prob_y_below = static_cast<double>(below) / static_cast<double>(ensemble.count);
    return stat;
}

double sup_expectation(double a, double p_a) {
    if (!(a >= 0.0 && a <= 1.0 && p_a >= 0.0 && p_a <= 1.0))
        throw std::invalid_argument("sup_expectation: arguments must lie in [0,1]");
    return 1.0 - p_a * (1.0 - a);
}

TransitionStatistic branch_transition_frequency(
    const TrajectoryEnsemble& ensemble, const std::vector<std::vector<Region>>& branch_maps) {
    if (branch_maps.empty())
        throw std::invalid_argument("branch_transition_frequency: no branches");
    if (branch_maps.size() > 64)
        throw std::invalid_argument("branch_transition_frequency: more than 64 branches");
    std::size_t t_count = ensemble.times.size();
    for (const auto& branch : branch_maps)
        if (branch.size() != t_count)
            throw std::invalid_argument(
                "branch_transition_frequency: branch maps must cover every grid time");

    // Bitmask of branches containing each (time, basis point). Branch regions
    // may coincide before a split, so membership is a set, not a label; a
    // step is a transition exactly when no single branch covers both ends.
    std::size_t n = branch_maps[0][0].space()->size();
    std::vector<std::vector<std::uint64_t>> member(t_count, std::vector<std::uint64_t>(n, 0));
    for (std::size_t k = 0; k < t_count; ++k)
        for (std::size_t b = 0; b < branch_maps.size(); ++b)
            for (std::size_t i = 0; i < n; ++i)
                if (branch_maps[b][k].mask()[i]) member[k][i] |= 1ull << b;

    TransitionStatistic stat;
    long long outside = 0;
    for (std::size_t traj = 0; traj < ensemble.count; ++traj) {
        for (std::size_t k = 0; k < t_count; ++k) {
            std::uint64_t here = member[k][static_cast<std::size_t>(ensemble.at(traj, k))];
            if (here == 0) ++outside;
            if (k == 0) continue;
            std::uint64_t prev =
                member[k - 1][static_cast<std::size_t>(ensemble.at(traj, k - 1))];
            if (here != 0 && prev != 0) {
                ++stat.opportunities;
                if ((here & prev) == 0) ++stat.transitions;
            }
        }
    }
    stat.transition_frequency =
        stat.opportunities > 0
            ? static_cast<double>(stat.transitions) / static_cast<double>(stat.opportunities)
            : 0.0;
    stat.outside_fraction = static_cast<double>(outside) /
                            static_cast<double>(ensemble.count * t_count);
    return stat;
}

std::string ensemble_to_csv(const TrajectoryEnsemble& ensemble) {
    std::ostringstream os;
    char buf[32];
    for (std::size_t k = 0; k < ensemble.times.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g", ensemble.times[k]);
        os << (k ? "," : "") << buf;
    }
    os << "\r\n";
    for (std::size_t traj = 0; traj < ensemble.count; ++traj) {
        for (std::size_t k = 0; k < ensemble.times.size(); ++k)
            os << (k ? "," : "") << ensemble.at(traj, k);
        os << "\r\n";
    }
    return os.str();
}

} // namespace qcp
