#include "qcp/cournot.hpp"

#include <cmath>
#include <stdexcept>

namespace qcp {

const WaveFunction& SsetCache::value(const SSet& s) {
    auto key = std::make_pair(s.time, s.region.mask_hash());
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    auto [pos, inserted] = memo_.emplace(key, sset_amplitude(*qp_, s));
    return pos->second;
}

namespace {

double overlap_of_values(const WaveFunction& v1, const WaveFunction& v2) {
    double n1 = v1.norm2();
    double n2 = v2.norm2();
    if (n1 <= 1e-14 && n2 <= 1e-14)
        throw std::invalid_argument("overlap_index: both-weights-vanish");
    double denom = n1 + n2;
    double m = 2.0 * inner(v1, v2).real() / denom;
    if (m > 0.999) {
        // Difference-norm identity; conditioned for the near-certainty regime.
        m = 1.0 - (v1.amplitudes - v2.amplitudes).squaredNorm() / denom;
    }
    return m;
}

} // namespace

double overlap_index(const QuantumProcess& qp, const SSet& s1, const SSet& s2) {
    return overlap_of_values(sset_amplitude(qp, s1), sset_amplitude(qp, s2));
}

double overlap_index(SsetCache& cache, const SSet& s1, const SSet& s2) {
    return overlap_of_values(cache.value(s1), cache.value(s2));
}

CournotVerdict cournot_verdict(double m_value, double threshold) {
    CournotVerdict v;
    v.m_value = m_value;
    v.threshold = threshold;
    v.holds = m_value >= 1.0 - threshold;
    return v;
}

ParticularCaseReport particular_case(const QuantumProcess& qp, const SSet& s,
                                     double threshold) {
    ParticularCaseReport report;
    report.weight = sset_weight(qp, s);
    report.m_vs_full = 2.0 * report.weight / (1.0 + report.weight);
    report.inequality_residual = std::max(0.0, report.weight - report.m_vs_full);
    if (report.inequality_residual > 1e-12)
        throw std::logic_error("particular_case: weight exceeds its overlap bound");
    // The verdict thresholds the weight itself; since w <= 2w/(1+w), certainty
    // in the weight implies certainty in the overlap against the full space.
    report.verdict = cournot_verdict(report.weight, threshold);
    return report;
}

ConsistencyProbeReport consistency_probe(const QuantumProcess& qp, const SSet& anchor,
                                         const std::vector<std::pair<SSet, SSet>>& candidates,
                                         double threshold) {
    ConsistencyProbeReport report;
    report.threshold = threshold;
    SsetCache cache(qp);
    for (const auto& [s1, s2] : candidates) {
        if (std::abs(s1.time - s2.time) > 1e-12)
            throw std::invalid_argument("consistency_probe: candidate pair times differ");
        if (!s1.region.disjoint_with(s2.region))
            throw std::invalid_argument("consistency_probe: candidate regions must be disjoint");
        ConsistencyProbeRow row;
        row.s1 = s1;
        row.s2 = s2;
        row.m_anchor_s1 = overlap_of_values(cache.value(anchor), cache.value(s1));
        row.m_anchor_s2 = overlap_of_values(cache.value(anchor), cache.value(s2));
        row.both_within_threshold = row.m_anchor_s1 >= 1.0 - threshold &&
                                    row.m_anchor_s2 >= 1.0 - threshold;
        if (row.both_within_threshold) {
            row.cross_real_overlap = inner(cache.value(s1), cache.value(s2)).real();
            row.violation = !(row.cross_real_overlap > 0.0);
        }
        if (row.violation) ++report.violations;
        report.rows.push_back(std::move(row));
    }
    return report;
}

double conditional_ratio(const QuantumProcess& qp, const SSet& s1, const SSet& s2) {
    WaveFunction v2 = sset_amplitude(qp, s2);
    double n2 = v2.norm2();
    if (n2 <= 1e-14)
        throw std::invalid_argument("conditional_ratio: division-by-vanishing-weight");
    return inner(sset_amplitude(qp, s1), v2).real() / n2;
}

double one_sided_residual(const QuantumProcess& qp, const SSet& s1, const SSet& s2) {
    WaveFunction target = project(qp.snapshot(s2.time), s2.region);
    double norm_target = std::sqrt(target.norm2());
    if (norm_target * norm_target <= 1e-14)
        throw std::invalid_argument("one_sided_residual: division-by-vanishing-weight");
    WaveFunction relayed = qp.propagator().advance(project(qp.snapshot(s1.time), s1.region),
                                                   s2.time);
    WaveFunction relayed_in_region = project(relayed, s2.region);
    return (target.amplitudes - relayed_in_region.amplitudes).norm() / norm_target;
}

} // namespace qcp
