// The overlap functional between s-sets and the verdicts built on it.
//
// overlap_index(S1, S2) = 2 Re<v1|v2> / (||v1||^2 + ||v2||^2) where v_i is the
// set-function value of S_i. It is bounded by 1, symmetric, and equals 1
// exactly when the two values coincide; 1 - overlap equals
// ||v1 - v2||^2 / (||v1||^2 + ||v2||^2) identically, which is also the
// well-conditioned way to evaluate it near 1.

#pragma once

#include "qcp/squant.hpp"

#include <map>
#include <optional>
#include <vector>

namespace qcp {

// Default threshold for "overlap close to 1" verdicts. The closeness cutoff is
// deliberately a configuration value, never hard-coded certainty; raw overlap
// values are always reported alongside.
inline constexpr double kDefaultCournotThreshold = 1e-3;

struct CournotVerdict {
    double m_value = 0.0;
    double threshold = kDefaultCournotThreshold;
    bool holds = false;  // m_value >= 1 - threshold
    // The verdict reads in both directions: membership in either s-set carries
    // the other with empirical certainty.
    bool bidirectional = true;
};

// Memo for set-function values keyed by (time, region); the heavy scans reuse
// back-evolved states through this.
class SsetCache {
public:
    explicit SsetCache(const QuantumProcess& qp) : qp_(&qp) {}
    const QuantumProcess& process() const { return *qp_; }
    const WaveFunction& value(const SSet& s);

private:
    const QuantumProcess* qp_;
    std::map<std::pair<double, std::uint64_t>, WaveFunction> memo_;
};

// Throws both-weights-vanish when neither s-set carries weight above 1e-14.
double overlap_index(const QuantumProcess& qp, const SSet& s1, const SSet& s2);
double overlap_index(SsetCache& cache, const SSet& s1, const SSet& s2);

CournotVerdict cournot_verdict(double m_value, double threshold = kDefaultCournotThreshold);

// Specialization of the overlap verdict against the full trajectory space:
// reports w = weight(S), the overlap 2w/(1+w) against the whole space, and
// verifies w <= 2w/(1+w) within 1e-12.
struct ParticularCaseReport {
    double weight = 0.0;
    double m_vs_full = 0.0;
    double inequality_residual = 0.0;  // max(0, weight - m_vs_full)
    CournotVerdict verdict;
};

ParticularCaseReport particular_case(const QuantumProcess& qp, const SSet& s,
                                     double threshold = kDefaultCournotThreshold);

// Consistency probe: for candidate pairs (S1, S2) with equal times and
// disjoint regions, whenever both anchored overlaps reach 1 - threshold the
// set-function values of S1 and S2 must themselves overlap with positive real
// part. The contract is that no violation exists.
struct ConsistencyProbeRow {
    SSet s1;
    SSet s2;
    double m_anchor_s1 = 0.0;
    double m_anchor_s2 = 0.0;
    bool both_within_threshold = false;
    double cross_real_overlap = 0.0;  // Re<v(S1)|v(S2)>, evaluated when both hold
    bool violation = false;
};

struct ConsistencyProbeReport {
    double threshold = 0.0;
    std::vector<ConsistencyProbeRow> rows;
    std::size_t violations = 0;
};

ConsistencyProbeReport consistency_probe(const QuantumProcess& qp, const SSet& anchor,
                                         const std::vector<std::pair<SSet, SSet>>& candidates,
                                         double threshold = kDefaultCournotThreshold);

// Re<v(S1)|v(S2)> / ||v(S2)||^2: the one-sided, conditional-style ratio. A
// ratio near 1 does not certify joint membership; see one_sided_residual.
double conditional_ratio(const QuantumProcess& qp, const SSet& s1, const SSet& s2);

// || E2 psi(t2) - E2 U(t2 - t1) E1 psi(t1) || / || E2 psi(t2) ||: how well the
// S2 part of the wave is reconstructed from the S1 part relayed forward. A
// small residual forces conditional_ratio toward +-1, but several disjoint
// s-sets can achieve it simultaneously, which is why it cannot back a
// conditional certainty rule.
double one_sided_residual(const QuantumProcess& qp, const SSet& s1, const SSet& s2);

} // namespace qcp
