// Finite probability spaces and the quantitative side of the frequency
// correspondence: the Chebyshev bound on frequency deviations, exact binomial
// frequency-event probabilities, event-overlap ratios, and product spaces.

#pragma once

#include "qcp/rng.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace qcp {

struct FiniteProbabilitySpace {
    std::vector<std::string> outcomes;
    std::vector<double> masses;  // nonnegative, summing to 1 within 1e-12

    FiniteProbabilitySpace(std::vector<std::string> outcomes, std::vector<double> masses);

    std::size_t size() const { return outcomes.size(); }
    std::size_t index_of(const std::string& outcome) const;
};

// Subset of outcomes, stored as an exact mask.
struct Event {
    std::vector<std::uint8_t> members;

    static Event of_indices(std::size_t space_size, const std::vector<std::size_t>& indices);
    static Event full(std::size_t space_size);
    Event complement() const;
    Event intersect(const Event& other) const;
};

double probability(const FiniteProbabilitySpace& p, const Event& a);

// p(1-p) / (eps^2 N): bound on the probability that the relative frequency of
// an event of probability p deviates from p by at least eps over N trials.
double chebyshev_frequency_bound(double p, double eps, long long n);

// Exact probability that |K/N - p| <= eps for K ~ Binomial(N, p), via
// log-space accumulation with compensated summation. Ties at the boundary are
// included. N is capped at 10^6 (overflow guard).
double frequency_event_probability(double p, double eps, long long n);

// 2 P(A and B) / (P(A) + P(B)).
double overlap_index(const FiniteProbabilitySpace& p, const Event& a, const Event& b);

// (P(A and B)/P(A), P(A and B)/P(B)).
std::pair<double, double> conditional_ratios(const FiniteProbabilitySpace& p, const Event& a,
                                             const Event& b);

// Outcome labels are joined as "a|b"; masses multiply; marginals recover the
// factors.
FiniteProbabilitySpace product_space(const FiniteProbabilitySpace& p1,
                                     const FiniteProbabilitySpace& p2);

// Relative frequencies of `trials` independent meta-trials, each of N
// Bernoulli(p) draws. Trial t draws from Rng::stream(seed, t).
std::vector<double> bernoulli_frequency_trials(double p, long long n, long long trials,
                                               std::uint64_t seed);

} // namespace qcp
