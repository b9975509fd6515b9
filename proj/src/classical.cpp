#include "qcp/classical.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qcp {

FiniteProbabilitySpace::FiniteProbabilitySpace(std::vector<std::string> outcomes_in,
                                               std::vector<double> masses_in)
    : outcomes(std::move(outcomes_in)), masses(std::move(masses_in)) {
    if (outcomes.empty() || outcomes.size() != masses.size())
        throw std::invalid_argument("FiniteProbabilitySpace: outcomes/masses mismatch");
    double total = 0.0;
    for (double m : masses) {
        if (m < 0.0)
            throw std::invalid_argument("FiniteProbabilitySpace: negative mass");
        total += m;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("FiniteProbabilitySpace: masses must sum to 1");
}

std::size_t FiniteProbabilitySpace::index_of(const std::string& outcome) const {
    auto it = std::find(outcomes.begin(), outcomes.end(), outcome);
    if (it == outcomes.end())
        throw std::invalid_argument("FiniteProbabilitySpace: unknown outcome '" + outcome + "'");
    return static_cast<std::size_t>(it - outcomes.begin());
}

Event Event::of_indices(std::size_t space_size, const std::vector<std::size_t>& indices) {
    Event e;
    e.members.assign(space_size, 0);
    for (std::size_t i : indices) {
        if (i >= space_size) throw std::invalid_argument("Event: index out of range");
        e.members[i] = 1;
    }
    return e;
}

Event Event::full(std::size_t space_size) {
    Event e;
    e.members.assign(space_size, 1);
    return e;
}

Event Event::complement() const {
    Event e;
    e.members.resize(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) e.members[i] = members[i] ? 0 : 1;
    return e;
}

Event Event::intersect(const Event& other) const {
    if (members.size() != other.members.size())
        throw std::invalid_argument("Event: size mismatch");
    Event e;
    e.members.resize(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) e.members[i] = members[i] & other.members[i];
    return e;
}

double probability(const FiniteProbabilitySpace& p, const Event& a) {
    if (a.members.size() != p.size()) throw std::invalid_argument("Event: size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (a.members[i]) total += p.masses[i];
    return total;
}

double chebyshev_frequency_bound(double p, double eps, long long n) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("chebyshev: p must lie in (0,1)");
    if (!(eps > 0.0)) throw std::invalid_argument("chebyshev: eps must be positive");
    if (n < 1) throw std::invalid_argument("chebyshev: n must be >= 1");
    return p * (1.0 - p) / (eps * eps * static_cast<double>(n));
}

double frequency_event_probability(double p, double eps, long long n) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("frequency_event_probability: p must lie in (0,1)");
    if (!(eps > 0.0))
        throw std::invalid_argument("frequency_event_probability: eps must be positive");
    if (n < 1 || n > 1000000)
        throw std::invalid_argument("frequency_event_probability: overflow-guard breach (N limit)");

    // Count k with |k/N - p| <= eps; the guard keeps boundary counts included
    // despite rounding (the k-lattice spacing 1/N is far coarser than 1e-12).
    auto inside = [&](long long k) {
        return std::abs(static_cast<double>(k) / static_cast<double>(n) - p) <= eps + 1e-12;
    };
    long long k_lo = std::max<long long>(0, static_cast<long long>(std::floor((p - eps) * n)) - 1);
    while (k_lo <= n && !inside(k_lo)) ++k_lo;
    long long k_hi = std::min<long long>(n, static_cast<long long>(std::ceil((p + eps) * n)) + 1);
    while (k_hi >= 0 && !inside(k_hi)) --k_hi;
    if (k_lo > k_hi) return 0.0;

    double log_p = std::log(p);
    double log_q = std::log1p(-p);
    auto log_term = [&](long long k) {
        return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
               k * log_p + (n - k) * log_q;
    };
    // Peak of the summand sits at the mode; normalize by it before summing.
    long long k_mode = std::clamp(static_cast<long long>(std::llround(p * n)), k_lo, k_hi);
    double log_max = log_term(k_mode);
    double sum = 0.0, comp = 0.0;  // Kahan
    for (long long k = k_lo; k <= k_hi; ++k) {
        double term = std::exp(log_term(k) - log_max);
        double y = term - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return std::min(1.0, std::exp(log_max) * sum);
}

double overlap_index(const FiniteProbabilitySpace& p, const Event& a, const Event& b) {
    double pa = probability(p, a);
    double pb = probability(p, b);
    if (pa + pb <= 0.0)
        throw std::invalid_argument("overlap_index: both events carry zero mass");
    return 2.0 * probability(p, a.intersect(b)) / (pa + pb);
}

std::pair<double, double> conditional_ratios(const FiniteProbabilitySpace& p, const Event& a,
                                             const Event& b) {
    double pa = probability(p, a);
    double pb = probability(p, b);
    if (pa <= 0.0 || pb <= 0.0)
        throw std::invalid_argument("conditional_ratios: division-by-zero event");
    double pab = probability(p, a.intersect(b));
    return {pab / pa, pab / pb};
}

FiniteProbabilitySpace product_space(const FiniteProbabilitySpace& p1,
                                     const FiniteProbabilitySpace& p2) {
    std::vector<std::string> outcomes;
    std::vector<double> masses;
    outcomes.reserve(p1.size() * p2.size());
    masses.reserve(p1.size() * p2.size());
    for (std::size_t i = 0; i < p1.size(); ++i)
        for (std::size_t j = 0; j < p2.size(); ++j) {
            outcomes.push_back(p1.outcomes[i] + "|" + p2.outcomes[j]);
            masses.push_back(p1.masses[i] * p2.masses[j]);
        }
    // Rounding in the pairwise products can push the total a hair off 1;
    // rescale so the invariant stays exact to the constructor's tolerance.
    double total = 0.0;
    for (double m : masses) total += m;
    for (double& m : masses) m /= total;
    return FiniteProbabilitySpace(std::move(outcomes), std::move(masses));
}

std::vector<double> bernoulli_frequency_trials(double p, long long n, long long trials,
                                               std::uint64_t seed) {
    std::vector<double> freqs;
    freqs.reserve(static_cast<std::size_t>(trials));
    for (long long t = 0; t < trials; ++t) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(t));
        long long hits = 0;
        for (long long i = 0; i < n; ++i) hits += rng.next_bernoulli(p) ? 1 : 0;
        freqs.push_back(static_cast<double>(hits) / static_cast<double>(n));
    }
    return freqs;
}

} // namespace qcp
