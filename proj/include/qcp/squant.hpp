// Single-time cylinder sets and quantum processes.
//
// A quantum process packages (space, propagator, initial state, time interval)
// and realizes the vector-valued set function on demand: the s-set (t, D) is
// assigned the state obtained by evolving the initial state to t, projecting
// onto D, and evolving back to the reference time 0. Values of the set
// function are always represented at time 0; inner products between them are
// taken there.

#pragma once

#include "qcp/hilbert.hpp"
#include "qcp/spaces.hpp"

#include <atomic>
#include <future>
#include <map>
#include <mutex>
#include <vector>

namespace qcp {

// Single-time cylinder set: all trajectories whose position at `time` lies in
// `region`.
struct SSet {
    double time = 0.0;
    Region region;
};

class QuantumProcess {
public:
    // initial_state must sit at time 0 with unit norm (within 1e-10), and the
    // interval must satisfy t_begin <= 0 <= t_end.
    QuantumProcess(Propagator propagator, WaveFunction initial_state, double t_begin,
                   double t_end);

    const SpacePtr& space() const { return initial_.space; }
    const Propagator& propagator() const { return propagator_; }
    const WaveFunction& initial_state() const { return initial_; }
    double t_begin() const { return t_begin_; }
    double t_end() const { return t_end_; }
    bool contains_time(double t) const { return t >= t_begin_ - 1e-12 && t <= t_end_ + 1e-12; }

    // Evolved state at time t, memoized. Thread-safe: concurrent readers,
    // single materialization per time point.
    WaveFunction snapshot(double t) const;
    long materialization_count() const;

private:
    struct Memo {
        std::mutex mutex;
        std::map<double, std::shared_future<WaveFunction>> entries;
        std::atomic<long> materializations{0};
    };

    Propagator propagator_;
    WaveFunction initial_;
    double t_begin_;
    double t_end_;
    mutable std::unique_ptr<Memo> memo_;
};

// Set-function value of the s-set: back-evolved projection, at time 0,
// generally sub-normalized. Throws time-outside-interval.
WaveFunction sset_amplitude(const QuantumProcess& qp, const SSet& s);

// Squared norm of the set-function value, computed as the |psi(t)|^2 mass in
// the region (norms are invariant under the back-evolution).
double sset_weight(const QuantumProcess& qp, const SSet& s);

// || value(t, X) - sum_k value(t, D_k) || for a partition {D_k} of the space.
// Exact mask additivity plus linear evolution keep this at rounding level.
// Throws not-a-partition if the regions overlap or fail to cover the space.
double sigma_additivity_residual(const QuantumProcess& qp, double t,
                                 const std::vector<Region>& partition);

// Tensor product of two mode-space processes over the same interval. The
// propagator acts factor-wise (no product matrices are materialized); product
// regions come from product_region. Grid processes are not instantiated as
// products; use the factorized weight product_weight instead.
QuantumProcess product_process(const QuantumProcess& a, const QuantumProcess& b,
                               std::size_t max_dimension = (1u << 16));

// Region D1 x D2 on the product of the two mode spaces.
Region product_region(const std::shared_ptr<const ModeSpace>& product_space,
                      const Region& r1, const Region& r2);

// Factorized weight of a product s-set (t, D1 x D2); the only product
// quantity offered for grid-space factors.
double product_weight(const QuantumProcess& a, const SSet& s1, const QuantumProcess& b,
                      const SSet& s2);

} // namespace qcp
