#include "qcp/squant.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qcp {

QuantumProcess::QuantumProcess(Propagator propagator, WaveFunction initial_state,
                               double t_begin, double t_end)
    : propagator_(std::move(propagator)),
      initial_(std::move(initial_state)),
      t_begin_(t_begin),
      t_end_(t_end),
      memo_(std::make_unique<Memo>()) {
    if (!same_space(initial_.space, propagator_.space()))
        throw std::invalid_argument("QuantumProcess: space-mismatch");
    if (std::abs(initial_.time) > 1e-12)
        throw std::invalid_argument("QuantumProcess: initial state must sit at time 0");
    if (std::abs(initial_.norm2() - 1.0) > 1e-10)
        throw std::invalid_argument("QuantumProcess: initial state must be normalized");
    if (!(t_begin_ <= 0.0 && 0.0 <= t_end_) || !(t_begin_ < t_end_))
        throw std::invalid_argument("QuantumProcess: interval must satisfy t_begin <= 0 <= t_end");
}

WaveFunction QuantumProcess::snapshot(double t) const {
    std::shared_future<WaveFunction> fut;
    bool owner = false;
    std::promise<WaveFunction> promise;
    {
        std::lock_guard<std::mutex> lock(memo_->mutex);
        auto it = memo_->entries.find(t);
        if (it == memo_->entries.end()) {
            fut = promise.get_future().share();
            memo_->entries.emplace(t, fut);
            owner = true;
        } else {
            fut = it->second;
        }
    }
    if (owner) {
        try {
            memo_->materializations.fetch_add(1);
            promise.set_value(propagator_.advance(initial_, t));
        } catch (...) {
            promise.set_exception(std::current_exception());
        }
    }
    return fut.get();
}

long QuantumProcess::materialization_count() const {
    return memo_->materializations.load();
}

namespace {

void check_time(const QuantumProcess& qp, double t) {
    if (!qp.contains_time(t)) {
        std::ostringstream os;
        os << "time-outside-interval: t = " << t << " not in [" << qp.t_begin() << ", "
           << qp.t_end() << "]";
        throw std::invalid_argument(os.str());
    }
}

} // namespace

WaveFunction sset_amplitude(const QuantumProcess& qp, const SSet& s) {
    check_time(qp, s.time);
    WaveFunction projected = project(qp.snapshot(s.time), s.region);
    return qp.propagator().advance(projected, 0.0);
}

double sset_weight(const QuantumProcess& qp, const SSet& s) {
    check_time(qp, s.time);
    return region_mass(qp.snapshot(s.time), s.region);
}

double sigma_additivity_residual(const QuantumProcess& qp, double t,
                                 const std::vector<Region>& partition) {
    if (partition.empty()) throw std::invalid_argument("not-a-partition: empty partition");
    Region covered = Region::empty(partition.front().space());
    for (const auto& cell : partition) {
        if (!covered.disjoint_with(cell))
            throw std::invalid_argument("not-a-partition: cells overlap");
        covered = covered.unite(cell);
    }
    if (!covered.same_as(Region::full(covered.space())))
        throw std::invalid_argument("not-a-partition: cells do not cover the space");

    WaveFunction whole = sset_amplitude(qp, SSet{t, Region::full(qp.space())});
    CVector summed = CVector::Zero(whole.amplitudes.size());
    for (const auto& cell : partition)
        summed += sset_amplitude(qp, SSet{t, cell}).amplitudes;
    return (whole.amplitudes - summed).norm();
}

QuantumProcess product_process(const QuantumProcess& a, const QuantumProcess& b,
                               std::size_t max_dimension) {
    if (a.propagator().on_grid() || b.propagator().on_grid())
        throw std::invalid_argument(
            "product_process: grid factors are kept symbolic; use product_weight");
    if (std::abs(a.t_begin() - b.t_begin()) > 1e-12 || std::abs(a.t_end() - b.t_end()) > 1e-12)
        throw std::invalid_argument("interval-mismatch: product factors must share the interval");

    std::size_t da = a.space()->size();
    std::size_t db = b.space()->size();
    if (db != 0 && da > max_dimension / db)
        throw std::invalid_argument("product-dimension-too-large");

    Propagator prop = Propagator::mode_product(a.propagator(), b.propagator());
    CVector amps(static_cast<Eigen::Index>(da * db));
    const CVector& va = a.initial_state().amplitudes;
    const CVector& vb = b.initial_state().amplitudes;
    for (std::size_t i = 0; i < da; ++i)
        for (std::size_t j = 0; j < db; ++j)
            amps[static_cast<Eigen::Index>(i * db + j)] =
                va[static_cast<Eigen::Index>(i)] * vb[static_cast<Eigen::Index>(j)];
    WaveFunction initial{prop.space(), std::move(amps), 0.0};
    return QuantumProcess(std::move(prop), std::move(initial), a.t_begin(), a.t_end());
}

Region product_region(const std::shared_ptr<const ModeSpace>& product_space,
                      const Region& r1, const Region& r2) {
    std::size_t d1 = r1.space()->size();
    std::size_t d2 = r2.space()->size();
    if (product_space->size() != d1 * d2)
        throw std::invalid_argument("product_region: dimension mismatch");
    std::vector<std::uint8_t> mask(d1 * d2, 0);
    for (std::size_t i = 0; i < d1; ++i)
        for (std::size_t j = 0; j < d2; ++j)
            mask[i * d2 + j] = r1.mask()[i] & r2.mask()[j];
    return Region(product_space, std::move(mask));
}

double product_weight(const QuantumProcess& a, const SSet& s1, const QuantumProcess& b,
                      const SSet& s2) {
    if (std::abs(s1.time - s2.time) > 1e-12)
        throw std::invalid_argument("product_weight: factors must share the time");
    return sset_weight(a, s1) * sset_weight(b, s2);
}

} // namespace qcp
