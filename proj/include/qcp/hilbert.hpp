// Hilbert-space backends: wave functions over grid/mode spaces, norm-preserving
// propagators, projections, and Ehrenfest diagnostics.
//
// Conventions: hbar = 1; amplitudes are discretely normalized (sum |a_i|^2 = 1),
// with quadrature weights absorbed into the amplitudes. Grids are periodic; the
// split-operator propagator applies the kinetic factor in momentum space and
// the potential factor in position space (Strang order V/2, T, V/2).

#pragma once

#include "qcp/spaces.hpp"

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <memory>
#include <vector>

namespace qcp {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

struct WaveFunction {
    SpacePtr space;
    CVector amplitudes;
    double time = 0.0;

    double norm2() const { return amplitudes.squaredNorm(); }
    // Rescales to unit norm; throws on the zero vector.
    WaveFunction normalized() const;
};

// <a|b>, conjugate-linear in the first argument.
Complex inner(const WaveFunction& a, const WaveFunction& b);

// Zeroes amplitudes outside the region. The result is generally sub-normalized.
WaveFunction project(const WaveFunction& psi, const Region& region);

// Quadrature of |psi|^2 over the region mask.
double region_mass(const WaveFunction& psi, const Region& region);

// Per-axis expectation values on a grid.
RVector position_mean(const WaveFunction& psi);
RVector momentum_mean(const WaveFunction& psi);

// Potential sampled on the grid; f receives (x, y), with y = 0 on 1D grids.
RVector sample_potential(const GridSpace& grid,
                         const std::function<double(double, double)>& f);

// Normalized Gaussian packet at time 0 with <Q> = center, <P> = momentum and
// position standard deviation `width` per axis.
// Throws: packet-too-narrow (width under-resolved in position or momentum),
// packet-clipped (boundary tail mass above 1e-10).
WaveFunction gaussian_packet(const std::shared_ptr<const GridSpace>& grid,
                             const RVector& center, double width, const RVector& momentum);

// Norm-preserving time evolution. Three kinds: split-operator on a grid with a
// static potential, a piecewise schedule of potentials on a grid, and a
// schedule of dense unitaries applied per tick on a mode space.
class Propagator {
public:
    struct PotentialSegment {
        double until;       // applies while t < until; the last segment ignores it
        RVector potential;  // sampled on the grid
    };

    static Propagator split_operator(std::shared_ptr<const GridSpace> grid, double mass,
                                     RVector potential, double dt);
    static Propagator potential_schedule(std::shared_ptr<const GridSpace> grid, double mass,
                                         std::vector<PotentialSegment> segments, double dt);
    // step_unitaries[k] maps t = k*tick to (k+1)*tick; identity outside the list.
    // Each matrix must be unitary within 1e-12 (max norm of U^dag U - 1).
    static Propagator mode_schedule(std::shared_ptr<const ModeSpace> modes, double tick,
                                    std::vector<CMatrix> step_unitaries);
    // One constant dense unitary applied every tick.
    static Propagator mode_unitary(std::shared_ptr<const ModeSpace> modes, double tick,
                                   CMatrix unitary);
    // Factor-wise action on the product of two mode spaces: each tick applies
    // the left propagator on the left factor and the right one on the right
    // factor. No product matrices are materialized.
    static Propagator mode_product(const Propagator& left, const Propagator& right);

    const SpacePtr& space() const;
    double timestep() const;  // dt (grid) or tick (mode)
    bool on_grid() const;
    double mass() const;                          // grid kinds only
    const RVector& potential_at(double t) const;  // grid kinds only

    // Evolves to the target absolute time (forward or backward). The distance
    // must be an integer multiple of the timestep; throws
    // non-commensurate-duration otherwise.
    WaveFunction advance(const WaveFunction& psi, double target_time) const;

private:
    struct Impl;
    explicit Propagator(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

WaveFunction evolve(const WaveFunction& psi, const Propagator& prop, double duration);

// Residuals of the mean-value equations of motion, from centered differences
// over >= 3 uniformly spaced snapshots:
//   velocity residual  d<Q>/dt - <P>/m
//   force residual     d<P>/dt + <grad V>
struct EhrenfestReport {
    std::vector<double> times;                  // interior snapshot times
    std::vector<RVector> position_means;        // all snapshots
    std::vector<RVector> momentum_means;        // all snapshots
    std::vector<RVector> velocity_residuals;    // interior snapshots
    std::vector<RVector> force_residuals;       // interior snapshots
    double max_residual = 0.0;
    double tolerance = 0.0;
    bool within_tolerance = false;
};

EhrenfestReport ehrenfest_diagnostics(const std::vector<WaveFunction>& trajectory,
                                      const Propagator& prop, double tolerance = 1e-4);

// Dense discretization of the grid Hamiltonian (spectral kinetic + diagonal
// potential). Small-instance oracle for the split-operator backend.
CMatrix dense_grid_hamiltonian(const GridSpace& grid, double mass, const RVector& potential);

// exp(-i H tau) through the self-adjoint eigendecomposition of H.
CMatrix dense_evolution_operator(const CMatrix& hamiltonian, double tau);

// max |(U^dag U - 1)_ij|; construction-time unitarity checks use this.
double unitarity_defect(const CMatrix& u);

// FNV-1a hash of the amplitude bytes; used by reproducibility checks.
std::uint64_t amplitude_hash(const WaveFunction& psi);

} // namespace qcp
