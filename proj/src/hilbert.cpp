#include "qcp/hilbert.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace qcp {

namespace {

constexpr double kPi = std::numbers::pi;

// FFTW plans are not thread-safe to create; execution on fresh arrays is.
// Plans are cached per grid shape and created with FFTW_UNALIGNED so that
// fftw_execute_dft may run on any buffer of the right size.
class GridFft {
public:
    static const GridFft& shared(int nx, int ny) {
        static std::mutex mu;
        static std::map<std::pair<int, int>, std::unique_ptr<GridFft>> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto& slot = cache[{nx, ny}];
        if (!slot) slot.reset(new GridFft(nx, ny));
        return *slot;
    }

    void forward(Complex* data) const {
        fftw_execute_dft(fwd_, reinterpret_cast<fftw_complex*>(data),
                         reinterpret_cast<fftw_complex*>(data));
    }
    void inverse(Complex* data) const {  // unnormalized
        fftw_execute_dft(inv_, reinterpret_cast<fftw_complex*>(data),
                         reinterpret_cast<fftw_complex*>(data));
    }

private:
    GridFft(int nx, int ny) {
        std::vector<Complex> buf(static_cast<std::size_t>(nx) * ny);
        auto* p = reinterpret_cast<fftw_complex*>(buf.data());
        unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        if (ny == 1) {
            fwd_ = fftw_plan_dft_1d(nx, p, p, FFTW_FORWARD, flags);
            inv_ = fftw_plan_dft_1d(nx, p, p, FFTW_BACKWARD, flags);
        } else {
            fwd_ = fftw_plan_dft_2d(nx, ny, p, p, FFTW_FORWARD, flags);
            inv_ = fftw_plan_dft_2d(nx, ny, p, p, FFTW_BACKWARD, flags);
        }
    }

    fftw_plan fwd_;
    fftw_plan inv_;
};

double wavenumber(int j, int n, double dx) {
    int f = j < n / 2 ? j : j - n;
    return 2.0 * kPi * f / (n * dx);
}

// |k|^2 at every flat grid index.
RVector k_squared(const GridSpace& grid) {
    RVector k2(grid.size());
    int nx = grid.points(0);
    double dx = grid.spacing(0);
    if (grid.dimension() == 1) {
        for (int j = 0; j < nx; ++j) {
            double k = wavenumber(j, nx, dx);
            k2[j] = k * k;
        }
    } else {
        int ny = grid.points(1);
        double dy = grid.spacing(1);
        for (int jx = 0; jx < nx; ++jx) {
            double kx = wavenumber(jx, nx, dx);
            for (int jy = 0; jy < ny; ++jy) {
                double ky = wavenumber(jy, ny, dy);
                k2[grid.flat_index(jx, jy)] = kx * kx + ky * ky;
            }
        }
    }
    return k2;
}

CVector phase_vector(const RVector& angles) {
    CVector out(angles.size());
    for (Eigen::Index i = 0; i < angles.size(); ++i)
        out[i] = std::polar(1.0, angles[i]);
    return out;
}

long long commensurate_steps(double duration, double step, const char* what) {
    double ratio = duration / step;
    long long n = std::llround(ratio);
    if (std::abs(duration - n * step) > 1e-9 * std::max(1.0, std::abs(duration))) {
        std::ostringstream os;
        os << "non-commensurate-duration: " << what << " " << duration
           << " is not an integer multiple of the timestep " << step;
        throw std::invalid_argument(os.str());
    }
    return n;
}

} // namespace

WaveFunction WaveFunction::normalized() const {
    double n = std::sqrt(norm2());
    if (n <= 0.0) throw std::runtime_error("WaveFunction: cannot normalize zero vector");
    return WaveFunction{space, amplitudes / n, time};
}

Complex inner(const WaveFunction& a, const WaveFunction& b) {
    if (!same_space(a.space, b.space))
        throw std::invalid_argument("inner: space-mismatch");
    return a.amplitudes.dot(b.amplitudes);
}

WaveFunction project(const WaveFunction& psi, const Region& region) {
    if (!same_space(psi.space, region.space()))
        throw std::invalid_argument("project: space-mismatch");
    CVector amps = psi.amplitudes;
    const auto& mask = region.mask();
    for (Eigen::Index i = 0; i < amps.size(); ++i)
        if (!mask[static_cast<std::size_t>(i)]) amps[i] = Complex(0.0, 0.0);
    return WaveFunction{psi.space, std::move(amps), psi.time};
}

double region_mass(const WaveFunction& psi, const Region& region) {
    if (!same_space(psi.space, region.space()))
        throw std::invalid_argument("region_mass: space-mismatch");
    const auto& mask = region.mask();
    double m = 0.0;
    for (Eigen::Index i = 0; i < psi.amplitudes.size(); ++i)
        if (mask[static_cast<std::size_t>(i)]) m += std::norm(psi.amplitudes[i]);
    return m;
}

RVector position_mean(const WaveFunction& psi) {
    auto grid = std::dynamic_pointer_cast<const GridSpace>(psi.space);
    if (!grid) throw std::invalid_argument("position_mean: grid spaces only");
    RVector mean = RVector::Zero(grid->dimension());
    double total = 0.0;
    for (Eigen::Index i = 0; i < psi.amplitudes.size(); ++i) {
        double w = std::norm(psi.amplitudes[i]);
        total += w;
        for (int a = 0; a < grid->dimension(); ++a)
            mean[a] += w * grid->coordinate(a, grid->axis_index(static_cast<std::size_t>(i), a));
    }
    return mean / total;
}

RVector momentum_mean(const WaveFunction& psi) {
    auto grid = std::dynamic_pointer_cast<const GridSpace>(psi.space);
    if (!grid) throw std::invalid_argument("momentum_mean: grid spaces only");
    int nx = grid->points(0);
    int ny = grid->dimension() == 2 ? grid->points(1) : 1;
    CVector spec = psi.amplitudes;
    GridFft::shared(nx, ny).forward(spec.data());
    RVector mean = RVector::Zero(grid->dimension());
    double total = 0.0;
    for (Eigen::Index i = 0; i < spec.size(); ++i) {
        double w = std::norm(spec[i]);
        total += w;
        for (int a = 0; a < grid->dimension(); ++a) {
            int j = grid->axis_index(static_cast<std::size_t>(i), a);
            mean[a] += w * wavenumber(j, grid->points(a), grid->spacing(a));
        }
    }
    return mean / total;
}

RVector sample_potential(const GridSpace& grid,
                         const std::function<double(double, double)>& f) {
    RVector v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double x = grid.coordinate(0, grid.axis_index(i, 0));
        double y = grid.dimension() == 2 ? grid.coordinate(1, grid.axis_index(i, 1)) : 0.0;
        v[static_cast<Eigen::Index>(i)] = f(x, y);
    }
    return v;
}

WaveFunction gaussian_packet(const std::shared_ptr<const GridSpace>& grid,
                             const RVector& center, double width, const RVector& momentum) {
    int dim = grid->dimension();
    if (center.size() != dim || momentum.size() != dim)
        throw std::invalid_argument("gaussian_packet: center/momentum dimension mismatch");
    for (int a = 0; a < dim; ++a) {
        double dx = grid->spacing(a);
        if (!(width > 2.0 * dx))
            throw std::invalid_argument("packet-too-narrow: width must exceed 2 grid spacings");
        double k_max = kPi / dx;
        if (k_max - std::abs(momentum[a]) < 4.0 / width)
            throw std::invalid_argument(
                "packet-too-narrow: momentum content too close to the grid Nyquist limit");
        double half = 0.5 * grid->extent(a);
        double tail = 0.5 * std::erfc((half + center[a]) / (width * std::sqrt(2.0))) +
                      0.5 * std::erfc((half - center[a]) / (width * std::sqrt(2.0)));
        if (tail > 1e-10)
            throw std::invalid_argument("packet-clipped: boundary tail mass above 1e-10");
    }

    CVector amps(grid->size());
    for (std::size_t i = 0; i < grid->size(); ++i) {
        double arg = 0.0, phase = 0.0;
        for (int a = 0; a < dim; ++a) {
            double x = grid->coordinate(a, grid->axis_index(i, a));
            double d = x - center[a];
            arg += d * d / (4.0 * width * width);
            phase += momentum[a] * x;
        }
        amps[static_cast<Eigen::Index>(i)] = std::exp(-arg) * std::polar(1.0, phase);
    }
    WaveFunction psi{grid, std::move(amps), 0.0};
    return psi.normalized();
}

// ---------------------------------------------------------------------------
// Propagator

struct Propagator::Impl {
    enum class Kind { SplitOperator, ModeSchedule, ModeProduct } kind;

    SpacePtr space;
    double step = 0.0;  // dt or tick

    // Grid kinds. Segment k applies while t < segments[k].until; phases are
    // the half-step potential factors exp(-i V dt / 2) for both directions.
    std::shared_ptr<const GridSpace> grid;
    double mass = 1.0;
    std::vector<PotentialSegment> segments;
    std::vector<CVector> pot_phase_fwd;
    std::vector<CVector> pot_phase_bwd;
    CVector kin_phase_fwd;  // includes the 1/N inverse-transform normalization
    CVector kin_phase_bwd;

    // Mode kind. If constant_unitary, step_unitaries[0] applies on every tick;
    // otherwise step_unitaries[k] applies on tick k and identity beyond.
    std::shared_ptr<const ModeSpace> modes;
    std::vector<CMatrix> step_unitaries;
    bool constant_unitary = false;

    // Product kind.
    std::shared_ptr<const Impl> left;
    std::shared_ptr<const Impl> right;

    void apply_mode_tick(CVector& amps, long long tick, bool forward) const {
        if (kind == Kind::ModeSchedule) {
            const CMatrix* u = nullptr;
            if (constant_unitary) {
                u = &step_unitaries[0];
            } else if (tick >= 0 && tick < static_cast<long long>(step_unitaries.size())) {
                u = &step_unitaries[static_cast<std::size_t>(tick)];
            }
            if (u) {
                if (forward)
                    amps = (*u) * amps;
                else
                    amps = u->adjoint() * amps;
            }
            return;
        }
        // Product: amplitudes index i = i_left * dim_right + i_right.
        auto dl = static_cast<Eigen::Index>(left->space->size());
        auto dr = static_cast<Eigen::Index>(right->space->size());
        CVector column(dl);
        for (Eigen::Index j = 0; j < dr; ++j) {
            for (Eigen::Index i = 0; i < dl; ++i) column[i] = amps[i * dr + j];
            left->apply_mode_tick(column, tick, forward);
            for (Eigen::Index i = 0; i < dl; ++i) amps[i * dr + j] = column[i];
        }
        CVector row(dr);
        for (Eigen::Index i = 0; i < dl; ++i) {
            row = amps.segment(i * dr, dr);
            right->apply_mode_tick(row, tick, forward);
            amps.segment(i * dr, dr) = row;
        }
    }

    std::size_t segment_index(double t) const {
        for (std::size_t s = 0; s + 1 < segments.size(); ++s)
            if (t < segments[s].until - 1e-12) return s;
        return segments.size() - 1;
    }

    void split_step(CVector& amps, double t_begin, bool forward) const {
        const auto& fft = GridFft::shared(grid->points(0),
                                          grid->dimension() == 2 ? grid->points(1) : 1);
        double mid = t_begin + (forward ? 0.5 : -0.5) * step;
        std::size_t s = segment_index(mid);
        const CVector& pot = forward ? pot_phase_fwd[s] : pot_phase_bwd[s];
        const CVector& kin = forward ? kin_phase_fwd : kin_phase_bwd;
        amps.array() *= pot.array();
        fft.forward(amps.data());
        amps.array() *= kin.array();
        fft.inverse(amps.data());
        amps.array() *= pot.array();
    }
};

Propagator Propagator::split_operator(std::shared_ptr<const GridSpace> grid, double mass,
                                      RVector potential, double dt) {
    std::vector<PotentialSegment> segs;
    segs.push_back({0.0, std::move(potential)});
    return potential_schedule(std::move(grid), mass, std::move(segs), dt);
}

Propagator Propagator::potential_schedule(std::shared_ptr<const GridSpace> grid, double mass,
                                          std::vector<PotentialSegment> segments, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("Propagator: dt must be positive");
    if (!(mass > 0.0)) throw std::invalid_argument("Propagator: mass must be positive");
    if (segments.empty()) throw std::invalid_argument("Propagator: empty potential schedule");
    for (auto& seg : segments) {
        if (seg.potential.size() != static_cast<Eigen::Index>(grid->size()))
            throw std::invalid_argument("Propagator: potential length does not match grid");
    }
    for (std::size_t s = 0; s + 1 < segments.size(); ++s) {
        if (s > 0 && !(segments[s].until > segments[s - 1].until))
            throw std::invalid_argument("Propagator: schedule boundaries must increase");
        commensurate_steps(segments[s].until, dt, "schedule boundary");
    }

    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::SplitOperator;
    impl->space = grid;
    impl->grid = grid;
    impl->mass = mass;
    impl->step = dt;
    impl->segments = std::move(segments);

    RVector k2 = k_squared(*grid);
    double inv_n = 1.0 / static_cast<double>(grid->size());
    impl->kin_phase_fwd = phase_vector(-0.5 * dt / mass * k2) * inv_n;
    impl->kin_phase_bwd = phase_vector(0.5 * dt / mass * k2) * inv_n;
    for (const auto& seg : impl->segments) {
        impl->pot_phase_fwd.push_back(phase_vector(-0.5 * dt * seg.potential));
        impl->pot_phase_bwd.push_back(phase_vector(0.5 * dt * seg.potential));
    }
    return Propagator(std::move(impl));
}

Propagator Propagator::mode_schedule(std::shared_ptr<const ModeSpace> modes, double tick,
                                     std::vector<CMatrix> step_unitaries) {
    if (!(tick > 0.0)) throw std::invalid_argument("Propagator: tick must be positive");
    auto n = static_cast<Eigen::Index>(modes->size());
    for (const auto& u : step_unitaries) {
        if (u.rows() != n || u.cols() != n)
            throw std::invalid_argument("Propagator: unitary dimension does not match space");
        if (unitarity_defect(u) > 1e-12)
            throw std::invalid_argument("Propagator: matrix is not unitary within 1e-12");
    }
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::ModeSchedule;
    impl->space = modes;
    impl->modes = std::move(modes);
    impl->step = tick;
    impl->step_unitaries = std::move(step_unitaries);
    return Propagator(std::move(impl));
}

Propagator Propagator::mode_unitary(std::shared_ptr<const ModeSpace> modes, double tick,
                                    CMatrix unitary) {
    std::vector<CMatrix> steps;
    steps.push_back(std::move(unitary));
    auto prop = mode_schedule(std::move(modes), tick, std::move(steps));
    auto impl = std::make_shared<Impl>(*prop.impl_);
    impl->constant_unitary = true;
    return Propagator(std::move(impl));
}

Propagator Propagator::mode_product(const Propagator& left, const Propagator& right) {
    if (left.on_grid() || right.on_grid())
        throw std::invalid_argument("Propagator: mode_product requires mode propagators");
    if (std::abs(left.timestep() - right.timestep()) > 1e-12)
        throw std::invalid_argument("Propagator: mode_product requires equal ticks");
    auto lm = std::dynamic_pointer_cast<const ModeSpace>(left.space());
    auto rm = std::dynamic_pointer_cast<const ModeSpace>(right.space());
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::ModeProduct;
    impl->space = ModeSpace::product(*lm, *rm);
    impl->step = left.timestep();
    impl->left = left.impl_;
    impl->right = right.impl_;
    return Propagator(std::move(impl));
}

const SpacePtr& Propagator::space() const { return impl_->space; }
double Propagator::timestep() const { return impl_->step; }
bool Propagator::on_grid() const { return impl_->kind == Impl::Kind::SplitOperator; }

double Propagator::mass() const {
    if (!on_grid()) throw std::invalid_argument("Propagator: mass is a grid parameter");
    return impl_->mass;
}

const RVector& Propagator::potential_at(double t) const {
    if (!on_grid()) throw std::invalid_argument("Propagator: potential is a grid parameter");
    return impl_->segments[impl_->segment_index(t)].potential;
}

WaveFunction Propagator::advance(const WaveFunction& psi, double target_time) const {
    if (!same_space(psi.space, impl_->space))
        throw std::invalid_argument("Propagator: space-mismatch");
    double duration = target_time - psi.time;
    long long n = commensurate_steps(duration, impl_->step, "duration");
    if (n == 0) return WaveFunction{psi.space, psi.amplitudes, target_time};

    CVector amps = psi.amplitudes;
    bool forward = n > 0;
    long long count = forward ? n : -n;
    if (impl_->kind == Impl::Kind::SplitOperator) {
        for (long long i = 0; i < count; ++i) {
            double t = psi.time + (forward ? i : -i) * impl_->step;
            impl_->split_step(amps, t, forward);
        }
    } else {
        long long start = std::llround(psi.time / impl_->step);
        if (std::abs(psi.time - start * impl_->step) >
            1e-9 * std::max(1.0, std::abs(psi.time)))
            throw std::invalid_argument(
                "non-commensurate-duration: mode states must sit on the tick grid");
        for (long long i = 0; i < count; ++i) {
            long long tick = forward ? start + i : start - i - 1;
            impl_->apply_mode_tick(amps, tick, forward);
        }
    }
    return WaveFunction{psi.space, std::move(amps), target_time};
}

WaveFunction evolve(const WaveFunction& psi, const Propagator& prop, double duration) {
    return prop.advance(psi, psi.time + duration);
}

EhrenfestReport ehrenfest_diagnostics(const std::vector<WaveFunction>& trajectory,
                                      const Propagator& prop, double tolerance) {
    if (trajectory.size() < 3)
        throw std::invalid_argument("too-few-snapshots: need at least 3 snapshots");
    if (!prop.on_grid())
        throw std::invalid_argument("ehrenfest_diagnostics: grid propagators only");
    auto grid = std::dynamic_pointer_cast<const GridSpace>(prop.space());
    double dt = trajectory[1].time - trajectory[0].time;
    for (std::size_t i = 1; i < trajectory.size(); ++i) {
        double step = trajectory[i].time - trajectory[i - 1].time;
        if (std::abs(step - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
            throw std::invalid_argument("ehrenfest_diagnostics: snapshots must be uniform");
    }

    EhrenfestReport report;
    report.tolerance = tolerance;
    for (const auto& psi : trajectory) {
        report.position_means.push_back(position_mean(psi));
        report.momentum_means.push_back(momentum_mean(psi));
    }

    int dim = grid->dimension();
    for (std::size_t i = 1; i + 1 < trajectory.size(); ++i) {
        const WaveFunction& psi = trajectory[i];
        const RVector& v = prop.potential_at(psi.time);
        // <grad V> with periodic centered differences per axis.
        RVector grad_mean = RVector::Zero(dim);
        double total = 0.0;
        for (Eigen::Index f = 0; f < psi.amplitudes.size(); ++f) {
            double w = std::norm(psi.amplitudes[f]);
            total += w;
            auto idx = static_cast<std::size_t>(f);
            for (int a = 0; a < dim; ++a) {
                int n = grid->points(a);
                int j = grid->axis_index(idx, a);
                int jp = (j + 1) % n, jm = (j + n - 1) % n;
                std::size_t fp, fm;
                if (dim == 1) {
                    fp = static_cast<std::size_t>(jp);
                    fm = static_cast<std::size_t>(jm);
                } else {
                    int other = grid->axis_index(idx, 1 - a);
                    fp = a == 0 ? grid->flat_index(jp, other) : grid->flat_index(other, jp);
                    fm = a == 0 ? grid->flat_index(jm, other) : grid->flat_index(other, jm);
                }
                grad_mean[a] += w *
                    (v[static_cast<Eigen::Index>(fp)] - v[static_cast<Eigen::Index>(fm)]) /
                    (2.0 * grid->spacing(a));
            }
        }
        grad_mean /= total;

        RVector dq = (report.position_means[i + 1] - report.position_means[i - 1]) / (2.0 * dt);
        RVector dp = (report.momentum_means[i + 1] - report.momentum_means[i - 1]) / (2.0 * dt);
        RVector r1 = dq - report.momentum_means[i] / prop.mass();
        RVector r2 = dp + grad_mean;
        report.times.push_back(psi.time);
        report.velocity_residuals.push_back(r1);
        report.force_residuals.push_back(r2);
        report.max_residual = std::max({report.max_residual, r1.cwiseAbs().maxCoeff(),
                                        r2.cwiseAbs().maxCoeff()});
    }
    report.within_tolerance = report.max_residual <= tolerance;
    return report;
}

CMatrix dense_grid_hamiltonian(const GridSpace& grid, double mass, const RVector& potential) {
    auto n = static_cast<Eigen::Index>(grid.size());
    if (n > 256)
        throw std::invalid_argument("dense_grid_hamiltonian: small-instance oracle only");
    if (potential.size() != n)
        throw std::invalid_argument("dense_grid_hamiltonian: potential length mismatch");

    // Per-axis DFT matrices, combined row-major (x outermost) to match the
    // flat index layout; kinetic term is F^dag diag(|k|^2/2m) F.
    CMatrix dft = CMatrix::Zero(n, n);
    int nx = grid.points(0), ny = grid.dimension() == 2 ? grid.points(1) : 1;
    double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
        int kx = grid.axis_index(static_cast<std::size_t>(r), 0);
        int ky = grid.dimension() == 2 ? grid.axis_index(static_cast<std::size_t>(r), 1) : 0;
        for (Eigen::Index c = 0; c < n; ++c) {
            int jx = grid.axis_index(static_cast<std::size_t>(c), 0);
            int jy = grid.dimension() == 2 ? grid.axis_index(static_cast<std::size_t>(c), 1) : 0;
            double angle = -2.0 * kPi * (static_cast<double>(kx) * jx / nx +
                                         static_cast<double>(ky) * jy / ny);
            dft(r, c) = std::polar(inv_sqrt_n, angle);
        }
    }
    RVector k2 = k_squared(grid);
    CMatrix h = dft.adjoint() * (k2 / (2.0 * mass)).asDiagonal() * dft;
    h += potential.cast<Complex>().asDiagonal();
    // Symmetrize away the rounding skew so the eigensolver sees an exactly
    // self-adjoint matrix.
    return 0.5 * (h + CMatrix(h.adjoint()));
}

CMatrix dense_evolution_operator(const CMatrix& hamiltonian, double tau) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hamiltonian);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("dense_evolution_operator: eigendecomposition failed");
    CVector phases(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < phases.size(); ++i)
        phases[i] = std::polar(1.0, -es.eigenvalues()[i] * tau);
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

double unitarity_defect(const CMatrix& u) {
    CMatrix d = u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols());
    return d.cwiseAbs().maxCoeff();
}

std::uint64_t amplitude_hash(const WaveFunction& psi) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix_bytes = [&h](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ull;
        }
    };
    mix_bytes(psi.amplitudes.data(), sizeof(Complex) * psi.amplitudes.size());
    return h;
}

} // namespace qcp
