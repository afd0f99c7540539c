#include "fockscope/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "fockscope/error.hpp"

namespace fockscope {

namespace {

constexpr Complex kI(0.0, 1.0);

// phi1(z) = (e^z - 1)/z for purely imaginary z = -i x.
Complex phi1_imag(double x) {
    if (std::abs(x) < 1e-5) {
        const Complex z(0.0, -x);
        return 1.0 + z / 2.0 + z * z / 6.0;
    }
    const Complex z(0.0, -x);
    return (std::exp(z) - 1.0) / z;
}

struct TridiagonalExp {
    Eigen::VectorXd theta;
    Eigen::MatrixXd q;

    TridiagonalExp(const std::vector<double>& alpha, const std::vector<double>& beta, int size) {
        Eigen::VectorXd d(size);
        Eigen::VectorXd e(std::max(size - 1, 0));
        for (int k = 0; k < size; ++k) d[k] = alpha[static_cast<std::size_t>(k)];
        for (int k = 0; k + 1 < size; ++k) e[k] = beta[static_cast<std::size_t>(k)];
        if (size == 1) {
            theta = d;
            q = Eigen::MatrixXd::Identity(1, 1);
            return;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
        eig.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
        theta = eig.eigenvalues();
        q = eig.eigenvectors();
    }

    // exp(-i tau T) e1
    Eigen::VectorXcd apply(double tau) const {
        Eigen::VectorXcd c = Eigen::VectorXcd::Zero(theta.size());
        for (Eigen::Index k = 0; k < theta.size(); ++k) {
            const Complex w = std::exp(-kI * tau * theta[k]) * q(0, k);
            c += w * q.col(k).cast<Complex>();
        }
        return c;
    }

    // |tau * [phi1(-i tau T) e1]_last|, the coefficient of the residual vector.
    double residual_weight(double tau) const {
        const Eigen::Index last = theta.size() - 1;
        Complex s = 0.0;
        for (Eigen::Index k = 0; k < theta.size(); ++k) s += q(last, k) * phi1_imag(tau * theta[k]) * q(0, k);
        return std::abs(tau * s);
    }
};

void require_same_sector(const SparseHamiltonian& H, const StateVector& psi) {
    if (H.basis().length() != psi.length() || H.basis().sector() != psi.sector()) {
        throw DimensionError("state and Hamiltonian live in different sectors");
    }
}

std::uint64_t insert_zero_bit(std::uint64_t x, int position) {
    const std::uint64_t low = x & ((std::uint64_t{1} << position) - 1);
    return ((x >> position) << (position + 1)) | low;
}

bool is_diagonal(const Eigen::Matrix2cd& m) { return m(0, 1) == Complex(0.0) && m(1, 0) == Complex(0.0); }

} // namespace

void KrylovConfig::validate() const {
    if (subspace_dim < 2) throw InvalidParameterError("krylov subspace dimension must be >= 2");
    if (!(tolerance > 0.0)) throw InvalidParameterError("krylov tolerance must be positive");
    if (!(step_dt > 0.0)) throw InvalidParameterError("krylov step_dt must be positive");
    if (max_restarts < 0) throw InvalidParameterError("max_restarts must be non-negative");
}

KrylovPropagator::KrylovPropagator(const SparseHamiltonian& H, KrylovConfig cfg) : H_(H), cfg_(cfg) {
    cfg_.validate();
    if (!H.hermitian()) throw InvalidParameterError("Lanczos propagation needs a Hermitian H");
}

void KrylovPropagator::advance(ComplexVector& v, double dt) {
    if (dt < 0.0) throw InvalidParameterError("negative time step");
    if (static_cast<std::size_t>(v.size()) != H_.dimension()) throw DimensionError("state dimension mismatch");
    const Eigen::Index n = v.size();
    const int m_max = static_cast<int>(std::min<Eigen::Index>(cfg_.subspace_dim, n));
    if (basis_.rows() != n || basis_.cols() < m_max) basis_.resize(n, m_max);

    double remaining = dt;
    while (remaining > 0.0) {
        double tau = std::min(remaining, cfg_.step_dt);
        const double beta = v.norm();
        if (beta == 0.0) return;

        std::vector<double> alpha;
        std::vector<double> offdiag;
        basis_.col(0) = v / beta;
        int used = 0;
        bool invariant = false;
        double residual = 0.0;
        for (int j = 0; j < m_max; ++j) {
            H_.apply(basis_.col(j), work_);
            ++stats_.matvecs;
            const double a = basis_.col(j).dot(work_).real();
            work_ -= a * basis_.col(j);
            if (j > 0) work_ -= offdiag.back() * basis_.col(j - 1);
            for (int pass = 0; pass < 2; ++pass) {
                const Eigen::VectorXcd overlap = basis_.leftCols(j + 1).adjoint() * work_;
                work_.noalias() -= basis_.leftCols(j + 1) * overlap;
            }
            alpha.push_back(a);
            used = j + 1;
            residual = work_.norm();
            if (residual <= 1e-13 * (std::abs(a) + (offdiag.empty() ? 0.0 : offdiag.back()) + 1.0)) {
                invariant = true;
                break;
            }
            if (j + 1 == m_max) break;
            if (used >= std::max(4, last_used_ - 1)) {
                TridiagonalExp t(alpha, offdiag, used);
                if (beta * residual * t.residual_weight(tau) <= cfg_.tolerance) break;
            }
            offdiag.push_back(residual);
            basis_.col(j + 1) = work_ / residual;
        }

        TridiagonalExp t(alpha, offdiag, used);
        if (!invariant) {
            int halvings = 0;
            while (beta * residual * t.residual_weight(tau) > cfg_.tolerance) {
                tau *= 0.5;
                ++stats_.restarts;
                if (++halvings > cfg_.max_restarts) {
                    throw KrylovError("Krylov step could not meet tolerance after " +
                                      std::to_string(cfg_.max_restarts) + " step halvings");
                }
            }
        }
        last_used_ = used;
        const Eigen::VectorXcd coeff = beta * t.apply(tau);
        v.noalias() = basis_.leftCols(used) * coeff;
        ++stats_.substeps;
        remaining -= tau;
        if (remaining <= 1e-14 * dt) remaining = 0.0;
    }
}

std::vector<StateVector> krylov_evolve(const SparseHamiltonian& H, const StateVector& psi,
                                       std::span<const double> t_grid, const KrylovConfig& cfg) {
    require_same_sector(H, psi);
    KrylovPropagator prop(H, cfg);
    std::vector<StateVector> out;
    out.reserve(t_grid.size());
    ComplexVector v = psi.amplitudes();
    double now = 0.0;
    for (double t : t_grid) {
        if (t < now) throw InvalidParameterError("time grid must be non-negative and increasing");
        prop.advance(v, t - now);
        now = t;
        out.emplace_back(psi.basis_ptr(), v);
    }
    return out;
}

DensePropagator::DensePropagator(const SparseHamiltonian& H) {
    if (H.dimension() > kDenseEvolveCap) {
        throw CapacityError("dense evolution limited to dimension " + std::to_string(kDenseEvolveCap));
    }
    real_ = std::all_of(H.entries().begin(), H.entries().end(), [](const Triplet& t) { return t.value.imag() == 0.0; });
    if (real_) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H.dense().real());
        energies_ = eig.eigenvalues();
        real_vectors_ = eig.eigenvectors();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(H.dense());
        energies_ = eig.eigenvalues();
        vectors_ = eig.eigenvectors();
    }
}

ComplexVector DensePropagator::evolve(const ComplexVector& v, double t) const {
    if (t == 0.0) return v;
    if (static_cast<Eigen::Index>(energies_.size()) != v.size()) throw DimensionError("state dimension mismatch");
    if (real_) {
        const Eigen::VectorXd re = real_vectors_.transpose() * v.real();
        const Eigen::VectorXd im = real_vectors_.transpose() * v.imag();
        Eigen::VectorXd cr(re.size()), ci(re.size());
        for (Eigen::Index k = 0; k < re.size(); ++k) {
            const Complex c = Complex(re[k], im[k]) * std::exp(-kI * energies_[k] * t);
            cr[k] = c.real();
            ci[k] = c.imag();
        }
        ComplexVector out(v.size());
        out.real() = real_vectors_ * cr;
        out.imag() = real_vectors_ * ci;
        return out;
    }
    ComplexVector c = vectors_.adjoint() * v;
    for (Eigen::Index k = 0; k < c.size(); ++k) c[k] *= std::exp(-kI * energies_[k] * t);
    return vectors_ * c;
}

StateVector dense_evolve(const SparseHamiltonian& H, const StateVector& psi, double t) {
    require_same_sector(H, psi);
    DensePropagator prop(H);
    return {psi.basis_ptr(), prop.evolve(psi.amplitudes(), t)};
}

FloquetPropagator::FloquetPropagator(const FloquetCircuit& circuit) : circuit_(circuit) {
    const bool all_diagonal = std::all_of(circuit.single_qubit_layer.begin(), circuit.single_qubit_layer.end(),
                                          [](const Eigen::Matrix2cd& m) { return is_diagonal(m); });
    if (!all_diagonal) return;
    const int L = circuit.L;
    const std::size_t dim = std::size_t{1} << L;
    diagonal_.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        Complex phase = 1.0;
        for (int site = 0; site < L; ++site) {
            const int b = static_cast<int>((i >> (L - 1 - site)) & 1U);
            phase *= circuit.single_qubit_layer[static_cast<std::size_t>(site)](b, b);
        }
        diagonal_[static_cast<Eigen::Index>(i)] = phase;
    }
}

void FloquetPropagator::period(ComplexVector& v) const {
    const int L = circuit_.L;
    const std::uint64_t dim = std::uint64_t{1} << L;
    if (static_cast<std::uint64_t>(v.size()) != dim) throw DimensionError("floquet evolution needs a full-space state");

    if (diagonal_.size() > 0) {
        v.array() *= diagonal_.array();
    } else {
        for (int site = 0; site < L; ++site) {
            const auto& g = circuit_.single_qubit_layer[static_cast<std::size_t>(site)];
            const int pos = L - 1 - site;
            const std::uint64_t m = std::uint64_t{1} << pos;
            for (std::uint64_t k = 0; k < dim / 2; ++k) {
                const std::uint64_t i0 = insert_zero_bit(k, pos);
                const Complex a0 = v[static_cast<Eigen::Index>(i0)];
                const Complex a1 = v[static_cast<Eigen::Index>(i0 | m)];
                v[static_cast<Eigen::Index>(i0)] = g(0, 0) * a0 + g(0, 1) * a1;
                v[static_cast<Eigen::Index>(i0 | m)] = g(1, 0) * a0 + g(1, 1) * a1;
            }
        }
    }

    for (const auto& bg : circuit_.bond_gates) {
        const int hi = L - 1 - bg.bond;
        const int lo = hi - 1;
        const std::uint64_t mh = std::uint64_t{1} << hi;
        const std::uint64_t ml = std::uint64_t{1} << lo;
        const auto& g = bg.gate;
        for (std::uint64_t k = 0; k < dim / 4; ++k) {
            const std::uint64_t i0 = insert_zero_bit(insert_zero_bit(k, lo), hi);
            const Eigen::Index idx[4] = {static_cast<Eigen::Index>(i0), static_cast<Eigen::Index>(i0 | ml),
                                         static_cast<Eigen::Index>(i0 | mh), static_cast<Eigen::Index>(i0 | mh | ml)};
            const Complex a[4] = {v[idx[0]], v[idx[1]], v[idx[2]], v[idx[3]]};
            for (int r = 0; r < 4; ++r) {
                v[idx[r]] = g(r, 0) * a[0] + g(r, 1) * a[1] + g(r, 2) * a[2] + g(r, 3) * a[3];
            }
        }
    }
}

void FloquetPropagator::advance(ComplexVector& v, long n_periods) const {
    if (n_periods < 0) throw InvalidParameterError("negative period count");
    for (long n = 0; n < n_periods; ++n) period(v);
}

std::vector<StateVector> apply_floquet(const FloquetCircuit& circuit, const StateVector& psi, long n_periods,
                                       std::span<const long> record_at) {
    if (psi.sector() != Sector::Full || psi.length() != circuit.L) {
        throw DimensionError("floquet evolution needs a full-space state of matching length");
    }
    if (n_periods < 0) throw InvalidParameterError("negative period count");
    std::vector<long> marks(record_at.begin(), record_at.end());
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
    if (!marks.empty() && (marks.front() < 0 || marks.back() > n_periods)) {
        throw InvalidParameterError("recorded periods must lie in [0, n_periods]");
    }

    FloquetPropagator prop(circuit);
    ComplexVector v = psi.amplitudes();
    std::vector<StateVector> out;
    out.reserve(marks.size());
    long now = 0;
    for (long n : marks) {
        prop.advance(v, n - now);
        now = n;
        out.emplace_back(psi.basis_ptr(), v);
    }
    return out;
}

Spectrum full_spectrum(const SparseHamiltonian& H, std::size_t cap) {
    if (H.dimension() > cap) {
        throw CapacityError("exact diagonalization limited to dimension " + std::to_string(cap) + ", got " +
                            std::to_string(H.dimension()));
    }
    const bool real = std::all_of(H.entries().begin(), H.entries().end(),
                                  [](const Triplet& t) { return t.value.imag() == 0.0; });
    Eigen::VectorXd ev;
    if (real) {
        Eigen::MatrixXd dense = H.dense().real();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense, Eigen::EigenvaluesOnly);
        ev = eig.eigenvalues();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(H.dense(), Eigen::EigenvaluesOnly);
        ev = eig.eigenvalues();
    }
    std::vector<double> values(ev.data(), ev.data() + ev.size());
    std::sort(values.begin(), values.end());
    return {std::move(values), H.basis().sector()};
}

double heisenberg_time(const Spectrum& spectrum, double center_fraction) {
    if (!(center_fraction > 0.0) || center_fraction > 1.0) {
        throw InvalidParameterError("center fraction must lie in (0, 1]");
    }
    const auto n = static_cast<long>(spectrum.eigenvalues.size());
    const long count = std::min(n, std::lround(center_fraction * static_cast<double>(n)));
    if (count < 2) throw WindowError("fewer than 2 levels in the central window");
    const long start = (n - count) / 2;
    const double width = spectrum.eigenvalues[static_cast<std::size_t>(start + count - 1)] -
                         spectrum.eigenvalues[static_cast<std::size_t>(start)];
    const double gap = width / static_cast<double>(count - 1);
    if (!(gap > 0.0)) throw WindowError("central window has zero level spacing");
    return 2.0 * std::numbers::pi / gap;
}

double HeisenbergFit::predict(double W, int L) const {
    return std::ldexp(1.0, L) / (L * W) * a / std::sqrt(b + c / (W * W));
}

HeisenbergFit fit_heisenberg_time(std::span<const HeisenbergSample> samples, int L,
                                  const HeisenbergFitOptions& options) {
    if (samples.size() < 4) throw FitError("Heisenberg-time fit needs at least 4 samples");
    if (!(options.gauge_b > 0.0)) throw FitError("gauge value for b must be positive");
    double w_min = samples[0].W;
    for (const auto& s : samples) {
        if (!(s.W > 0.0) || !(s.t_H > 0.0)) throw FitError("Heisenberg-time fit needs W > 0 and t_H > 0");
        w_min = std::min(w_min, s.W);
    }
    const double prefactor = std::ldexp(1.0, L) / L;
    const std::size_t n = samples.size();

    // Linear start: (prefactor / (W t))^2 = (1 + r/W^2) / A^2.
    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = prefactor / (samples[i].W * samples[i].t_H);
        design(static_cast<Eigen::Index>(i), 0) = 1.0;
        design(static_cast<Eigen::Index>(i), 1) = 1.0 / (samples[i].W * samples[i].W);
        rhs[static_cast<Eigen::Index>(i)] = y * y;
    }
    const Eigen::Vector2d lin = design.colPivHouseholderQr().solve(rhs);
    double log_amp = 0.0;
    double ratio = 0.0;
    if (lin[0] > 0.0) {
        log_amp = -0.5 * std::log(lin[0]);
        ratio = std::max(lin[1] / lin[0], -0.5 * w_min * w_min);
    } else {
        double mean = 0.0;
        for (const auto& s : samples) mean += std::log(s.t_H * s.W / prefactor);
        log_amp = mean / static_cast<double>(n);
    }

    auto residuals = [&](double la, double r, Eigen::VectorXd& res, Eigen::MatrixXd* jac) {
        for (std::size_t i = 0; i < n; ++i) {
            const double W = samples[i].W;
            const auto k = static_cast<Eigen::Index>(i);
            res[k] = std::log(prefactor / W) + la - 0.5 * std::log1p(r / (W * W)) - std::log(samples[i].t_H);
            if (jac) {
                (*jac)(k, 0) = 1.0;
                (*jac)(k, 1) = -0.5 / (W * W + r);
            }
        }
    };

    Eigen::VectorXd res(n);
    Eigen::MatrixXd jac(n, 2);
    residuals(log_amp, ratio, res, &jac);
    double cost = res.squaredNorm();
    double damping = 1e-3;
    bool converged = false;
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        const Eigen::Matrix2d jtj = jac.transpose() * jac;
        const Eigen::Vector2d g = jac.transpose() * res;
        Eigen::Matrix2d lhs = jtj;
        lhs.diagonal() += damping * jtj.diagonal().cwiseMax(1e-12);
        const Eigen::Vector2d step = -lhs.ldlt().solve(g);
        const double la_new = log_amp + step[0];
        const double r_new = ratio + step[1];
        if (r_new <= -w_min * w_min) {
            damping *= 10.0;
            continue;
        }
        Eigen::VectorXd res_new(n);
        residuals(la_new, r_new, res_new, nullptr);
        const double cost_new = res_new.squaredNorm();
        if (cost_new <= cost) {
            const bool small = step.norm() <= 1e-12 * (1.0 + std::abs(log_amp) + std::abs(ratio));
            log_amp = la_new;
            ratio = r_new;
            cost = cost_new;
            residuals(log_amp, ratio, res, &jac);
            damping = std::max(damping / 10.0, 1e-12);
            if (small || g.norm() < 1e-14) {
                converged = true;
                break;
            }
        } else {
            damping *= 10.0;
            if (damping > 1e12) {
                converged = true; // no descent direction left: stationary point
                break;
            }
        }
    }
    if (!converged || !std::isfinite(cost)) {
        throw FitError("Heisenberg-time fit did not converge after " + std::to_string(it) +
                       " iterations (cost " + std::to_string(cost) + ", A = " + std::to_string(std::exp(log_amp)) +
                       ", c/b = " + std::to_string(ratio) + ")");
    }

    HeisenbergFit fit;
    fit.b = options.gauge_b;
    fit.a = std::exp(log_amp) * std::sqrt(fit.b);
    fit.c = ratio * fit.b;
    fit.iterations = it;
    double sum2 = 0.0;
    for (const auto& s : samples) {
        const double rel = (fit.predict(s.W, L) - s.t_H) / s.t_H;
        sum2 += rel * rel;
        fit.max_relative_residual = std::max(fit.max_relative_residual, std::abs(rel));
    }
    fit.rms_relative_residual = std::sqrt(sum2 / static_cast<double>(n));
    return fit;
}

} // namespace fockscope
