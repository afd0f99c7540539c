#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fockscope/fock.hpp"
#include "fockscope/models.hpp"

namespace fockscope {

struct KrylovConfig {
    int subspace_dim = 30;
    double step_dt = 5.0;      // largest single substep, units of 1/J
    double tolerance = 1e-10;  // local error per substep
    int max_restarts = 40;     // step halvings allowed within one substep
    std::size_t dense_cap = 0; // ensemble runs propagate by full diagonalization up to this dimension

    void validate() const;
};

struct KrylovStats {
    std::size_t substeps = 0;
    std::size_t matvecs = 0;
    std::size_t restarts = 0;
};

// Short-iterative Lanczos propagator for exp(-iHt) on a Hermitian H.
// Builds the Krylov basis with full reorthogonalization and picks each
// substep so the a-posteriori residual estimate stays below the tolerance.
class KrylovPropagator {
public:
    KrylovPropagator(const SparseHamiltonian& H, KrylovConfig cfg);

    // v <- exp(-i H dt) v, dt >= 0.
    void advance(ComplexVector& v, double dt);

    const KrylovStats& stats() const noexcept { return stats_; }

private:
    const SparseHamiltonian& H_;
    KrylovConfig cfg_;
    KrylovStats stats_;
    Eigen::MatrixXcd basis_;
    ComplexVector work_;
    int last_used_ = 0;
};

std::vector<StateVector> krylov_evolve(const SparseHamiltonian& H, const StateVector& psi,
                                       std::span<const double> t_grid, const KrylovConfig& cfg = {});

inline constexpr std::size_t kDenseEvolveCap = 4096;

// exp(-iHt) through a full diagonalization, reusable across times.
class DensePropagator {
public:
    explicit DensePropagator(const SparseHamiltonian& H);

    ComplexVector evolve(const ComplexVector& v, double t) const;

    const Eigen::VectorXd& energies() const noexcept { return energies_; }

private:
    Eigen::VectorXd energies_;
    Eigen::MatrixXd real_vectors_; // used when H has real entries
    Eigen::MatrixXcd vectors_;
    bool real_ = false;
};

StateVector dense_evolve(const SparseHamiltonian& H, const StateVector& psi, double t);

// Applies one Floquet period U_F = U_u U_d in place: the single-qubit layer
// first, then the bond gates in circuit order.
class FloquetPropagator {
public:
    explicit FloquetPropagator(const FloquetCircuit& circuit);

    void period(ComplexVector& v) const;
    void advance(ComplexVector& v, long n_periods) const;

private:
    const FloquetCircuit& circuit_;
    ComplexVector diagonal_; // product of diagonal single-qubit phases, when available
};

// Records psi(n) for every n in record_at (sorted ascending, duplicates
// ignored); n_periods bounds the largest requested period.
std::vector<StateVector> apply_floquet(const FloquetCircuit& circuit, const StateVector& psi, long n_periods,
                                       std::span<const long> record_at);

struct Spectrum {
    std::vector<double> eigenvalues;
    Sector sector;
};

inline constexpr std::size_t kDefaultEdCap = 20000;

Spectrum full_spectrum(const SparseHamiltonian& H, std::size_t cap = kDefaultEdCap);

inline constexpr double kDefaultCenterFraction = 0.1;

// 2*pi / (mean adjacent gap over the central fraction of the sorted levels).
double heisenberg_time(const Spectrum& spectrum, double center_fraction = kDefaultCenterFraction);

struct HeisenbergSample {
    double W;
    double t_H;
};

// t_H(W) = 2^L/(L W) * a / sqrt(b + c/W^2). Only a/sqrt(b) and c/b are
// determined by data; b is fixed by the gauge chosen at fit time.
struct HeisenbergFit {
    double a = 0.0;
    double b = 1.0;
    double c = 0.0;
    double rms_relative_residual = 0.0;
    double max_relative_residual = 0.0;
    int iterations = 0;

    double amplitude() const { return a / std::sqrt(b); }
    double ratio() const { return c / b; }
    double predict(double W, int L) const;
};

struct HeisenbergFitOptions {
    double gauge_b = 1.0;
    int max_iterations = 200;
};

HeisenbergFit fit_heisenberg_time(std::span<const HeisenbergSample> samples, int L,
                                  const HeisenbergFitOptions& options = {});

} // namespace fockscope
