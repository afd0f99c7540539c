#include "fockscope/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "fockscope/error.hpp"
#include "oracles.hpp"

using namespace fockscope;
using fockscope::testing::dense_floquet;

namespace {

ModelSpec qp_spec(int L, double W, std::uint64_t seed) {
    ModelSpec s;
    s.kind = ModelKind::Quasiperiodic;
    s.L = L;
    s.W = W;
    s.seed = seed;
    return s;
}

SparseHamiltonian random_hamiltonian(int L, double W, std::uint64_t seed) {
    ModelSpec s = qp_spec(L, W, seed);
    s.kind = ModelKind::Random;
    Rng rng(seed);
    return build_hamiltonian(s, sample_fields(s, rng));
}

// exp(-iHt) psi from the matrix exponential of the dense Hamiltonian.
ComplexVector expm_oracle(const SparseHamiltonian& H, const ComplexVector& v, double t) {
    const Eigen::MatrixXcd A = Complex(0.0, -t) * H.dense();
    return A.exp() * v;
}

ComplexVector random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    ComplexVector v(static_cast<Eigen::Index>(n));
    for (auto& z : v) z = {g(rng), g(rng)};
    return v.normalized();
}

} // namespace

TEST(Krylov, matches_matrix_exponential_l8) {
    const auto H = random_hamiltonian(8, 3.0, 21);
    const ComplexVector v = random_vector(H.dimension(), 1);
    KrylovPropagator prop(H, {});
    for (double t : {0.3, 2.0, 17.5}) {
        ComplexVector w = v;
        prop.advance(w, t);
        EXPECT_LT((w - expm_oracle(H, v, t)).norm(), 1e-9) << "t = " << t;
    }
}

TEST(Krylov, zero_time_is_identity) {
    const auto H = random_hamiltonian(6, 1.0, 2);
    const ComplexVector v = random_vector(H.dimension(), 2);
    ComplexVector w = v;
    KrylovPropagator(H, {}).advance(w, 0.0);
    EXPECT_EQ((w - v).norm(), 0.0);
}

TEST(Krylov, conserves_norm_and_energy) {
    const auto H = random_hamiltonian(10, 2.0, 3);
    ComplexVector v = random_vector(H.dimension(), 3);
    ComplexVector hv;
    H.apply(v, hv);
    const double e0 = v.dot(hv).real();
    KrylovPropagator prop(H, {});
    for (int k = 0; k < 10; ++k) {
        prop.advance(v, 7.0);
        H.apply(v, hv);
        EXPECT_NEAR(v.norm(), 1.0, 1e-9);
        EXPECT_NEAR(v.dot(hv).real(), e0, 1e-8);
    }
}

TEST(Krylov, linear_in_the_state) {
    const auto H = random_hamiltonian(8, 2.0, 4);
    const ComplexVector a = random_vector(H.dimension(), 4);
    const ComplexVector b = random_vector(H.dimension(), 5);
    const Complex alpha(0.3, -1.1), beta(-0.7, 0.2);
    KrylovPropagator prop(H, {});
    ComplexVector ua = a, ub = b, uab = alpha * a + beta * b;
    prop.advance(ua, 4.0);
    prop.advance(ub, 4.0);
    prop.advance(uab, 4.0);
    EXPECT_LT((uab - (alpha * ua + beta * ub)).norm(), 1e-9);
}

TEST(Krylov, step_size_independent) {
    const auto H = random_hamiltonian(8, 2.0, 6);
    const ComplexVector v = random_vector(H.dimension(), 6);
    KrylovConfig small;
    small.step_dt = 0.5;
    KrylovConfig large;
    large.step_dt = 10.0;
    ComplexVector a = v, b = v;
    KrylovPropagator(H, small).advance(a, 25.0);
    KrylovPropagator(H, large).advance(b, 25.0);
    EXPECT_LT((a - b).norm(), 1e-8);
}

TEST(Krylov, diagonal_hamiltonian_phases) {
    ModelSpec s = qp_spec(6, 2.0, 7);
    s.J = 0.0;
    Rng rng(7);
    const auto H = build_hamiltonian(s, sample_fields(s, rng));
    const ComplexVector v = random_vector(H.dimension(), 7);
    ComplexVector w = v;
    KrylovPropagator(H, {}).advance(w, 3.0);
    for (std::size_t i = 0; i < H.dimension(); ++i) {
        const double e = H.element(i, i).real();
        const auto k = static_cast<Eigen::Index>(i);
        EXPECT_LT(std::abs(w[k] - std::exp(Complex(0.0, -3.0 * e)) * v[k]), 1e-10);
    }
}

TEST(Krylov, evolve_grid_matches_dense) {
    const auto H = random_hamiltonian(8, 4.0, 8);
    const StateVector psi = neel_state(8, Sector::SzZero);
    const std::vector<double> grid{0.0, 0.5, 5.0, 50.0};
    const auto states = krylov_evolve(H, psi, grid);
    ASSERT_EQ(states.size(), grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        EXPECT_LT((states[k].amplitudes() - dense_evolve(H, psi, grid[k]).amplitudes()).norm(), 1e-9);
    }
}

TEST(Krylov, invalid_config) {
    KrylovConfig c;
    c.subspace_dim = 1;
    EXPECT_THROW(c.validate(), InvalidParameterError);
}

TEST(DensePropagator, matches_matrix_exponential) {
    const auto H = random_hamiltonian(6, 1.5, 9);
    const ComplexVector v = random_vector(H.dimension(), 9);
    const DensePropagator dense(H);
    for (double t : {0.0, 1.0, 123.4}) EXPECT_LT((dense.evolve(v, t) - expm_oracle(H, v, t)).norm(), 1e-9);
}

TEST(Floquet, three_periods_match_dense_l4) {
    for (auto mode : {SingleQubitMode::Eigenphase, SingleQubitMode::FullCue}) {
        ModelSpec s;
        s.kind = ModelKind::Floquet;
        s.L = 4;
        s.W = 1.3;
        s.sector = Sector::Full;
        s.single_qubit = mode;
        Rng rng(11);
        const FloquetCircuit c = sample_floquet_circuit(s, rng);
        const Eigen::MatrixXcd UF = dense_floquet(c);
        const ComplexVector v = random_vector(16, 11);
        ComplexVector w = v;
        FloquetPropagator(c).advance(w, 3);
        EXPECT_LT((w - UF * UF * UF * v).norm(), 1e-12);
    }
}

TEST(Floquet, periods_compose) {
    ModelSpec s;
    s.kind = ModelKind::Floquet;
    s.L = 8;
    s.W = 2.0;
    s.sector = Sector::Full;
    Rng rng(12);
    const FloquetCircuit c = sample_floquet_circuit(s, rng);
    const FloquetPropagator prop(c);
    const ComplexVector v = random_vector(256, 12);
    ComplexVector a = v, b = v;
    prop.advance(a, 5);
    prop.advance(a, 7);
    prop.advance(b, 12);
    EXPECT_LT((a - b).norm(), 1e-12);
    EXPECT_NEAR(a.norm(), 1.0, 1e-12);
    const std::vector<long> at{0, 5, 12};
    const auto states = apply_floquet(c, StateVector(sector_basis(8, Sector::Full), v), 12, at);
    ASSERT_EQ(states.size(), 3u);
    EXPECT_EQ((states[0].amplitudes() - v).norm(), 0.0);
    EXPECT_LT((states[2].amplitudes() - b).norm(), 1e-12);
}

TEST(Spectrum, two_site_levels) {
    const ModelSpec s = qp_spec(2, 0.0, 0);
    const auto H = build_hamiltonian(s, fields_from_phases(s, {0.0, 0.0}));
    const Spectrum sp = full_spectrum(H);
    ASSERT_EQ(sp.eigenvalues.size(), 2u);
    EXPECT_NEAR(sp.eigenvalues[0], -0.75, 1e-14);
    EXPECT_NEAR(sp.eigenvalues[1], 0.25, 1e-14);
}

TEST(Spectrum, trace_identity) {
    const auto H = random_hamiltonian(8, 3.0, 13);
    const Spectrum sp = full_spectrum(H);
    double sum = 0.0, sum2 = 0.0;
    for (double e : sp.eigenvalues) {
        sum += e;
        sum2 += e * e;
    }
    const Eigen::MatrixXcd d = H.dense();
    EXPECT_NEAR(sum, d.trace().real(), 1e-10);
    EXPECT_NEAR(sum2, (d * d).trace().real(), 1e-9);
}

TEST(Spectrum, capacity_cap) {
    EXPECT_THROW(full_spectrum(random_hamiltonian(8, 1.0, 1), 10), CapacityError);
}

TEST(HeisenbergTime, uniform_spacing) {
    Spectrum sp{{}, Sector::SzZero};
    for (int k = 0; k < 100; ++k) sp.eigenvalues.push_back(0.25 * k);
    EXPECT_NEAR(heisenberg_time(sp), 8.0 * std::numbers::pi, 1e-12);
}

TEST(HeisenbergTime, three_levels_full_fraction) {
    const Spectrum sp{{0.0, 1.0, 3.0}, Sector::SzZero};
    EXPECT_NEAR(heisenberg_time(sp, 1.0), 4.0 * std::numbers::pi / 3.0, 1e-14);
}

TEST(HeisenbergTime, degenerate_window) {
    EXPECT_THROW(heisenberg_time({{1.0, 1.0, 1.0}, Sector::SzZero}, 1.0), WindowError);
    EXPECT_THROW(heisenberg_time({{0.0, 1.0}, Sector::SzZero}, 0.0), InvalidParameterError);
}

TEST(HeisenbergFit, recovers_synthetic_parameters) {
    const int L = 10;
    const HeisenbergFit truth{3.0, 2.0, 5.0};
    std::vector<HeisenbergSample> samples;
    for (double W = 1.0; W <= 8.0; W += 0.5) samples.push_back({W, truth.predict(W, L)});
    const HeisenbergFit fit = fit_heisenberg_time(samples, L, {.gauge_b = truth.b});
    EXPECT_NEAR(fit.a, truth.a, 1e-6);
    EXPECT_NEAR(fit.c, truth.c, 1e-6);
    EXPECT_LT(fit.max_relative_residual, 1e-8);
    for (const auto& s : samples) EXPECT_NEAR(fit.predict(s.W, L) / s.t_H, 1.0, 1e-8);
}

TEST(HeisenbergFit, gauge_invariant_prediction) {
    const int L = 8;
    const HeisenbergFit truth{1.0, 1.0, 2.0};
    std::vector<HeisenbergSample> samples;
    for (double W = 1.0; W <= 6.0; W += 1.0) samples.push_back({W, truth.predict(W, L)});
    const HeisenbergFit g1 = fit_heisenberg_time(samples, L, {.gauge_b = 1.0});
    const HeisenbergFit g4 = fit_heisenberg_time(samples, L, {.gauge_b = 4.0});
    EXPECT_NEAR(g1.amplitude(), g4.amplitude(), 1e-8);
    EXPECT_NEAR(g1.ratio(), g4.ratio(), 1e-8);
    EXPECT_NEAR(g1.predict(3.3, L), g4.predict(3.3, L), 1e-8);
}

TEST(HeisenbergFit, too_few_samples) {
    const std::vector<HeisenbergSample> samples{{1.0, 1.0}, {2.0, 0.5}, {3.0, 0.3}};
    EXPECT_THROW(fit_heisenberg_time(samples, 8), FitError);
}
