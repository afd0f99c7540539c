#include "fockscope/fock.hpp"

#include <bitset>
#include <cmath>
#include <random>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <gtest/gtest.h>

#include "fockscope/error.hpp"
#include "oracles.hpp"

using namespace fockscope;
using fockscope::testing::brute_force_pi;

namespace {

StateVector random_state(int L, Sector sector, std::mt19937_64& rng) {
    auto basis = sector_basis(L, sector);
    std::normal_distribution<double> g;
    ComplexVector a(static_cast<Eigen::Index>(basis->dimension()));
    for (auto& z : a) z = {g(rng), g(rng)};
    a.normalize();
    return {basis, a};
}

StateVector uniform_state(int L) {
    auto basis = sector_basis(L, Sector::Full);
    ComplexVector a = ComplexVector::Constant(static_cast<Eigen::Index>(basis->dimension()),
                                              1.0 / std::sqrt(static_cast<double>(basis->dimension())));
    return {basis, a};
}

} // namespace

TEST(Hamming, identity_is_zero) {
    const BasisState a(0b1011, 4);
    EXPECT_EQ(hamming_distance(a, a), 0);
}

TEST(Hamming, full_flip) { EXPECT_EQ(hamming_distance(BasisState(0b1111, 4), BasisState(0b0000, 4)), 4); }

TEST(Hamming, neel_complement) {
    const StateVector neel = neel_state(6, Sector::Full);
    const BasisState z = closest_fock_state(neel).state;
    EXPECT_EQ(hamming_distance(z, z.complement()), 6);
}

TEST(Hamming, length_mismatch) {
    EXPECT_THROW(hamming_distance(BasisState(1, 4), BasisState(1, 5)), DimensionError);
}

TEST(Hamming, metric_axioms_exhaustive_l4) {
    for (std::uint64_t a = 0; a < 16; ++a) {
        for (std::uint64_t b = 0; b < 16; ++b) {
            const int ab = hamming_distance(BasisState(a, 4), BasisState(b, 4));
            EXPECT_EQ(ab, hamming_distance(BasisState(b, 4), BasisState(a, 4)));
            EXPECT_EQ(ab, static_cast<int>(std::bitset<4>(a ^ b).count()));
            for (std::uint64_t c = 0; c < 16; ++c) {
                EXPECT_LE(ab, hamming_distance(BasisState(a, 4), BasisState(c, 4)) +
                                  hamming_distance(BasisState(c, 4), BasisState(b, 4)));
            }
        }
    }
}

TEST(BasisState, bit_convention) {
    const BasisState z(0b1010, 4);
    EXPECT_EQ(z.spin(0), +1);
    EXPECT_EQ(z.spin(1), -1);
    EXPECT_EQ(z.to_string(), "1010");
}

TEST(SectorBasis, sz_zero_dimension_and_order) {
    const auto b = sector_basis(6, Sector::SzZero);
    ASSERT_EQ(b->dimension(), 20u);
    for (std::size_t i = 0; i < b->dimension(); ++i) {
        EXPECT_EQ(std::popcount(b->state(i)), 3);
        if (i > 0) EXPECT_LT(b->state(i - 1), b->state(i));
        EXPECT_EQ(b->index_of(b->state(i)), i);
    }
    EXPECT_FALSE(b->index_of(0b111111).has_value());
}

TEST(ClosestState, product_state) {
    const StateVector neel = neel_state(4, Sector::Full);
    const ClosestState c = closest_fock_state(neel);
    EXPECT_EQ(c.state.bits(), 0b1010u);
    EXPECT_DOUBLE_EQ(c.probability, 1.0);
}

TEST(ClosestState, tie_breaks_to_lowest_index) {
    const ClosestState c = closest_fock_state(uniform_state(2));
    EXPECT_EQ(c.state.bits(), 0u);
    EXPECT_NEAR(c.probability, 0.25, 1e-15);
}

TEST(ClosestState, matches_exhaustive_scan_l3) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const StateVector psi = random_state(3, Sector::Full, rng);
        std::size_t best = 0;
        for (std::size_t z = 0; z < 8; ++z) {
            if (std::norm(psi.amplitudes()[static_cast<Eigen::Index>(z)]) >
                std::norm(psi.amplitudes()[static_cast<Eigen::Index>(best)])) {
                best = z;
            }
        }
        const ClosestState c = closest_fock_state(psi);
        EXPECT_EQ(c.state.bits(), best);
        EXPECT_NEAR(c.probability, std::norm(psi.amplitudes()[static_cast<Eigen::Index>(best)]), 1e-15);
    }
}

TEST(ClosestState, zero_vector_rejected) {
    const StateVector zero(sector_basis(2, Sector::Full), ComplexVector::Zero(4));
    EXPECT_THROW(closest_fock_state(zero), InvalidStateError);
}

TEST(ClosestState, unnormalized_rejected) {
    const StateVector big(sector_basis(2, Sector::Full), ComplexVector::Constant(4, 1.0));
    EXPECT_THROW(closest_fock_state(big), InvalidStateError);
}

TEST(Radial, product_state_point_mass) {
    const RadialDistribution d = radial_distribution(neel_state(6, Sector::SzZero));
    ASSERT_EQ(d.pi.size(), 7u);
    EXPECT_DOUBLE_EQ(d.pi[0], 1.0);
    for (std::size_t x = 1; x < d.pi.size(); ++x) EXPECT_EQ(d.pi[x], 0.0);
    EXPECT_EQ(displacement(d).delta_x2, 0.0);
}

TEST(Radial, uniform_l2) {
    const RadialDistribution d = radial_distribution(uniform_state(2));
    EXPECT_NEAR(d.pi[0], 0.25, 1e-15);
    EXPECT_NEAR(d.pi[1], 0.5, 1e-15);
    EXPECT_NEAR(d.pi[2], 0.25, 1e-15);
}

TEST(Radial, uniform_is_binomial) {
    for (int L = 2; L <= 10; ++L) {
        const RadialDistribution d = radial_distribution(uniform_state(L));
        double binom = 1.0;
        for (int x = 0; x <= L; ++x) {
            EXPECT_NEAR(d.pi[static_cast<std::size_t>(x)], binom / std::ldexp(1.0, L), 1e-14);
            binom = binom * (L - x) / (x + 1);
        }
        EXPECT_NEAR(delta_x2(uniform_state(L)), L / 4.0, 1e-12);
    }
}

TEST(Radial, uniform_l4_moments) {
    const DisplacementValue v = displacement(radial_distribution(uniform_state(4)));
    EXPECT_NEAR(v.mean_x, 2.0, 1e-12);
    EXPECT_NEAR(v.delta_x2, 1.0, 1e-12);
    EXPECT_NEAR(v.delta_x2, v.second_moment - v.mean_x * v.mean_x, 1e-12);
}

TEST(Radial, brute_force_oracle_small_l) {
    std::mt19937_64 rng(11);
    for (int L = 2; L <= 6; ++L) {
        for (int trial = 0; trial < 100; ++trial) {
            const StateVector psi = random_state(L, Sector::Full, rng);
            const RadialDistribution d = radial_distribution(psi);
            const auto oracle = brute_force_pi(psi);
            double sum = 0.0;
            for (std::size_t x = 0; x < d.pi.size(); ++x) {
                EXPECT_NEAR(d.pi[x], oracle[x], 1e-12);
                EXPECT_GE(d.pi[x], 0.0);
                sum += d.pi[x];
            }
            EXPECT_NEAR(sum, 1.0, 1e-10);
            EXPECT_EQ(d.pi[0], d.anchor_probability);
        }
    }
}

TEST(Radial, sector_matches_full_embedding) {
    std::mt19937_64 rng(5);
    const StateVector s = random_state(6, Sector::SzZero, rng);
    ComplexVector full = ComplexVector::Zero(64);
    for (std::size_t i = 0; i < s.dimension(); ++i) {
        full[static_cast<Eigen::Index>(s.basis().state(i))] = s.amplitudes()[static_cast<Eigen::Index>(i)];
    }
    const StateVector f(sector_basis(6, Sector::Full), full);
    const auto a = radial_distribution(s);
    const auto b = radial_distribution(f);
    EXPECT_EQ(a.anchor, b.anchor);
    for (std::size_t x = 0; x < a.pi.size(); ++x) EXPECT_NEAR(a.pi[x], b.pi[x], 1e-15);
}

TEST(Displacement, high_precision_oracle_l5) {
    using Big = boost::multiprecision::cpp_dec_float_50;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> pi(6);
        double total = 0.0;
        for (double& p : pi) total += (p = u(rng));
        for (double& p : pi) p /= total;
        Big m1 = 0, m2 = 0;
        for (std::size_t x = 0; x < pi.size(); ++x) {
            m1 += Big(x) * Big(pi[x]);
            m2 += Big(x * x) * Big(pi[x]);
        }
        const double oracle = static_cast<double>(m2 - m1 * m1);
        const RadialDistribution d{pi, BasisState(0, 5), pi[0]};
        EXPECT_NEAR(displacement(d).delta_x2, oracle, 1e-13);
        EXPECT_LE(displacement(d).delta_x2, 25.0 / 4.0);
    }
}

TEST(Displacement, rejects_unnormalized) {
    const RadialDistribution d{{0.5, 0.3, 0.1}, BasisState(0, 2), 0.5};
    EXPECT_THROW(displacement(d), InvalidDistributionError);
}

TEST(Neel, l2_and_l4) {
    const StateVector two = neel_state(2, Sector::SzZero);
    EXPECT_EQ(closest_fock_state(two).state.bits(), 0b10u);
    const StateVector four = neel_state(4, Sector::Full);
    EXPECT_EQ(four.amplitudes()[0b1010], Complex(1.0));
    EXPECT_DOUBLE_EQ(four.norm(), 1.0);
    for (int L = 2; L <= 20; L += 2) EXPECT_DOUBLE_EQ(neel_state(L, Sector::SzZero).norm(), 1.0);
}

TEST(Neel, odd_l_in_sz_zero) { EXPECT_THROW(neel_state(5, Sector::SzZero), SectorError); }

TEST(StateVector, dimension_mismatch) {
    EXPECT_THROW(StateVector(sector_basis(4, Sector::SzZero), ComplexVector::Zero(16)), DimensionError);
}
