#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "fockscope/fock.hpp"
#include "fockscope/models.hpp"

namespace fockscope::testing {

// Exhaustive oracle: scan every pair of 2^L basis states directly.
inline std::vector<double> brute_force_pi(const StateVector& psi) {
    const int L = psi.length();
    const std::size_t full = std::size_t{1} << L;
    std::vector<double> prob(full, 0.0);
    for (std::size_t i = 0; i < psi.dimension(); ++i) {
        prob[psi.basis().state(i)] = std::norm(psi.amplitudes()[static_cast<Eigen::Index>(i)]);
    }
    std::size_t star = 0;
    for (std::size_t z = 0; z < full; ++z) {
        if (prob[z] > prob[star]) star = z;
    }
    std::vector<double> pi(static_cast<std::size_t>(L) + 1, 0.0);
    for (std::size_t z = 0; z < full; ++z) {
        int d = 0;
        for (int j = 0; j < L; ++j) d += ((z >> j) & 1U) != ((star >> j) & 1U);
        pi[static_cast<std::size_t>(d)] += prob[z];
    }
    return pi;
}

// Dense U_F on the full 2^L space built from Kronecker products.
inline Eigen::MatrixXcd dense_floquet(const FloquetCircuit& c) {
    const int L = c.L;
    const int dim = 1 << L;
    Eigen::MatrixXcd U = Eigen::MatrixXcd::Identity(dim, dim);
    auto site_op = [&](const Eigen::Matrix2cd& d, int site) {
        Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(dim, dim);
        const int shift = L - 1 - site;
        for (int col = 0; col < dim; ++col) {
            const int b = (col >> shift) & 1;
            for (int a = 0; a < 2; ++a) {
                const int row = (col & ~(1 << shift)) | (a << shift);
                M(row, col) += d(a, b);
            }
        }
        return M;
    };
    auto bond_op = [&](const Eigen::Matrix4cd& g, int bond) {
        Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(dim, dim);
        const int s1 = L - 1 - bond;
        const int s2 = s1 - 1;
        for (int col = 0; col < dim; ++col) {
            const int in = 2 * ((col >> s1) & 1) + ((col >> s2) & 1);
            for (int out = 0; out < 4; ++out) {
                const int row = (col & ~(1 << s1) & ~(1 << s2)) | ((out >> 1) << s1) | ((out & 1) << s2);
                M(row, col) += g(out, in);
            }
        }
        return M;
    };
    for (int j = 0; j < L; ++j) U = site_op(c.single_qubit_layer[static_cast<std::size_t>(j)], j) * U;
    for (const auto& g : c.bond_gates) U = bond_op(g.gate, g.bond) * U;
    return U;
}

} // namespace fockscope::testing
