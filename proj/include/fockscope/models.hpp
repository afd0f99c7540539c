#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "fockscope/fock.hpp"

namespace fockscope {

using Rng = std::mt19937_64;

// Golden-ratio wave number of the on-site cosine field.
inline const double kFieldWaveNumber = (std::sqrt(5.0) - 1.0) / 2.0;

enum class ModelKind { Quasiperiodic, Random, NoninteractingQp, Floquet };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

// How the per-site gate d_i of the Floquet drive is built from a CUE(2) draw.
enum class SingleQubitMode {
    Eigenphase, // diagonal matrix of the draw's eigenvalues
    FullCue,    // the draw itself
};

struct ModelSpec {
    ModelKind kind = ModelKind::Quasiperiodic;
    int L = 8;
    double W = 1.0;
    double J = 1.0;
    std::uint64_t seed = 0;
    Sector sector = Sector::SzZero;
    SingleQubitMode single_qubit = SingleQubitMode::Eigenphase;

    void validate() const;
};

struct FieldRealization {
    std::vector<double> phases;
    std::vector<double> fields;
};

struct Triplet {
    std::size_t row;
    std::size_t col;
    Complex value;
};

using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

class SparseHamiltonian {
public:
    SparseHamiltonian(std::shared_ptr<const SectorBasis> basis, std::vector<Triplet> entries);

    std::size_t dimension() const noexcept { return basis_->dimension(); }
    const SectorBasis& basis() const noexcept { return *basis_; }
    std::shared_ptr<const SectorBasis> basis_ptr() const noexcept { return basis_; }
    const std::vector<Triplet>& entries() const noexcept { return entries_; }
    const SparseMatrix& matrix() const noexcept { return matrix_; }
    bool hermitian() const noexcept { return hermitian_; }

    // out = H * in
    void apply(const Eigen::Ref<const ComplexVector>& in, ComplexVector& out) const { out.noalias() = matrix_ * in; }

    Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(matrix_); }
    Complex element(std::size_t row, std::size_t col) const;

private:
    std::shared_ptr<const SectorBasis> basis_;
    std::vector<Triplet> entries_;
    SparseMatrix matrix_;
    bool hermitian_ = false;
};

struct BondGate {
    int bond; // acts on sites (bond, bond + 1), local index 2*b_bond + b_{bond+1}
    Eigen::Matrix4cd gate;
};

struct FloquetCircuit {
    int L = 0;
    SingleQubitMode single_qubit = SingleQubitMode::Eigenphase;
    std::vector<Eigen::Matrix2cd> single_qubit_layer;
    std::vector<BondGate> bond_gates; // stored in application order
    std::vector<int> bond_order;
};

struct BuildOptions {
    std::size_t max_dimension = std::size_t{1} << 22;
};

FieldRealization sample_fields(const ModelSpec& spec, Rng& rng);

// Fields for explicit phases; used to replay a realization.
FieldRealization fields_from_phases(const ModelSpec& spec, std::vector<double> phases);

SparseHamiltonian build_hamiltonian(const ModelSpec& spec, const FieldRealization& fields,
                                    const BuildOptions& options = {});

SparseHamiltonian build_noninteracting(const ModelSpec& spec, const FieldRealization& fields,
                                       const BuildOptions& options = {});

// Dispatches on spec.kind for the Hamiltonian kinds.
SparseHamiltonian build_model_hamiltonian(const ModelSpec& spec, const FieldRealization& fields,
                                          const BuildOptions& options = {});

FloquetCircuit sample_floquet_circuit(const ModelSpec& spec, Rng& rng);

// Haar-random U(n) via QR of a complex Ginibre matrix with phase correction.
Eigen::MatrixXcd sample_cue(int n, Rng& rng);

// Hermitian (A + A^dagger)/2 with A of i.i.d. standard complex normal entries.
Eigen::MatrixXcd sample_gue(int n, Rng& rng);

// exp(i M / W) for Hermitian M.
Eigen::MatrixXcd unitary_from_hermitian(const Eigen::MatrixXcd& M, double W);

} // namespace fockscope
