#include "fockscope/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "fockscope/error.hpp"

namespace fockscope {

namespace {

struct Couplings {
    bool next_nearest_xy;
    bool zz;
};

void require_hamiltonian_kind(const ModelSpec& spec) {
    if (spec.kind == ModelKind::Floquet) {
        throw WrongBuilderError("floquet model has no Hamiltonian or field realization");
    }
}

SparseHamiltonian build_xxz(const ModelSpec& spec, const FieldRealization& fields, Couplings couplings,
                            const BuildOptions& options) {
    spec.validate();
    if (fields.fields.size() != static_cast<std::size_t>(spec.L)) {
        throw DimensionError("field realization has " + std::to_string(fields.fields.size()) + " sites, model has " +
                             std::to_string(spec.L));
    }
    const std::size_t dim = sector_dimension(spec.L, spec.sector);
    if (dim > options.max_dimension) {
        throw CapacityError("sector dimension " + std::to_string(dim) + " exceeds cap " +
                            std::to_string(options.max_dimension));
    }
    auto basis = sector_basis(spec.L, spec.sector);
    const int L = spec.L;
    const double J = spec.J;
    const int max_range = couplings.next_nearest_xy ? 2 : 1;

    std::vector<Triplet> entries;
    entries.reserve(dim * static_cast<std::size_t>(1 + L));
    for (std::size_t col = 0; col < dim; ++col) {
        const std::uint64_t s = basis->state(col);
        auto bit = [&](int site) { return static_cast<int>((s >> (L - 1 - site)) & 1U); };

        double diag = 0.0;
        for (int site = 0; site < L; ++site) {
            const double z = bit(site) ? 0.5 : -0.5;
            diag += fields.fields[static_cast<std::size_t>(site)] * z;
            if (couplings.zz && site + 1 < L) {
                const double z2 = bit(site + 1) ? 0.5 : -0.5;
                diag += J * z * z2;
            }
        }
        entries.push_back({col, col, Complex(diag, 0.0)});

        // S^x S^x + S^y S^y = (S^+ S^- + S^- S^+)/2 flips anti-aligned pairs.
        for (int r = 1; r <= max_range; ++r) {
            for (int site = 0; site + r < L; ++site) {
                if (bit(site) == bit(site + r)) continue;
                const std::uint64_t mask = (std::uint64_t{1} << (L - 1 - site)) | (std::uint64_t{1} << (L - 1 - site - r));
                const auto row = basis->index_of(s ^ mask);
                entries.push_back({*row, col, Complex(0.5 * J, 0.0)});
            }
        }
    }
    return {std::move(basis), std::move(entries)};
}

double uniform_phase(Rng& rng) {
    std::uniform_real_distribution<double> dist(0.0, 2.0 * std::numbers::pi);
    return dist(rng);
}

} // namespace

std::string to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::Quasiperiodic: return "quasiperiodic";
    case ModelKind::Random: return "random";
    case ModelKind::NoninteractingQp: return "noninteracting-qp";
    case ModelKind::Floquet: return "floquet";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "quasiperiodic") return ModelKind::Quasiperiodic;
    if (s == "random") return ModelKind::Random;
    if (s == "noninteracting-qp") return ModelKind::NoninteractingQp;
    if (s == "floquet") return ModelKind::Floquet;
    throw InvalidParameterError("unknown model kind '" + s + "'");
}

void ModelSpec::validate() const {
    if (L < 2 || L > kMaxSites) throw InvalidParameterError("L must lie in [2, 64]");
    if (!(W >= 0.0) || !std::isfinite(W)) throw InvalidParameterError("W must be finite and non-negative");
    if (!std::isfinite(J)) throw InvalidParameterError("J must be finite");
}

SparseHamiltonian::SparseHamiltonian(std::shared_ptr<const SectorBasis> basis, std::vector<Triplet> entries)
    : basis_(std::move(basis)), entries_(std::move(entries)) {
    const auto n = static_cast<Eigen::Index>(basis_->dimension());
    std::vector<Eigen::Triplet<Complex>> trips;
    trips.reserve(entries_.size());
    for (const auto& e : entries_) {
        if (e.row >= basis_->dimension() || e.col >= basis_->dimension()) {
            throw DimensionError("Hamiltonian entry outside the sector");
        }
        trips.emplace_back(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col), e.value);
    }
    matrix_.resize(n, n);
    matrix_.setFromTriplets(trips.begin(), trips.end());
    matrix_.makeCompressed();

    double worst = 0.0;
    for (Eigen::Index r = 0; r < matrix_.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(matrix_, r); it; ++it) {
            worst = std::max(worst, std::abs(it.value() - std::conj(matrix_.coeff(it.col(), it.row()))));
        }
    }
    hermitian_ = worst < 1e-14;
}

Complex SparseHamiltonian::element(std::size_t row, std::size_t col) const {
    return matrix_.coeff(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
}

FieldRealization fields_from_phases(const ModelSpec& spec, std::vector<double> phases) {
    require_hamiltonian_kind(spec);
    if (phases.size() != static_cast<std::size_t>(spec.L)) throw DimensionError("one phase per site required");
    FieldRealization out;
    out.fields.resize(phases.size());
    for (std::size_t j = 0; j < phases.size(); ++j) {
        const double site = static_cast<double>(j + 1);
        out.fields[j] = spec.W * std::cos(2.0 * std::numbers::pi * kFieldWaveNumber * site + phases[j]);
    }
    out.phases = std::move(phases);
    return out;
}

FieldRealization sample_fields(const ModelSpec& spec, Rng& rng) {
    require_hamiltonian_kind(spec);
    spec.validate();
    std::vector<double> phases(static_cast<std::size_t>(spec.L));
    if (spec.kind == ModelKind::Random) {
        for (double& p : phases) p = uniform_phase(rng);
    } else {
        std::fill(phases.begin(), phases.end(), uniform_phase(rng));
    }
    return fields_from_phases(spec, std::move(phases));
}

SparseHamiltonian build_hamiltonian(const ModelSpec& spec, const FieldRealization& fields,
                                    const BuildOptions& options) {
    if (spec.kind != ModelKind::Quasiperiodic && spec.kind != ModelKind::Random) {
        throw WrongBuilderError("build_hamiltonian needs a quasiperiodic or random model, got " + to_string(spec.kind));
    }
    return build_xxz(spec, fields, {.next_nearest_xy = true, .zz = true}, options);
}

SparseHamiltonian build_noninteracting(const ModelSpec& spec, const FieldRealization& fields,
                                       const BuildOptions& options) {
    if (spec.kind != ModelKind::NoninteractingQp) {
        throw WrongBuilderError("build_noninteracting needs a noninteracting-qp model, got " + to_string(spec.kind));
    }
    return build_xxz(spec, fields, {.next_nearest_xy = false, .zz = false}, options);
}

SparseHamiltonian build_model_hamiltonian(const ModelSpec& spec, const FieldRealization& fields,
                                          const BuildOptions& options) {
    if (spec.kind == ModelKind::NoninteractingQp) return build_noninteracting(spec, fields, options);
    return build_hamiltonian(spec, fields, options);
}

Eigen::MatrixXcd sample_cue(int n, Rng& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    Eigen::MatrixXcd z(n, n);
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) z(r, c) = Complex(normal(rng), normal(rng));
    }
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
    Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
    const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int k = 0; k < n; ++k) {
        const double mag = std::abs(r(k, k));
        const Complex phase = mag > 0.0 ? r(k, k) / mag : Complex(1.0, 0.0);
        q.col(k) *= phase;
    }
    return q;
}

Eigen::MatrixXcd sample_gue(int n, Rng& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    Eigen::MatrixXcd a(n, n);
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) a(r, c) = Complex(normal(rng), normal(rng));
    }
    return (a + a.adjoint()) / 2.0;
}

Eigen::MatrixXcd unitary_from_hermitian(const Eigen::MatrixXcd& M, double W) {
    if (!(W > 0.0)) throw InvalidParameterError("effective disorder strength W must be positive");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(M);
    const Eigen::VectorXcd phases =
        (eig.eigenvalues() / W).unaryExpr([](double x) { return std::exp(Complex(0.0, x)); });
    return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
}

FloquetCircuit sample_floquet_circuit(const ModelSpec& spec, Rng& rng) {
    if (spec.kind != ModelKind::Floquet) {
        throw WrongBuilderError("sample_floquet_circuit needs a floquet model, got " + to_string(spec.kind));
    }
    spec.validate();
    if (!(spec.W > 0.0)) throw InvalidParameterError("floquet model needs W > 0");

    FloquetCircuit circuit;
    circuit.L = spec.L;
    circuit.single_qubit = spec.single_qubit;
    circuit.single_qubit_layer.reserve(static_cast<std::size_t>(spec.L));
    for (int site = 0; site < spec.L; ++site) {
        const Eigen::Matrix2cd u = sample_cue(2, rng);
        if (spec.single_qubit == SingleQubitMode::FullCue) {
            circuit.single_qubit_layer.push_back(u);
        } else {
            Eigen::ComplexEigenSolver<Eigen::Matrix2cd> eig(u);
            Eigen::Vector2cd ev = eig.eigenvalues();
            // Project onto the unit circle; the solver leaves ~1e-16 radial noise.
            for (int k = 0; k < 2; ++k) ev[k] /= std::abs(ev[k]);
            circuit.single_qubit_layer.push_back(ev.asDiagonal());
        }
    }

    std::vector<Eigen::Matrix4cd> per_bond;
    per_bond.reserve(static_cast<std::size_t>(spec.L - 1));
    for (int bond = 0; bond + 1 < spec.L; ++bond) {
        per_bond.push_back(unitary_from_hermitian(sample_gue(4, rng), spec.W));
    }

    circuit.bond_order.resize(static_cast<std::size_t>(spec.L - 1));
    std::iota(circuit.bond_order.begin(), circuit.bond_order.end(), 0);
    std::shuffle(circuit.bond_order.begin(), circuit.bond_order.end(), rng);
    for (int bond : circuit.bond_order) {
        circuit.bond_gates.push_back({bond, per_bond[static_cast<std::size_t>(bond)]});
    }
    return circuit;
}

} // namespace fockscope
