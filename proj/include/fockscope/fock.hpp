#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fockscope {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;

inline constexpr int kMaxSites = 64;

enum class Sector { Full, SzZero };

std::string to_string(Sector s);
Sector sector_from_string(const std::string& s);

// A z-basis product state |Z> of an L-site chain. Site 0 (the physical site
// j = 1) is the most significant bit; a set bit means z_j = +1.
class BasisState {
public:
    BasisState(std::uint64_t bits, int length);

    std::uint64_t bits() const noexcept { return bits_; }
    int length() const noexcept { return length_; }

    // z value (+1 or -1) of the 0-based site.
    int spin(int site) const;
    BasisState complement() const;
    std::string to_string() const;

    friend bool operator==(const BasisState&, const BasisState&) = default;

private:
    std::uint64_t bits_;
    int length_;
};

// Basis states spanning a sector, in increasing integer order.
class SectorBasis {
public:
    SectorBasis(int length, Sector sector);

    int length() const noexcept { return length_; }
    Sector sector() const noexcept { return sector_; }
    std::size_t dimension() const noexcept { return dimension_; }

    std::uint64_t state(std::size_t index) const {
        return sector_ == Sector::Full ? static_cast<std::uint64_t>(index) : states_[index];
    }
    std::optional<std::size_t> index_of(std::uint64_t bits) const;

private:
    int length_;
    Sector sector_;
    std::size_t dimension_;
    std::vector<std::uint64_t> states_;
};

// Shared, immutable basis for (length, sector); cached per process.
std::shared_ptr<const SectorBasis> sector_basis(int length, Sector sector);

std::size_t sector_dimension(int length, Sector sector);

class StateVector {
public:
    StateVector(std::shared_ptr<const SectorBasis> basis, ComplexVector amplitudes);

    const SectorBasis& basis() const noexcept { return *basis_; }
    std::shared_ptr<const SectorBasis> basis_ptr() const noexcept { return basis_; }
    int length() const noexcept { return basis_->length(); }
    Sector sector() const noexcept { return basis_->sector(); }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(amplitudes_.size()); }

    const ComplexVector& amplitudes() const noexcept { return amplitudes_; }
    ComplexVector& amplitudes() noexcept { return amplitudes_; }

    double norm() const { return amplitudes_.norm(); }

private:
    std::shared_ptr<const SectorBasis> basis_;
    ComplexVector amplitudes_;
};

struct ClosestState {
    BasisState state;
    double probability;
};

struct RadialDistribution {
    std::vector<double> pi;
    BasisState anchor;
    double anchor_probability;
};

struct DisplacementValue {
    double mean_x;
    double second_moment;
    double delta_x2;
};

int hamming_distance(const BasisState& a, const BasisState& b);

ClosestState closest_fock_state(const StateVector& psi);

RadialDistribution radial_distribution(const StateVector& psi);

DisplacementValue displacement(const RadialDistribution& dist);

// Shorthand for displacement(radial_distribution(psi)).delta_x2.
double delta_x2(const StateVector& psi);

StateVector neel_state(int length, Sector sector);

// Product state |bits> embedded in the given sector.
StateVector basis_state_vector(const BasisState& z, Sector sector);

} // namespace fockscope
