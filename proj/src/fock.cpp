#include "fockscope/fock.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>

#include "fockscope/error.hpp"

namespace fockscope {

namespace {

constexpr double kNormTolerance = 1e-6;

std::uint64_t low_mask(int length) {
    return length == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << length) - 1;
}

void check_length(int length) {
    if (length < 2 || length > kMaxSites) {
        throw DimensionError("site count must lie in [2, 64], got " + std::to_string(length));
    }
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Total probability of psi; rejects zero and grossly unnormalized vectors.
double checked_total_probability(const StateVector& psi) {
    const double total = psi.amplitudes().squaredNorm();
    if (!(total > 0.0)) throw InvalidStateError("state vector is zero");
    if (std::abs(total - 1.0) > kNormTolerance) {
        throw InvalidStateError("state vector is not normalized (norm^2 = " + std::to_string(total) + ")");
    }
    return total;
}

} // namespace

std::string to_string(Sector s) { return s == Sector::Full ? "full" : "sz-zero"; }

Sector sector_from_string(const std::string& s) {
    if (s == "full") return Sector::Full;
    if (s == "sz-zero" || s == "sz0") return Sector::SzZero;
    throw SectorError("unknown sector '" + s + "'");
}

BasisState::BasisState(std::uint64_t bits, int length) : bits_(bits), length_(length) {
    check_length(length);
    if ((bits & ~low_mask(length)) != 0) {
        throw DimensionError("bitstring index exceeds 2^L for L = " + std::to_string(length));
    }
}

int BasisState::spin(int site) const {
    if (site < 0 || site >= length_) throw DimensionError("site index out of range");
    return (bits_ >> (length_ - 1 - site)) & 1U ? +1 : -1;
}

BasisState BasisState::complement() const { return {~bits_ & low_mask(length_), length_}; }

std::string BasisState::to_string() const {
    std::string s(static_cast<std::size_t>(length_), '0');
    for (int site = 0; site < length_; ++site) {
        if (spin(site) > 0) s[static_cast<std::size_t>(site)] = '1';
    }
    return s;
}

SectorBasis::SectorBasis(int length, Sector sector) : length_(length), sector_(sector) {
    check_length(length);
    if (sector == Sector::Full) {
        if (length > 40) throw CapacityError("full Fock space too large to enumerate");
        dimension_ = std::size_t{1} << length;
        return;
    }
    if (length % 2 != 0) throw SectorError("sz-zero sector requires even L, got " + std::to_string(length));
    const double dim = binomial(length, length / 2);
    if (dim > 1e9) throw CapacityError("sz-zero sector too large to enumerate");
    states_.reserve(static_cast<std::size_t>(dim));
    // Gosper's hack: successive integers with the same popcount, ascending.
    std::uint64_t v = (std::uint64_t{1} << (length / 2)) - 1;
    const std::uint64_t limit = low_mask(length);
    while (v <= limit) {
        states_.push_back(v);
        const std::uint64_t t = v | (v - 1);
        if (t == ~std::uint64_t{0}) break;
        v = (t + 1) | (((~t & -~t) - 1) >> (std::countr_zero(v) + 1));
    }
    dimension_ = states_.size();
}

std::optional<std::size_t> SectorBasis::index_of(std::uint64_t bits) const {
    if (sector_ == Sector::Full) {
        if (bits >= dimension_) return std::nullopt;
        return static_cast<std::size_t>(bits);
    }
    auto it = std::lower_bound(states_.begin(), states_.end(), bits);
    if (it == states_.end() || *it != bits) return std::nullopt;
    return static_cast<std::size_t>(it - states_.begin());
}

std::shared_ptr<const SectorBasis> sector_basis(int length, Sector sector) {
    static std::mutex mutex;
    static std::map<std::pair<int, Sector>, std::shared_ptr<const SectorBasis>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{length, sector}];
    if (!slot) slot = std::make_shared<const SectorBasis>(length, sector);
    return slot;
}

std::size_t sector_dimension(int length, Sector sector) {
    check_length(length);
    if (sector == Sector::Full) return length >= 63 ? ~std::size_t{0} : std::size_t{1} << length;
    if (length % 2 != 0) throw SectorError("sz-zero sector requires even L");
    return static_cast<std::size_t>(std::llround(binomial(length, length / 2)));
}

StateVector::StateVector(std::shared_ptr<const SectorBasis> basis, ComplexVector amplitudes)
    : basis_(std::move(basis)), amplitudes_(std::move(amplitudes)) {
    if (!basis_) throw DimensionError("state vector needs a basis");
    if (static_cast<std::size_t>(amplitudes_.size()) != basis_->dimension()) {
        throw DimensionError("amplitude count " + std::to_string(amplitudes_.size()) +
                             " does not match sector dimension " + std::to_string(basis_->dimension()));
    }
}

int hamming_distance(const BasisState& a, const BasisState& b) {
    if (a.length() != b.length()) {
        throw DimensionError("hamming distance between states of length " + std::to_string(a.length()) +
                             " and " + std::to_string(b.length()));
    }
    return std::popcount(a.bits() ^ b.bits());
}

ClosestState closest_fock_state(const StateVector& psi) {
    const double total = checked_total_probability(psi);
    const auto& amp = psi.amplitudes();
    const auto& basis = psi.basis();
    // Strict comparison keeps the first (lowest-index) maximum; sector
    // positions are in increasing bitstring order so this is also the lowest
    // integer bitstring.
    std::size_t best = 0;
    double best_p = std::norm(amp[0]);
    for (Eigen::Index i = 1; i < amp.size(); ++i) {
        const double p = std::norm(amp[i]);
        if (p > best_p) {
            best_p = p;
            best = static_cast<std::size_t>(i);
        }
    }
    return {BasisState(basis.state(best), psi.length()), best_p / total};
}

RadialDistribution radial_distribution(const StateVector& psi) {
    const ClosestState closest = closest_fock_state(psi);
    const double total = psi.amplitudes().squaredNorm();
    const auto& amp = psi.amplitudes();
    const auto& basis = psi.basis();
    const std::uint64_t anchor = closest.state.bits();

    std::vector<double> pi(static_cast<std::size_t>(psi.length()) + 1, 0.0);
    for (Eigen::Index i = 0; i < amp.size(); ++i) {
        const int x = std::popcount(basis.state(static_cast<std::size_t>(i)) ^ anchor);
        pi[static_cast<std::size_t>(x)] += std::norm(amp[i]);
    }
    for (double& p : pi) p /= total;
    pi[0] = closest.probability;
    return {std::move(pi), closest.state, closest.probability};
}

DisplacementValue displacement(const RadialDistribution& dist) {
    double sum = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
    for (std::size_t x = 0; x < dist.pi.size(); ++x) {
        const double p = dist.pi[x];
        if (p < 0.0) throw InvalidDistributionError("negative radial probability");
        sum += p;
        m1 += static_cast<double>(x) * p;
        m2 += static_cast<double>(x * x) * p;
    }
    if (std::abs(sum - 1.0) > 1e-10) {
        throw InvalidDistributionError("radial distribution sums to " + std::to_string(sum));
    }
    const double var = m2 - m1 * m1;
    return {m1, m2, var < 0.0 ? 0.0 : var};
}

double delta_x2(const StateVector& psi) { return displacement(radial_distribution(psi)).delta_x2; }

StateVector basis_state_vector(const BasisState& z, Sector sector) {
    auto basis = sector_basis(z.length(), sector);
    const auto index = basis->index_of(z.bits());
    if (!index) throw SectorError("basis state " + z.to_string() + " lies outside the " + to_string(sector) + " sector");
    ComplexVector amp = ComplexVector::Zero(static_cast<Eigen::Index>(basis->dimension()));
    amp[static_cast<Eigen::Index>(*index)] = 1.0;
    return {std::move(basis), std::move(amp)};
}

StateVector neel_state(int length, Sector sector) {
    check_length(length);
    if (sector == Sector::SzZero && length % 2 != 0) {
        throw SectorError("Neel state in the sz-zero sector needs even L, got " + std::to_string(length));
    }
    // z_j = (-1)^(j+1): sites j = 1, 3, 5, ... are up.
    std::uint64_t bits = 0;
    for (int site = 0; site < length; site += 2) bits |= std::uint64_t{1} << (length - 1 - site);
    return basis_state_vector(BasisState(bits, length), sector);
}

} // namespace fockscope
