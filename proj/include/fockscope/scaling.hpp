#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fockscope/ensemble.hpp"

namespace fockscope {

struct SizeCurve {
    int L = 0;
    std::vector<double> W;
    std::vector<double> Q;
};

struct ScalingDataset {
    std::vector<SizeCurve> curves;

    // >= 2 sizes, >= 4 points each, strictly increasing W per size.
    void validate() const;
    std::size_t n_points() const;
};

// Piecewise-linear interpolation on sorted knots; nullopt outside the hull.
std::optional<double> interpolate_linear(std::span<const double> x, std::span<const double> y, double x0);

// Interpolant over unsorted samples. Samples sharing an abscissa are merged
// into their mean so the knots are strictly increasing.
class LinearInterpolant {
public:
    LinearInterpolant(std::span<const double> x, std::span<const double> y);

    std::optional<double> operator()(double x0) const { return interpolate_linear(x_, y_, x0); }
    bool empty() const noexcept { return x_.empty(); }

private:
    std::vector<double> x_;
    std::vector<double> y_;
};

struct PowerLawAnsatz {
    double W_c = 0.0;
    double nu = 1.0;
    double lambda = 0.0;
};

struct BKTAnsatz {
    double b = 1.0;
    double w0 = 0.0;
    double w1 = 0.0;

    double crossing_point(int L) const { return w0 + w1 * L; }
};

inline constexpr double kBktSingularGap = 1e-6;

// exp(b / sqrt|W - W*|)
double bkt_correlation_length(double W, double b, double W_star);

struct CostDetail {
    double value = 0.0;
    long n_points = 0; // in-hull comparisons entering the mean
    long excluded = 0; // out-of-hull comparisons plus points at the BKT singularity
};

CostDetail cost_power_law_detail(const ScalingDataset& data, const PowerLawAnsatz& p);
CostDetail cost_bkt_detail(const ScalingDataset& data, const BKTAnsatz& p);

double cost_power_law(const ScalingDataset& data, const PowerLawAnsatz& p);
double cost_bkt(const ScalingDataset& data, const BKTAnsatz& p);

enum class AnsatzKind { PowerLaw, BKT };

std::string to_string(AnsatzKind kind);
AnsatzKind ansatz_kind_from_string(const std::string& s);

// Parameter names in optimizer order: (W_c, nu, lambda) or (b, w0, w1).
std::vector<std::string> parameter_names(AnsatzKind kind);

struct SearchBox {
    std::vector<double> lo;
    std::vector<double> hi;

    bool contains(std::span<const double> x) const;
};

// Default boxes: lambda in (0, 2.5], nu in [0.2, 8], b in (0, 40]; W_c, W* and the W* drift from the data.
SearchBox default_search_box(const ScalingDataset& data, AnsatzKind kind);

using CostFunction = std::function<double(std::span<const double>)>;

struct NelderMeadSettings {
    double tolerance = 1e-8;  // spread of cost values across the simplex
    double x_tolerance = 1e-10;
    int max_evaluations = 6000;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

NelderMeadResult nelder_mead(const CostFunction& f, std::vector<double> start, std::span<const double> steps,
                             const NelderMeadSettings& settings = {});

struct WidthEstimate {
    double width = 0.0;
    double eta_used = 0.0;
    bool lower_bound = false; // flat minimum: the cost did not rise at the requested eta
};

inline constexpr double kDefaultEta = 0.01;

// eta*p * [2 ln(R(p + eta*p) / R(p))]^(-1/2) for parameter `index`.
WidthEstimate estimate_width(const CostFunction& cost, std::span<const double> minimum, std::size_t index,
                             double eta = kDefaultEta);

struct OptimizerSettings {
    int restarts = 32;
    std::uint64_t seed = 0;
    NelderMeadSettings nelder_mead;
    double eta = kDefaultEta;
    int workers = 1;
};

struct CollapseResult {
    AnsatzKind kind = AnsatzKind::PowerLaw;
    std::vector<double> parameters;
    double R_star = 0.0;
    std::vector<WidthEstimate> widths;
    long n_points = 0;
    long excluded_points = 0;
    int best_restart = -1;
    int converged_restarts = 0;
    SearchBox box;
    OptimizerSettings settings;
};

CostFunction collapse_cost(const ScalingDataset& data, AnsatzKind kind);

// Multi-start simplex minimization of the collapse cost; starts are a
// Latin-hypercube sample of the search box.
CollapseResult optimize_collapse(const ScalingDataset& data, AnsatzKind kind, const SearchBox& box,
                                 const OptimizerSettings& settings = {});

struct CollapsedPoint {
    double x;
    double y;
    int L;
};

std::vector<CollapsedPoint> collapsed_coordinates(const ScalingDataset& data, AnsatzKind kind,
                                                  std::span<const double> parameters);

struct SizePoint {
    double L;
    double value;
};

struct BetaFit {
    double beta = 0.0;
    double lo = 0.0; // 95% confidence interval
    double hi = 0.0;
    double log_prefactor = 0.0;
};

BetaFit fit_power_beta(std::span<const SizePoint> points);

struct LogGrowthFit {
    double slope = 0.0;
    double intercept = 0.0;
    double goodness = 0.0; // coefficient of determination
    double slope_lo = 0.0; // 95% confidence interval
    double slope_hi = 0.0;
    long n_points = 0;
};

LogGrowthFit fit_log_growth(std::span<const double> times, std::span<const double> values, const Window& window);

} // namespace fockscope
