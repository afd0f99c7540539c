#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fockscope/dynamics.hpp"
#include "fockscope/models.hpp"

namespace fockscope {

struct Window {
    double t_i = 0.0;
    double t_f = 0.0;
};

enum class WindowRule {
    Fixed,      // [t_i, t_f] as given
    Heisenberg, // [t_H(L, W), t_H + length] with t_H from a per-L fit
    Floquet,    // [1e4, 2e4] for L <= 16, [3e4, 4e4] beyond
};

std::string to_string(WindowRule rule);
WindowRule window_rule_from_string(const std::string& s);

struct WindowSpec {
    WindowRule rule = WindowRule::Fixed;
    Window fixed{10.0, 1000.0};
    double length = 100.0;
    std::map<int, HeisenbergFit> heisenberg; // keyed by L

    Window resolve(int L, double W) const;
};

// Recording times: {0} + log-spaced points on [t_min, t_max] + a uniform grid
// with spacing dt over the averaging window. Floquet grids round to integer
// periods.
struct TimeGridSpec {
    double t_min = 0.1;
    double t_max = 1000.0;
    int n_log = 40;
    double window_dt = 1.0;

    std::vector<double> build(const Window& window, bool integer_periods) const;
};

struct AggregateSeries {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> stddev; // population standard deviation across realizations
    long count = 0;
};

struct WindowAverage {
    int L = 0;
    double W = 0.0;
    Window window;
    double value = 0.0;
    double std_error = 0.0;
};

struct RunConfig {
    ModelSpec model; // kind, J, sector, single-qubit mode; L, W and seed are filled per point
    std::vector<double> W_grid;
    std::vector<int> L_list;
    long n_realizations = 1;
    TimeGridSpec time;
    WindowSpec window;
    std::uint64_t master_seed = 0;
    KrylovConfig krylov;
    int workers = 1;
    double min_completion = 0.95;

    void validate() const;
};

struct PointResult {
    int L = 0;
    std::size_t W_index = 0;
    double W = 0.0;
    AggregateSeries series;
    WindowAverage window_average;
    long requested = 0;
    long failed = 0;
    double min_completion = 0.95;

    bool publishable() const;
};

struct RealizationLog {
    int L;
    double W;
    long index;
    std::uint64_t seed;
    double wall_seconds;
    bool ok;
    std::string error;
};

struct EnsembleCallbacks {
    std::function<void(const RealizationLog&)> on_realization;
    std::function<void(const PointResult&)> on_point;
    // Returning a result skips the computation of that point (resume support).
    std::function<std::optional<PointResult>(int L, std::size_t W_index)> lookup;
};

using EnsembleResult = std::map<std::pair<int, std::size_t>, PointResult>;

// Counter-based stream seed: adding W points or realizations never reshuffles
// the streams already in use.
std::uint64_t derive_seed(std::uint64_t master, int L, std::size_t W_index, long realization);

// Delta X^2 of the Neel quench at each recorded time (periods for floquet).
std::vector<double> run_realization(const ModelSpec& spec, std::span<const double> times,
                                    const KrylovConfig& krylov = {});

EnsembleResult run_ensemble(const RunConfig& cfg, const EnsembleCallbacks& callbacks = {});

// Mean and population std per time point, in trace order.
AggregateSeries aggregate(std::span<const double> times, std::span<const std::vector<double>> traces);

// Count-weighted merge of two partial ensembles over the same times.
AggregateSeries merge(const AggregateSeries& a, const AggregateSeries& b);

// Time average over the window: trapezoidal integral of the mean divided by
// the window length, or the plain mean of recorded points when discrete.
WindowAverage window_average(const AggregateSeries& series, const Window& window, bool discrete = false);

// Same rule applied to one trace.
double window_mean(std::span<const double> times, std::span<const double> values, const Window& window,
                   bool discrete = false);

struct RollingPoint {
    double t;
    double stddev;
};

std::vector<RollingPoint> rolling_std(std::span<const double> trace, std::span<const double> times,
                                      double window_len);

struct CurvePoint {
    double W;
    double value;
};

struct PeakEstimate {
    double W_star = 0.0;
    double lo = 0.0; // plateau interval when several points share the maximum
    double hi = 0.0;
    bool boundary = false;
    bool plateau = false;
};

PeakEstimate peak_location(std::span<const CurvePoint> curve);

// Spread of the refined peak under Gaussian perturbation of each point by its
// standard error.
double peak_uncertainty(std::span<const CurvePoint> curve, std::span<const double> stderrs, int draws,
                        std::uint64_t seed);

} // namespace fockscope
