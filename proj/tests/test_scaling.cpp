#include "fockscope/scaling.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "fockscope/error.hpp"

using namespace fockscope;

namespace {

ScalingDataset power_law_data(const PowerLawAnsatz& p, double step) {
    ScalingDataset d;
    for (int L : {8, 10, 12, 14, 16}) {
        SizeCurve c{L, {}, {}};
        for (double W = 2.0; W <= 8.0 + 1e-9; W += step) {
            const double x = (W - p.W_c) * std::pow(L, 1.0 / p.nu);
            c.W.push_back(W);
            c.Q.push_back(std::pow(L, p.lambda) * (1.0 + std::tanh(x / 6.0)));
        }
        d.curves.push_back(std::move(c));
    }
    return d;
}

ScalingDataset bkt_data(const BKTAnsatz& p, double step) {
    ScalingDataset d;
    for (int L : {8, 10, 12, 14, 16}) {
        SizeCurve c{L, {}, {}};
        for (double W = 0.55; W <= 10.0; W += step) {
            const double x = L * std::exp(-p.b / std::sqrt(std::abs(W - p.crossing_point(L))));
            c.W.push_back(W);
            c.Q.push_back(std::tanh(x / 3.0));
        }
        d.curves.push_back(std::move(c));
    }
    return d;
}

// Direct evaluation of the mean absolute pairwise residual for two sizes
// scaled with the power-law ansatz.
double two_curve_cost_oracle(const ScalingDataset& d, const PowerLawAnsatz& p) {
    double sum = 0.0;
    long n = 0;
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& ci = d.curves[i];
        const auto& cj = d.curves[1 - i];
        auto xs = [&](const SizeCurve& c, std::size_t k) { return (c.W[k] - p.W_c) * std::pow(c.L, 1.0 / p.nu); };
        for (std::size_t m = 0; m < cj.W.size(); ++m) {
            const double x = xs(cj, m);
            for (std::size_t k = 0; k + 1 < ci.W.size(); ++k) {
                const double a = xs(ci, k), b = xs(ci, k + 1);
                if (x >= a && x <= b) {
                    const double ya = ci.Q[k] / std::pow(ci.L, p.lambda);
                    const double yb = ci.Q[k + 1] / std::pow(ci.L, p.lambda);
                    const double g = ya + (yb - ya) * (x - a) / (b - a);
                    sum += std::abs(cj.Q[m] - std::pow(cj.L, p.lambda) * g);
                    ++n;
                    break;
                }
            }
        }
    }
    return sum / static_cast<double>(n);
}

} // namespace

TEST(Interpolation, inside_and_outside_hull) {
    const std::vector<double> x{0.0, 1.0, 3.0};
    const std::vector<double> y{0.0, 2.0, 0.0};
    EXPECT_DOUBLE_EQ(*interpolate_linear(x, y, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(*interpolate_linear(x, y, 2.0), 1.0);
    EXPECT_DOUBLE_EQ(*interpolate_linear(x, y, 3.0), 0.0);
    EXPECT_FALSE(interpolate_linear(x, y, -0.1).has_value());
    EXPECT_FALSE(interpolate_linear(x, y, 3.1).has_value());
}

TEST(Interpolation, unsorted_with_duplicates) {
    const std::vector<double> x{2.0, 0.0, 2.0, 1.0};
    const std::vector<double> y{4.0, 0.0, 2.0, 1.0};
    const LinearInterpolant f(x, y);
    EXPECT_DOUBLE_EQ(*f(2.0), 3.0);
    EXPECT_DOUBLE_EQ(*f(1.5), 2.0);
}

TEST(Cost, matches_direct_oracle) {
    ScalingDataset d;
    d.curves.push_back({8, {1.0, 2.0, 3.5, 4.0, 6.0}, {0.3, 0.9, 1.4, 2.2, 2.5}});
    d.curves.push_back({12, {1.5, 2.5, 3.0, 4.5, 5.0}, {0.5, 1.1, 1.3, 2.6, 3.0}});
    for (const PowerLawAnsatz p : {PowerLawAnsatz{3.0, 1.0, 0.0}, PowerLawAnsatz{3.2, 2.0, 0.4}}) {
        EXPECT_NEAR(cost_power_law(d, p), two_curve_cost_oracle(d, p), 1e-13);
    }
}

TEST(Cost, vanishes_for_linear_scaling_function) {
    const PowerLawAnsatz truth{4.0, 1.5, 0.7};
    ScalingDataset d;
    for (int L : {8, 12, 16}) {
        SizeCurve c{L, {}, {}};
        for (double W = 2.0; W <= 6.0; W += 0.5) {
            c.W.push_back(W);
            c.Q.push_back(std::pow(L, truth.lambda) * (3.0 + 0.5 * (W - truth.W_c) * std::pow(L, 1.0 / truth.nu)));
        }
        d.curves.push_back(std::move(c));
    }
    EXPECT_LT(cost_power_law(d, truth), 1e-12);
    EXPECT_GT(cost_power_law(d, {4.5, 1.5, 0.7}), 1e-3);
}

TEST(Cost, undefined_without_overlap) {
    ScalingDataset d;
    d.curves.push_back({8, {1, 2, 3, 4}, {1, 2, 3, 4}});
    d.curves.push_back({10, {10, 11, 12, 13}, {1, 2, 3, 4}});
    EXPECT_THROW(cost_power_law(d, {0.0, 1e3, 0.0}), UndefinedCostError);
    const std::vector<double> p{0.0, 1e3, 0.0};
    EXPECT_TRUE(std::isinf(collapse_cost(d, AnsatzKind::PowerLaw)(p)));
}

TEST(Cost, bkt_singular_points_excluded) {
    ScalingDataset d;
    d.curves.push_back({8, {1, 2, 3, 4}, {1, 2, 3, 4}});
    d.curves.push_back({10, {1, 2, 3, 4}, {1, 2, 3, 4}});
    const CostDetail c = cost_bkt_detail(d, {1.0, 2.0, 0.0});
    EXPECT_GE(c.excluded, 2);
    EXPECT_THROW(cost_bkt(d, {0.0, 2.0, 0.0}), DomainError);
    EXPECT_NEAR(bkt_correlation_length(3.0, 1.0, 2.0), std::exp(1.0), 1e-15);
}

TEST(Dataset, validation) {
    ScalingDataset one;
    one.curves.push_back({8, {1, 2, 3, 4}, {1, 2, 3, 4}});
    EXPECT_THROW(one.validate(), InsufficientDataError);
    ScalingDataset short_curve = one;
    short_curve.curves.push_back({10, {1, 2, 3}, {1, 2, 3}});
    EXPECT_THROW(short_curve.validate(), InsufficientDataError);
    ScalingDataset unsorted = one;
    unsorted.curves.push_back({10, {1, 3, 2, 4}, {1, 2, 3, 4}});
    EXPECT_THROW(unsorted.validate(), InvalidParameterError);
}

TEST(NelderMead, rosenbrock) {
    const CostFunction f = [](std::span<const double> x) {
        return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    const std::vector<double> steps{0.5, 0.5};
    NelderMeadSettings s;
    s.tolerance = 1e-14;
    s.max_evaluations = 20000;
    const auto r = nelder_mead(f, {-1.2, 1.0}, steps, s);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.x[0], 1.0, 1e-4);
    EXPECT_NEAR(r.x[1], 1.0, 1e-4);
}

TEST(Collapse, power_law_round_trip) {
    const PowerLawAnsatz truth{4.5, 1.2, 0.6};
    const ScalingDataset d = power_law_data(truth, 0.1);
    OptimizerSettings s;
    s.seed = 3;
    const CollapseResult r = optimize_collapse(d, AnsatzKind::PowerLaw, default_search_box(d, AnsatzKind::PowerLaw), s);
    EXPECT_NEAR(r.parameters[0], truth.W_c, 0.02);
    EXPECT_NEAR(r.parameters[1], truth.nu, 0.05);
    EXPECT_NEAR(r.parameters[2], truth.lambda, 0.02);
    EXPECT_GT(r.converged_restarts, 0);
    EXPECT_EQ(r.widths.size(), 3u);
    EXPECT_LT(r.R_star, 1e-2);
}

TEST(Collapse, bkt_round_trip) {
    const BKTAnsatz truth{1.5, 3.0, 0.1};
    const ScalingDataset d = bkt_data(truth, 0.1);
    OptimizerSettings s;
    s.seed = 4;
    const CollapseResult r = optimize_collapse(d, AnsatzKind::BKT, default_search_box(d, AnsatzKind::BKT), s);
    EXPECT_NEAR(r.parameters[0], truth.b, 0.1 * truth.b);
    EXPECT_NEAR(truth.crossing_point(12), r.parameters[1] + 12 * r.parameters[2], 0.1);
}

TEST(Collapse, deterministic_under_workers) {
    const ScalingDataset d = power_law_data({4.0, 1.0, 0.5}, 0.25);
    OptimizerSettings s;
    s.restarts = 8;
    const SearchBox box = default_search_box(d, AnsatzKind::PowerLaw);
    const CollapseResult a = optimize_collapse(d, AnsatzKind::PowerLaw, box, s);
    s.workers = 3;
    const CollapseResult b = optimize_collapse(d, AnsatzKind::PowerLaw, box, s);
    EXPECT_EQ(a.parameters, b.parameters);
    EXPECT_EQ(a.best_restart, b.best_restart);
}

TEST(Collapse, coordinates_follow_ansatz) {
    ScalingDataset d;
    d.curves.push_back({8, {1, 2, 3, 4}, {1, 2, 3, 4}});
    d.curves.push_back({16, {1, 2, 3, 4}, {2, 3, 4, 5}});
    const std::vector<double> p{2.0, 0.5, 1.0};
    const auto pts = collapsed_coordinates(d, AnsatzKind::PowerLaw, p);
    ASSERT_EQ(pts.size(), 8u);
    EXPECT_DOUBLE_EQ(pts[0].x, -64.0);
    EXPECT_DOUBLE_EQ(pts[0].y, 1.0 / 8.0);
    EXPECT_EQ(pts[4].L, 16);
}

TEST(Width, gaussian_cost_closed_form) {
    const double sigma = 0.37;
    const std::vector<double> m{2.0, 5.0};
    const CostFunction f = [&](std::span<const double> x) {
        return 0.2 * std::exp((x[1] - m[1]) * (x[1] - m[1]) / (2.0 * sigma * sigma));
    };
    const WidthEstimate w = estimate_width(f, m, 1);
    EXPECT_NEAR(w.width, sigma, 1e-12);
    EXPECT_EQ(w.eta_used, kDefaultEta);
    EXPECT_FALSE(w.lower_bound);
}

TEST(Width, doubling_on_flat_floor) {
    const std::vector<double> m{10.0};
    // Flat within 0.25 of the minimum, quadratic growth beyond.
    const CostFunction f = [](std::span<const double> x) {
        const double d = std::max(0.0, std::abs(x[0] - 10.0) - 0.25);
        return 1.0 + d * d;
    };
    const WidthEstimate w = estimate_width(f, m, 0);
    EXPECT_DOUBLE_EQ(w.eta_used, 0.04);
    EXPECT_TRUE(w.lower_bound);
    const double step = 0.4;
    EXPECT_NEAR(w.width, step / std::sqrt(2.0 * std::log(1.0 + 0.15 * 0.15)), 1e-12);
}

TEST(Width, completely_flat) {
    const std::vector<double> m{1.0};
    const WidthEstimate w = estimate_width([](std::span<const double>) { return 1.0; }, m, 0);
    EXPECT_TRUE(w.lower_bound);
    EXPECT_DOUBLE_EQ(w.eta_used, kDefaultEta * 128.0);
}

TEST(BetaFit, exact_power) {
    std::vector<SizePoint> pts;
    for (double L : {8.0, 10.0, 12.0, 14.0}) pts.push_back({L, 3.0 * L * L});
    const BetaFit f = fit_power_beta(pts);
    EXPECT_NEAR(f.beta, 2.0, 1e-12);
    EXPECT_NEAR(f.log_prefactor, std::log(3.0), 1e-10);
    EXPECT_NEAR(f.lo, 2.0, 1e-9);
    EXPECT_NEAR(f.hi, 2.0, 1e-9);
}

TEST(BetaFit, rejects_bad_input) {
    const std::vector<SizePoint> two{{8, 1}, {10, 2}};
    EXPECT_THROW(fit_power_beta(two), InsufficientDataError);
    const std::vector<SizePoint> neg{{8, 1}, {10, -2}, {12, 3}};
    EXPECT_THROW(fit_power_beta(neg), DomainError);
}

TEST(LogGrowth, exact_logarithm) {
    std::vector<double> t, y;
    for (double x = 1.0; x <= 1e4; x *= 1.3) {
        t.push_back(x);
        y.push_back(2.0 * std::log(x) + 1.0);
    }
    const LogGrowthFit f = fit_log_growth(t, y, {10.0, 1000.0});
    EXPECT_NEAR(f.slope, 2.0, 1e-12);
    EXPECT_NEAR(f.intercept, 1.0, 1e-10);
    EXPECT_NEAR(f.goodness, 1.0, 1e-12);
    EXPECT_THROW(fit_log_growth(t, y, {0.0, 10.0}), WindowError);
    EXPECT_THROW(fit_log_growth(t, y, {10.0, 11.0}), WindowError);
}

TEST(LogGrowth, interval_coverage) {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::vector<double> t;
    for (double x = 10.0; x <= 1000.0; x *= 1.25) t.push_back(x);
    const int trials = 2000;
    int covered = 0;
    for (int k = 0; k < trials; ++k) {
        std::vector<double> y;
        for (double x : t) y.push_back(0.8 * std::log(x) + noise(rng));
        const LogGrowthFit f = fit_log_growth(t, y, {10.0, 1000.0});
        covered += f.slope_lo <= 0.8 && 0.8 <= f.slope_hi;
    }
    // Binomial standard deviation at p = 0.95 is about 0.005 for 2000 trials.
    EXPECT_NEAR(static_cast<double>(covered) / trials, 0.95, 0.015);
}
