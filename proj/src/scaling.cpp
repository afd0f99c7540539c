#include "fockscope/scaling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "fockscope/error.hpp"

namespace fockscope {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ScaledCurve {
    int L;
    std::vector<double> x;
    std::vector<double> y; // interpolant ordinate
    std::vector<double> q; // raw observable at the same points
    long singular = 0;
};

// Shared pairwise residual: each size's interpolant is queried at every other
// size's collapse abscissae; predictions are mapped back to raw units by
// `unscale(L_j, g)`.
template <class Unscale>
CostDetail pairwise_residual(const std::vector<ScaledCurve>& curves, Unscale unscale) {
    CostDetail d;
    double sum = 0.0;
    for (const auto& c : curves) d.excluded += c.singular;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        if (curves[i].x.empty()) continue;
        const LinearInterpolant g(curves[i].x, curves[i].y);
        for (std::size_t j = 0; j < curves.size(); ++j) {
            if (i == j) continue;
            for (std::size_t n = 0; n < curves[j].x.size(); ++n) {
                const auto v = g(curves[j].x[n]);
                if (!v) {
                    ++d.excluded;
                    continue;
                }
                sum += std::abs(curves[j].q[n] - unscale(curves[j].L, *v));
                ++d.n_points;
            }
        }
    }
    if (d.n_points == 0) throw UndefinedCostError("no in-hull comparisons: collapse cost undefined");
    d.value = sum / static_cast<double>(d.n_points);
    return d;
}

std::vector<ScaledCurve> scale_power_law(const ScalingDataset& data, const PowerLawAnsatz& p) {
    std::vector<ScaledCurve> out;
    out.reserve(data.curves.size());
    for (const auto& c : data.curves) {
        ScaledCurve s{c.L, {}, {}, {}, 0};
        const double lx = std::pow(static_cast<double>(c.L), 1.0 / p.nu);
        const double ly = std::pow(static_cast<double>(c.L), p.lambda);
        for (std::size_t n = 0; n < c.W.size(); ++n) {
            s.x.push_back((c.W[n] - p.W_c) * lx);
            s.y.push_back(c.Q[n] / ly);
            s.q.push_back(c.Q[n]);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<ScaledCurve> scale_bkt(const ScalingDataset& data, const BKTAnsatz& p) {
    std::vector<ScaledCurve> out;
    out.reserve(data.curves.size());
    for (const auto& c : data.curves) {
        ScaledCurve s{c.L, {}, {}, {}, 0};
        const double w_star = p.crossing_point(c.L);
        for (std::size_t n = 0; n < c.W.size(); ++n) {
            const double gap = std::abs(c.W[n] - w_star);
            if (gap < kBktSingularGap) {
                ++s.singular;
                continue;
            }
            s.x.push_back(static_cast<double>(c.L) * std::exp(-p.b / std::sqrt(gap)));
            s.y.push_back(c.Q[n]);
            s.q.push_back(c.Q[n]);
        }
        out.push_back(std::move(s));
    }
    return out;
}

double t_quantile_975(long dof) {
    boost::math::students_t dist(static_cast<double>(dof));
    return boost::math::quantile(dist, 0.975);
}

struct Ols {
    double slope;
    double intercept;
    double slope_se;
    double sse;
    double sst;
};

Ols ordinary_least_squares(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw DomainError("least-squares fit needs at least two distinct abscissae");
    Ols r{};
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (r.intercept + r.slope * x[i]);
        sse += e * e;
    }
    r.sse = sse;
    r.sst = syy;
    r.slope_se = x.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
    return r;
}

} // namespace

void ScalingDataset::validate() const {
    if (curves.size() < 2) throw InsufficientDataError("scaling analysis needs at least 2 sizes");
    for (const auto& c : curves) {
        if (c.W.size() != c.Q.size()) throw DimensionError("W and Q arrays differ in length for L = " + std::to_string(c.L));
        if (c.W.size() < 4) {
            throw InsufficientDataError("scaling analysis needs at least 4 points for L = " + std::to_string(c.L));
        }
        for (std::size_t n = 1; n < c.W.size(); ++n) {
            if (!(c.W[n] > c.W[n - 1])) throw InvalidParameterError("W must be strictly increasing per size");
        }
        for (double q : c.Q) {
            if (!std::isfinite(q)) throw DomainError("non-finite observable in scaling dataset");
        }
    }
}

std::size_t ScalingDataset::n_points() const {
    std::size_t n = 0;
    for (const auto& c : curves) n += c.W.size();
    return n;
}

std::optional<double> interpolate_linear(std::span<const double> x, std::span<const double> y, double x0) {
    if (x.empty() || x.size() != y.size() || !std::isfinite(x0)) return std::nullopt;
    if (x0 < x.front() || x0 > x.back()) return std::nullopt;
    auto it = std::lower_bound(x.begin(), x.end(), x0);
    const auto k = static_cast<std::size_t>(it - x.begin());
    if (*it == x0) return y[k];
    const double w = (x0 - x[k - 1]) / (x[k] - x[k - 1]);
    return y[k - 1] + w * (y[k] - y[k - 1]);
}

LinearInterpolant::LinearInterpolant(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionError("interpolant abscissae and ordinates differ in length");
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    for (std::size_t k = 0; k < order.size();) {
        const double xk = x[order[k]];
        double sum = 0.0;
        std::size_t m = k;
        for (; m < order.size() && x[order[m]] == xk; ++m) sum += y[order[m]];
        if (std::isfinite(xk)) {
            x_.push_back(xk);
            y_.push_back(sum / static_cast<double>(m - k));
        }
        k = m;
    }
}

double bkt_correlation_length(double W, double b, double W_star) {
    return std::exp(b / std::sqrt(std::abs(W - W_star)));
}

CostDetail cost_power_law_detail(const ScalingDataset& data, const PowerLawAnsatz& p) {
    if (!(p.nu > 0.0)) throw DomainError("power-law ansatz needs nu > 0");
    return pairwise_residual(scale_power_law(data, p),
                             [&](int L, double g) { return std::pow(static_cast<double>(L), p.lambda) * g; });
}

CostDetail cost_bkt_detail(const ScalingDataset& data, const BKTAnsatz& p) {
    if (!(p.b > 0.0)) throw DomainError("BKT ansatz needs b > 0");
    return pairwise_residual(scale_bkt(data, p), [](int, double g) { return g; });
}

double cost_power_law(const ScalingDataset& data, const PowerLawAnsatz& p) { return cost_power_law_detail(data, p).value; }

double cost_bkt(const ScalingDataset& data, const BKTAnsatz& p) { return cost_bkt_detail(data, p).value; }

std::string to_string(AnsatzKind kind) { return kind == AnsatzKind::PowerLaw ? "power-law" : "bkt"; }

AnsatzKind ansatz_kind_from_string(const std::string& s) {
    if (s == "power-law" || s == "power_law" || s == "powerlaw") return AnsatzKind::PowerLaw;
    if (s == "bkt" || s == "BKT") return AnsatzKind::BKT;
    throw InvalidParameterError("unknown ansatz '" + s + "'");
}

std::vector<std::string> parameter_names(AnsatzKind kind) {
    if (kind == AnsatzKind::PowerLaw) return {"W_c", "nu", "lambda"};
    return {"b", "w0", "w1"};
}

bool SearchBox::contains(std::span<const double> x) const {
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(x[k] >= lo[k] && x[k] <= hi[k])) return false;
    }
    return true;
}

SearchBox default_search_box(const ScalingDataset& data, AnsatzKind kind) {
    double w_min = kInf;
    double w_max = -kInf;
    for (const auto& c : data.curves) {
        for (double w : c.W) {
            w_min = std::min(w_min, w);
            w_max = std::max(w_max, w);
        }
    }
    if (kind == AnsatzKind::PowerLaw) return {{w_min, 0.2, 1e-6}, {w_max, 8.0, 2.5}};
    int l_min = data.curves.front().L;
    int l_max = l_min;
    for (const auto& c : data.curves) {
        l_min = std::min(l_min, c.L);
        l_max = std::max(l_max, c.L);
    }
    // The crossing point may drift by at most the W range across the sizes.
    const double drift = l_max > l_min ? (w_max - w_min) / (l_max - l_min) : 2.0;
    return {{1e-3, w_min - (w_max - w_min), 0.0}, {40.0, w_max, drift}};
}

CostFunction collapse_cost(const ScalingDataset& data, AnsatzKind kind) {
    return [&data, kind](std::span<const double> p) -> double {
        try {
            if (kind == AnsatzKind::PowerLaw) return cost_power_law(data, {p[0], p[1], p[2]});
            return cost_bkt(data, {p[0], p[1], p[2]});
        } catch (const UndefinedCostError&) {
            return kInf;
        } catch (const DomainError&) {
            return kInf;
        }
    };
}

NelderMeadResult nelder_mead(const CostFunction& f, std::vector<double> start, std::span<const double> steps,
                             const NelderMeadSettings& settings) {
    const std::size_t dim = start.size();
    if (steps.size() != dim || dim == 0) throw InvalidParameterError("simplex steps must match the parameter count");
    std::vector<std::vector<double>> x(dim + 1, start);
    for (std::size_t k = 0; k < dim; ++k) x[k + 1][k] += steps[k];
    std::vector<double> fx(dim + 1);
    NelderMeadResult res;
    auto eval = [&](const std::vector<double>& p) {
        ++res.evaluations;
        const double v = f(p);
        return std::isnan(v) ? kInf : v;
    };
    for (std::size_t k = 0; k <= dim; ++k) fx[k] = eval(x[k]);

    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), trial(dim), trial2(dim);
    while (true) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
        {
            std::vector<std::vector<double>> xs(dim + 1);
            std::vector<double> fs(dim + 1);
            for (std::size_t k = 0; k <= dim; ++k) {
                xs[k] = x[order[k]];
                fs[k] = fx[order[k]];
            }
            x.swap(xs);
            fx.swap(fs);
        }
        double diameter = 0.0;
        for (std::size_t k = 1; k <= dim; ++k) {
            for (std::size_t d = 0; d < dim; ++d) {
                diameter = std::max(diameter, std::abs(x[k][d] - x[0][d]) / (1.0 + std::abs(x[0][d])));
            }
        }
        if (std::isfinite(fx[dim]) && fx[dim] - fx[0] <= settings.tolerance) {
            res.converged = true;
            break;
        }
        if (diameter <= settings.x_tolerance) {
            res.converged = std::isfinite(fx[0]);
            break;
        }
        if (res.evaluations >= settings.max_evaluations) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t k = 0; k < dim; ++k) {
            for (std::size_t d = 0; d < dim; ++d) centroid[d] += x[k][d] / static_cast<double>(dim);
        }
        for (std::size_t d = 0; d < dim; ++d) trial[d] = centroid[d] + (centroid[d] - x[dim][d]);
        const double fr = eval(trial);
        if (fr < fx[0]) {
            for (std::size_t d = 0; d < dim; ++d) trial2[d] = centroid[d] + 2.0 * (trial[d] - centroid[d]);
            const double fe = eval(trial2);
            if (fe < fr) {
                x[dim] = trial2;
                fx[dim] = fe;
            } else {
                x[dim] = trial;
                fx[dim] = fr;
            }
        } else if (fr < fx[dim - 1]) {
            x[dim] = trial;
            fx[dim] = fr;
        } else {
            const bool outside = fr < fx[dim];
            const auto& toward = outside ? trial : x[dim];
            for (std::size_t d = 0; d < dim; ++d) trial2[d] = centroid[d] + 0.5 * (toward[d] - centroid[d]);
            const double fc = eval(trial2);
            if (fc < (outside ? fr : fx[dim])) {
                x[dim] = trial2;
                fx[dim] = fc;
            } else {
                for (std::size_t k = 1; k <= dim; ++k) {
                    for (std::size_t d = 0; d < dim; ++d) x[k][d] = x[0][d] + 0.5 * (x[k][d] - x[0][d]);
                    fx[k] = eval(x[k]);
                }
            }
        }
    }
    res.x = x[0];
    res.value = fx[0];
    return res;
}

WidthEstimate estimate_width(const CostFunction& cost, std::span<const double> minimum, std::size_t index,
                             double eta) {
    if (index >= minimum.size()) throw InvalidParameterError("parameter index out of range");
    if (!(eta > 0.0)) throw InvalidParameterError("eta must be positive");
    const double r0 = cost(minimum);
    const double scale = minimum[index] != 0.0 ? minimum[index] : 1.0;
    std::vector<double> p(minimum.begin(), minimum.end());
    double e = eta;
    for (int attempt = 0; attempt < 8; ++attempt, e *= 2.0) {
        p[index] = minimum[index] + e * scale;
        const double r1 = cost(p);
        if (r1 > r0) {
            const double width = std::abs(e * scale) / std::sqrt(2.0 * std::log(r1 / r0));
            return {width, e, attempt > 0};
        }
    }
    e /= 2.0;
    return {std::abs(e * scale), e, true};
}

CollapseResult optimize_collapse(const ScalingDataset& data, AnsatzKind kind, const SearchBox& box,
                                 const OptimizerSettings& settings) {
    data.validate();
    const std::size_t dim = 3;
    if (box.lo.size() != dim || box.hi.size() != dim) throw InvalidParameterError("search box must have 3 parameters");
    for (std::size_t d = 0; d < dim; ++d) {
        if (!std::isfinite(box.lo[d]) || !std::isfinite(box.hi[d]) || !(box.hi[d] > box.lo[d])) {
            throw InvalidParameterError("search box must be finite and non-empty");
        }
    }
    if (settings.restarts < 1) throw InvalidParameterError("at least one restart required");

    const CostFunction raw = collapse_cost(data, kind);
    const CostFunction boxed = [&](std::span<const double> p) { return box.contains(p) ? raw(p) : kInf; };

    // Latin hypercube over the box, one stratum per restart and dimension.
    const auto n = static_cast<std::size_t>(settings.restarts);
    Rng rng(settings.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::vector<double>> starts(n, std::vector<double>(dim));
    for (std::size_t d = 0; d < dim; ++d) {
        std::vector<std::size_t> strata(n);
        std::iota(strata.begin(), strata.end(), 0);
        std::shuffle(strata.begin(), strata.end(), rng);
        for (std::size_t k = 0; k < n; ++k) {
            const double u = (static_cast<double>(strata[k]) + unit(rng)) / static_cast<double>(n);
            starts[k][d] = box.lo[d] + u * (box.hi[d] - box.lo[d]);
        }
    }

    auto steps_at = [&](const std::vector<double>& x, double frac) {
        std::vector<double> s(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            s[d] = frac * (box.hi[d] - box.lo[d]);
            if (x[d] + s[d] > box.hi[d]) s[d] = -s[d];
        }
        return s;
    };

    std::vector<NelderMeadResult> runs(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            runs[k] = nelder_mead(boxed, starts[k], steps_at(starts[k], 0.1), settings.nelder_mead);
        }
    };
    const int pool = std::min<int>(std::max(settings.workers, 1), static_cast<int>(n));
    if (pool <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int k = 0; k < pool; ++k) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    CollapseResult result;
    result.kind = kind;
    result.box = box;
    result.settings = settings;
    double best = kInf;
    for (std::size_t k = 0; k < n; ++k) {
        if (runs[k].converged) ++result.converged_restarts;
        if (runs[k].converged && runs[k].value < best) {
            best = runs[k].value;
            result.best_restart = static_cast<int>(k);
        }
    }
    if (result.best_restart < 0) {
        std::string trace;
        for (std::size_t k = 0; k < n; ++k) {
            trace += " [" + std::to_string(k) + ": R=" + std::to_string(runs[k].value) + ", evals=" +
                     std::to_string(runs[k].evaluations) + "]";
        }
        throw OptimizationError("no simplex restart converged:" + trace);
    }

    NelderMeadResult chosen = runs[static_cast<std::size_t>(result.best_restart)];
    const NelderMeadResult polish = nelder_mead(boxed, chosen.x, steps_at(chosen.x, 0.01), settings.nelder_mead);
    if (polish.converged && polish.value < chosen.value) chosen = polish;

    result.parameters = chosen.x;
    const CostDetail detail = kind == AnsatzKind::PowerLaw
                                  ? cost_power_law_detail(data, {chosen.x[0], chosen.x[1], chosen.x[2]})
                                  : cost_bkt_detail(data, {chosen.x[0], chosen.x[1], chosen.x[2]});
    result.R_star = detail.value;
    result.n_points = detail.n_points;
    result.excluded_points = detail.excluded;
    for (std::size_t d = 0; d < dim; ++d) result.widths.push_back(estimate_width(raw, chosen.x, d, settings.eta));
    return result;
}

std::vector<CollapsedPoint> collapsed_coordinates(const ScalingDataset& data, AnsatzKind kind,
                                                  std::span<const double> parameters) {
    if (parameters.size() != 3) throw InvalidParameterError("collapse needs 3 parameters");
    const auto curves = kind == AnsatzKind::PowerLaw
                            ? scale_power_law(data, {parameters[0], parameters[1], parameters[2]})
                            : scale_bkt(data, {parameters[0], parameters[1], parameters[2]});
    std::vector<CollapsedPoint> out;
    for (const auto& c : curves) {
        for (std::size_t n = 0; n < c.x.size(); ++n) out.push_back({c.x[n], c.y[n], c.L});
    }
    return out;
}

BetaFit fit_power_beta(std::span<const SizePoint> points) {
    if (points.size() < 3) throw InsufficientDataError("power-law fit needs at least 3 sizes");
    std::vector<double> x, y;
    for (const auto& p : points) {
        if (!(p.L > 0.0) || !(p.value > 0.0)) throw DomainError("power-law fit needs positive sizes and values");
        x.push_back(std::log(p.L));
        y.push_back(std::log(p.value));
    }
    const Ols ols = ordinary_least_squares(x, y);
    const double half = t_quantile_975(static_cast<long>(points.size()) - 2) * ols.slope_se;
    return {ols.slope, ols.slope - half, ols.slope + half, ols.intercept};
}

LogGrowthFit fit_log_growth(std::span<const double> times, std::span<const double> values, const Window& window) {
    if (times.size() != values.size()) throw DimensionError("times and values differ in length");
    if (!(window.t_i > 0.0) || !(window.t_f > window.t_i)) throw WindowError("log fit window needs 0 < t_i < t_f");
    std::vector<double> x, y;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] >= window.t_i && times[k] <= window.t_f) {
            x.push_back(std::log(times[k]));
            y.push_back(values[k]);
        }
    }
    if (x.size() < 3) throw WindowError("log fit needs at least 3 points in the window");
    const Ols ols = ordinary_least_squares(x, y);
    LogGrowthFit fit;
    fit.slope = ols.slope;
    fit.intercept = ols.intercept;
    fit.n_points = static_cast<long>(x.size());
    fit.goodness = ols.sst > 0.0 ? 1.0 - ols.sse / ols.sst : (ols.sse == 0.0 ? 1.0 : 0.0);
    const double half = t_quantile_975(fit.n_points - 2) * ols.slope_se;
    fit.slope_lo = ols.slope - half;
    fit.slope_hi = ols.slope + half;
    return fit;
}

} // namespace fockscope
