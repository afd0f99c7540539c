#include "fockscope/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "fockscope/error.hpp"
#include "fockscope/fock.hpp"

namespace fockscope {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double lerp_at(std::span<const double> times, std::span<const double> values, double t) {
    auto it = std::lower_bound(times.begin(), times.end(), t);
    const auto k = static_cast<std::size_t>(it - times.begin());
    if (it != times.end() && *it == t) return values[k];
    const double t0 = times[k - 1];
    const double t1 = times[k];
    const double w = (t - t0) / (t1 - t0);
    return values[k - 1] + w * (values[k] - values[k - 1]);
}

void check_sorted(std::span<const double> times) {
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) throw InvalidParameterError("recorded times must be strictly increasing");
    }
}

double refine_peak(std::span<const CurvePoint> c, std::size_t i) {
    const double x0 = c[i - 1].W, x1 = c[i].W, x2 = c[i + 1].W;
    const double y0 = c[i - 1].value, y1 = c[i].value, y2 = c[i + 1].value;
    const double denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    if (!(a < 0.0)) return x1;
    return std::clamp(-b / (2.0 * a), x0, x2);
}

} // namespace

std::string to_string(WindowRule rule) {
    switch (rule) {
    case WindowRule::Fixed: return "fixed";
    case WindowRule::Heisenberg: return "heisenberg";
    case WindowRule::Floquet: return "floquet";
    }
    return "unknown";
}

WindowRule window_rule_from_string(const std::string& s) {
    if (s == "fixed") return WindowRule::Fixed;
    if (s == "heisenberg") return WindowRule::Heisenberg;
    if (s == "floquet") return WindowRule::Floquet;
    throw InvalidParameterError("unknown window rule '" + s + "'");
}

Window WindowSpec::resolve(int L, double W) const {
    Window w;
    switch (rule) {
    case WindowRule::Fixed: w = fixed; break;
    case WindowRule::Heisenberg: {
        auto it = heisenberg.find(L);
        if (it == heisenberg.end()) throw WindowError("no Heisenberg-time fit for L = " + std::to_string(L));
        const double t_h = it->second.predict(W, L);
        w = {t_h, t_h + length};
        break;
    }
    case WindowRule::Floquet:
        w = L <= 16 ? Window{1e4, 2e4} : Window{3e4, 4e4};
        break;
    }
    if (!(w.t_f > w.t_i) || w.t_i < 0.0) throw WindowError("averaging window must satisfy 0 <= t_i < t_f");
    return w;
}

std::vector<double> TimeGridSpec::build(const Window& window, bool integer_periods) const {
    if (!(window_dt > 0.0)) throw InvalidParameterError("window_dt must be positive");
    // Window points are kept exactly; log points close to one are dropped.
    std::vector<double> exact{0.0};
    const auto steps = static_cast<long>(std::floor((window.t_f - window.t_i) / window_dt + 1e-9));
    for (long k = 0; k <= steps; ++k) exact.push_back(window.t_i + static_cast<double>(k) * window_dt);
    exact.push_back(window.t_f);
    std::vector<double> loose;
    if (n_log > 0) {
        if (!(t_min > 0.0) || !(t_max >= t_min)) throw InvalidParameterError("log grid needs 0 < t_min <= t_max");
        const double lmin = std::log(t_min);
        const double lmax = std::log(t_max);
        for (int k = 0; k < n_log; ++k) {
            const double f = n_log == 1 ? 0.0 : static_cast<double>(k) / (n_log - 1);
            loose.push_back(k == 0 ? t_min : (k == n_log - 1 ? t_max : std::exp(lmin + f * (lmax - lmin))));
        }
    }
    if (integer_periods) {
        for (double& x : exact) x = std::round(x);
        for (double& x : loose) x = std::round(x);
    }
    const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); };
    std::sort(exact.begin(), exact.end());
    std::vector<double> out;
    for (double x : exact) {
        if (out.empty() || !close(x, out.back())) out.push_back(x);
    }
    const std::size_t n_exact = out.size();
    for (double x : loose) {
        auto it = std::lower_bound(out.begin(), out.begin() + static_cast<long>(n_exact), x);
        const bool near = (it != out.begin() + static_cast<long>(n_exact) && close(x, *it)) ||
                          (it != out.begin() && close(x, *(it - 1)));
        if (!near) out.push_back(x);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(), close), out.end());
    return out;
}

void RunConfig::validate() const {
    if (n_realizations < 1) throw InvalidParameterError("n_realizations must be >= 1");
    if (W_grid.empty()) throw InvalidParameterError("W grid is empty");
    for (std::size_t i = 1; i < W_grid.size(); ++i) {
        if (!(W_grid[i] > W_grid[i - 1])) throw InvalidParameterError("W grid must be strictly increasing");
    }
    if (L_list.empty()) throw InvalidParameterError("L list is empty");
    if (workers < 1) throw InvalidParameterError("workers must be >= 1");
    krylov.validate();
}

bool PointResult::publishable() const {
    if (requested <= 0) return false;
    return static_cast<double>(requested - failed) >= min_completion * static_cast<double>(requested);
}

std::uint64_t derive_seed(std::uint64_t master, int L, std::size_t W_index, long realization) {
    std::uint64_t x = splitmix64(master);
    x = splitmix64(x ^ (0x100000001B3ULL * (static_cast<std::uint64_t>(L) + 1)));
    x = splitmix64(x ^ (0xC2B2AE3D27D4EB4FULL * (static_cast<std::uint64_t>(W_index) + 1)));
    x = splitmix64(x ^ (0x165667B19E3779F9ULL * (static_cast<std::uint64_t>(realization) + 1)));
    return x;
}

std::vector<double> run_realization(const ModelSpec& spec, std::span<const double> times, const KrylovConfig& krylov) {
    spec.validate();
    check_sorted(times);
    if (!times.empty() && times.front() < 0.0) throw InvalidParameterError("negative recording time");
    Rng rng(spec.seed);
    std::vector<double> out;
    out.reserve(times.size());

    if (spec.kind == ModelKind::Floquet) {
        const FloquetCircuit circuit = sample_floquet_circuit(spec, rng);
        FloquetPropagator prop(circuit);
        StateVector psi = neel_state(spec.L, Sector::Full);
        long now = 0;
        for (double t : times) {
            const auto n = std::lround(t);
            if (static_cast<double>(n) != t) throw InvalidParameterError("floquet recording times must be integers");
            prop.advance(psi.amplitudes(), n - now);
            now = n;
            out.push_back(delta_x2(psi));
        }
        return out;
    }

    const FieldRealization fields = sample_fields(spec, rng);
    const SparseHamiltonian H = build_model_hamiltonian(spec, fields);
    StateVector psi = neel_state(spec.L, spec.sector);
    if (H.dimension() <= std::min(krylov.dense_cap, kDenseEvolveCap)) {
        const DensePropagator dense(H);
        const ComplexVector psi0 = psi.amplitudes();
        for (double t : times) {
            psi.amplitudes() = dense.evolve(psi0, t);
            out.push_back(delta_x2(psi));
        }
        return out;
    }
    KrylovPropagator prop(H, krylov);
    double now = 0.0;
    for (double t : times) {
        prop.advance(psi.amplitudes(), t - now);
        now = t;
        out.push_back(delta_x2(psi));
    }
    return out;
}

AggregateSeries aggregate(std::span<const double> times, std::span<const std::vector<double>> traces) {
    AggregateSeries s;
    s.times.assign(times.begin(), times.end());
    s.count = static_cast<long>(traces.size());
    const std::size_t n = times.size();
    s.mean.assign(n, 0.0);
    s.stddev.assign(n, 0.0);
    if (traces.empty()) {
        std::fill(s.mean.begin(), s.mean.end(), std::numeric_limits<double>::quiet_NaN());
        std::fill(s.stddev.begin(), s.stddev.end(), std::numeric_limits<double>::quiet_NaN());
        return s;
    }
    for (const auto& tr : traces) {
        if (tr.size() != n) throw DimensionError("trace length differs from the time grid");
        for (std::size_t k = 0; k < n; ++k) s.mean[k] += tr[k];
    }
    const auto count = static_cast<double>(traces.size());
    for (double& m : s.mean) m /= count;
    for (const auto& tr : traces) {
        for (std::size_t k = 0; k < n; ++k) {
            const double d = tr[k] - s.mean[k];
            s.stddev[k] += d * d;
        }
    }
    for (double& v : s.stddev) v = std::sqrt(v / count);
    return s;
}

AggregateSeries merge(const AggregateSeries& a, const AggregateSeries& b) {
    if (a.count == 0) return b;
    if (b.count == 0) return a;
    if (a.times != b.times) throw DimensionError("cannot merge series recorded on different times");
    AggregateSeries out;
    out.times = a.times;
    out.count = a.count + b.count;
    const auto na = static_cast<double>(a.count);
    const auto nb = static_cast<double>(b.count);
    const double n = na + nb;
    out.mean.resize(a.times.size());
    out.stddev.resize(a.times.size());
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        const double delta = b.mean[k] - a.mean[k];
        out.mean[k] = (na * a.mean[k] + nb * b.mean[k]) / n;
        const double m2 = a.stddev[k] * a.stddev[k] * na + b.stddev[k] * b.stddev[k] * nb + delta * delta * na * nb / n;
        out.stddev[k] = std::sqrt(m2 / n);
    }
    return out;
}

double window_mean(std::span<const double> times, std::span<const double> values, const Window& window,
                   bool discrete) {
    if (times.size() != values.size()) throw DimensionError("times and values differ in length");
    if (!(window.t_f > window.t_i)) throw WindowError("empty averaging window");
    if (times.empty() || window.t_i < times.front() || window.t_f > times.back()) {
        throw WindowError("averaging window lies outside the recorded times");
    }
    if (discrete) {
        double sum = 0.0;
        long n = 0;
        for (std::size_t k = 0; k < times.size(); ++k) {
            if (times[k] >= window.t_i && times[k] <= window.t_f) {
                sum += values[k];
                ++n;
            }
        }
        if (n == 0) throw WindowError("no recorded points inside the averaging window");
        return sum / static_cast<double>(n);
    }
    double prev_t = window.t_i;
    double prev_y = lerp_at(times, values, window.t_i);
    double integral = 0.0;
    auto it = std::upper_bound(times.begin(), times.end(), window.t_i);
    for (; it != times.end() && *it < window.t_f; ++it) {
        const double y = values[static_cast<std::size_t>(it - times.begin())];
        integral += 0.5 * (y + prev_y) * (*it - prev_t);
        prev_t = *it;
        prev_y = y;
    }
    const double y_end = lerp_at(times, values, window.t_f);
    integral += 0.5 * (y_end + prev_y) * (window.t_f - prev_t);
    return integral / (window.t_f - window.t_i);
}

WindowAverage window_average(const AggregateSeries& series, const Window& window, bool discrete) {
    WindowAverage out;
    out.window = window;
    out.value = window_mean(series.times, series.mean, window, discrete);
    if (series.count > 1) {
        out.std_error = window_mean(series.times, series.stddev, window, discrete) /
                        std::sqrt(static_cast<double>(series.count - 1));
    }
    return out;
}

std::vector<RollingPoint> rolling_std(std::span<const double> trace, std::span<const double> times,
                                      double window_len) {
    if (!(window_len > 0.0)) throw InvalidParameterError("rolling window length must be positive");
    if (trace.size() != times.size()) throw DimensionError("trace and times differ in length");
    check_sorted(times);
    std::vector<RollingPoint> out;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double end = times[i] + window_len;
        double sum = 0.0;
        std::size_t j = i;
        for (; j < times.size() && times[j] <= end; ++j) sum += trace[j];
        const std::size_t n = j - i;
        if (n < 2) continue;
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t k = i; k < j; ++k) ss += (trace[k] - mean) * (trace[k] - mean);
        out.push_back({times[i], std::sqrt(ss / static_cast<double>(n))});
    }
    return out;
}

PeakEstimate peak_location(std::span<const CurvePoint> curve) {
    if (curve.size() < 3) throw InvalidParameterError("peak location needs at least 3 points");
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (!(curve[i].W > curve[i - 1].W)) throw InvalidParameterError("curve must be sorted by W");
    }
    double best = curve[0].value;
    for (const auto& p : curve) best = std::max(best, p.value);
    std::size_t first = curve.size();
    std::size_t last = 0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve[i].value == best) {
            first = std::min(first, i);
            last = i;
        }
    }
    PeakEstimate est;
    est.lo = curve[first].W;
    est.hi = curve[last].W;
    if (first != last) {
        est.plateau = true;
        est.W_star = 0.5 * (est.lo + est.hi);
        est.boundary = first == 0 || last + 1 == curve.size();
        return est;
    }
    if (first == 0 || first + 1 == curve.size()) {
        est.boundary = true;
        est.W_star = curve[first].W;
        return est;
    }
    est.W_star = refine_peak(curve, first);
    return est;
}

double peak_uncertainty(std::span<const CurvePoint> curve, std::span<const double> stderrs, int draws,
                        std::uint64_t seed) {
    if (stderrs.size() != curve.size()) throw DimensionError("one standard error per curve point required");
    if (draws < 2) throw InvalidParameterError("peak uncertainty needs at least 2 draws");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<CurvePoint> perturbed(curve.begin(), curve.end());
    double sum = 0.0;
    double sum2 = 0.0;
    for (int d = 0; d < draws; ++d) {
        for (std::size_t i = 0; i < curve.size(); ++i) perturbed[i].value = curve[i].value + stderrs[i] * normal(rng);
        const double w = peak_location(perturbed).W_star;
        sum += w;
        sum2 += w * w;
    }
    const double mean = sum / draws;
    return std::sqrt(std::max(0.0, sum2 / draws - mean * mean));
}

EnsembleResult run_ensemble(const RunConfig& cfg, const EnsembleCallbacks& callbacks) {
    cfg.validate();
    EnsembleResult result;
    std::mutex log_mutex;
    const bool floquet = cfg.model.kind == ModelKind::Floquet;

    for (int L : cfg.L_list) {
        for (std::size_t wi = 0; wi < cfg.W_grid.size(); ++wi) {
            if (callbacks.lookup) {
                if (auto done = callbacks.lookup(L, wi)) {
                    result.emplace(std::make_pair(L, wi), std::move(*done));
                    continue;
                }
            }
            const double W = cfg.W_grid[wi];
            ModelSpec spec = cfg.model;
            spec.L = L;
            spec.W = W;
            const Window window = cfg.window.resolve(L, W);
            const std::vector<double> times = cfg.time.build(window, floquet);

            const auto n = static_cast<std::size_t>(cfg.n_realizations);
            std::vector<std::optional<std::vector<double>>> traces(n);
            std::atomic<std::size_t> next{0};
            auto worker = [&] {
                for (std::size_t r = next++; r < n; r = next++) {
                    ModelSpec local = spec;
                    local.seed = derive_seed(cfg.master_seed, L, wi, static_cast<long>(r));
                    const auto start = std::chrono::steady_clock::now();
                    RealizationLog log{L, W, static_cast<long>(r), local.seed, 0.0, true, {}};
                    try {
                        traces[r] = run_realization(local, times, cfg.krylov);
                    } catch (const Error& e) {
                        log.ok = false;
                        log.error = e.what();
                    }
                    log.wall_seconds =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                    if (callbacks.on_realization) {
                        std::lock_guard lock(log_mutex);
                        callbacks.on_realization(log);
                    }
                }
            };
            const int pool = std::min<int>(cfg.workers, static_cast<int>(n));
            if (pool <= 1) {
                worker();
            } else {
                std::vector<std::thread> threads;
                for (int k = 0; k < pool; ++k) threads.emplace_back(worker);
                for (auto& t : threads) t.join();
            }

            std::vector<std::vector<double>> ok;
            ok.reserve(n);
            for (auto& tr : traces) {
                if (tr) ok.push_back(std::move(*tr));
            }
            PointResult point;
            point.L = L;
            point.W_index = wi;
            point.W = W;
            point.requested = cfg.n_realizations;
            point.failed = cfg.n_realizations - static_cast<long>(ok.size());
            point.min_completion = cfg.min_completion;
            point.series = aggregate(times, ok);
            point.window_average.L = L;
            point.window_average.W = W;
            point.window_average.window = window;
            if (ok.empty()) {
                point.window_average.value = std::numeric_limits<double>::quiet_NaN();
                point.window_average.std_error = std::numeric_limits<double>::quiet_NaN();
            } else {
                point.window_average.value = window_mean(times, point.series.mean, window, floquet);
                std::vector<double> per;
                per.reserve(ok.size());
                for (const auto& tr : ok) per.push_back(window_mean(times, tr, window, floquet));
                if (per.size() > 1) {
                    double m = 0.0;
                    for (double v : per) m += v;
                    m /= static_cast<double>(per.size());
                    double ss = 0.0;
                    for (double v : per) ss += (v - m) * (v - m);
                    const double sample_var = ss / static_cast<double>(per.size() - 1);
                    point.window_average.std_error = std::sqrt(sample_var / static_cast<double>(per.size()));
                }
            }
            if (callbacks.on_point) callbacks.on_point(point);
            result.emplace(std::make_pair(L, wi), std::move(point));
        }
    }
    return result;
}

} // namespace fockscope
