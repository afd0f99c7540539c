#include "fockscope/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fockscope/error.hpp"
#include "fockscope/io.hpp"

namespace fockscope {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kHeisenbergSalt = 0x48454953454E4245ULL;

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string out_dir(const CommandOptions& options, const AppConfig& cfg) {
    return options.out_dir.empty() ? cfg.output_dir : options.out_dir;
}

template <class F>
void parallel_for(std::size_t n, int workers, F f) {
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (std::size_t k = next++; k < n; k = next++) f(k);
    };
    const int pool = std::min<int>(workers, static_cast<int>(n));
    if (pool <= 1) {
        run();
        return;
    }
    std::vector<std::thread> threads;
    for (int k = 0; k < pool; ++k) threads.emplace_back(run);
    for (auto& t : threads) t.join();
}

// Maps library errors onto the exit-code contract.
template <class F>
int guarded(F f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kExitConfig;
    } catch (const InsufficientDataError& e) {
        fmt::print(stderr, "insufficient data: {}\n", e.what());
        return kExitInsufficientData;
    } catch (const Error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitFailure;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitFailure;
    }
}

std::string series_name(int L, double W) { return fmt::format("series/L{}_W{}.csv", L, W); }

Json heisenberg_manifest(const AppConfig& cfg) {
    const HeisenbergSettings& h = cfg.heisenberg;
    return {{"code_version", kCodeVersion},
            {"kind", to_string(cfg.run.model.kind)},
            {"J", cfg.run.model.J},
            {"sector", to_string(cfg.run.model.sector)},
            {"L_list", h.L_list.empty() ? cfg.run.L_list : h.L_list},
            {"W_grid", h.W_grid.empty() ? cfg.run.W_grid : h.W_grid},
            {"n_realizations", h.n_realizations},
            {"master_seed", cfg.run.master_seed},
            {"center_fraction", h.center_fraction},
            {"ed_cap", h.ed_cap},
            {"gauge_b", h.gauge_b}};
}

Json heisenberg_fits_json(const std::map<int, HeisenbergFit>& fits) {
    Json j = Json::object();
    for (const auto& [L, f] : fits) j[std::to_string(L)] = heisenberg_fit_json(f);
    return j;
}

std::map<int, HeisenbergFit> load_heisenberg_fits(const std::string& path) {
    Json j;
    try {
        j = Json::parse(read_text_file(path));
    } catch (const Json::exception& e) {
        throw ConfigError("cannot parse Heisenberg fit file '" + path + "': " + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    std::map<int, HeisenbergFit> out;
    for (const auto& [key, value] : j.at("fits").items()) out[std::stoi(key)] = heisenberg_fit_from_json(value);
    return out;
}

void write_checksums(const std::string& dir, const std::string& manifest_hash, const std::vector<std::string>& files,
                     const std::string& name) {
    Json sums = Json::object();
    for (const auto& f : files) sums[f] = sha256_file((fs::path(dir) / f).string());
    write_text_file((fs::path(dir) / name).string(), dump_json({{"manifest_sha256", manifest_hash}, {"files", sums}}));
}

} // namespace

AppConfig load_app_config(const CommandOptions& options) {
    ConfigDocument doc;
    if (!options.config_path.empty()) doc = load_config_file(options.config_path);
    if (const char* env = std::getenv("FOCKSCOPE_SEED"); env && *env) {
        ConfigValue v;
        try {
            v = parse_config_value(env);
        } catch (const ConfigError&) {
            throw ConfigError(std::string("FOCKSCOPE_SEED is not an integer: '") + env + "'");
        }
        if (v.type != ConfigValue::Type::Integer) {
            throw ConfigError(std::string("FOCKSCOPE_SEED is not an integer: '") + env + "'");
        }
        doc.set("ensemble.master_seed", v);
    }
    for (const auto& o : options.overrides) apply_override(doc, o);
    return build_app_config(doc);
}

HeisenbergTable compute_heisenberg_table(const AppConfig& cfg, int workers) {
    const HeisenbergSettings& h = cfg.heisenberg;
    const std::vector<int> sizes = h.L_list.empty() ? cfg.run.L_list : h.L_list;
    const std::vector<double> grid = h.W_grid.empty() ? cfg.run.W_grid : h.W_grid;
    if (cfg.run.model.kind == ModelKind::Floquet) {
        throw ConfigError("Heisenberg times need a Hamiltonian model kind, not floquet");
    }
    for (int L : sizes) {
        const std::size_t dim = sector_dimension(L, cfg.run.model.sector);
        if (dim > h.ed_cap) {
            throw ConfigError(fmt::format("L = {} has sector dimension {} above heisenberg.ed_cap = {}", L, dim, h.ed_cap));
        }
    }
    for (double W : grid) {
        if (!(W > 0.0)) throw ConfigError("Heisenberg-time fits need W > 0");
    }

    HeisenbergTable table;
    for (int L : sizes) {
        std::vector<HeisenbergSample> samples;
        for (std::size_t wi = 0; wi < grid.size(); ++wi) {
            const auto n = static_cast<std::size_t>(h.n_realizations);
            std::vector<double> values(n);
            parallel_for(n, workers, [&](std::size_t r) {
                ModelSpec spec = cfg.run.model;
                spec.L = L;
                spec.W = grid[wi];
                spec.seed = derive_seed(cfg.run.master_seed ^ kHeisenbergSalt, L, wi, static_cast<long>(r));
                Rng rng(spec.seed);
                const FieldRealization fields = sample_fields(spec, rng);
                const SparseHamiltonian H = build_model_hamiltonian(spec, fields);
                values[r] = heisenberg_time(full_spectrum(H, h.ed_cap), h.center_fraction);
            });
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= static_cast<double>(n);
            double ss = 0.0;
            for (double v : values) ss += (v - mean) * (v - mean);
            table.rows.push_back({L, grid[wi], mean, std::sqrt(ss / static_cast<double>(n)), static_cast<long>(n)});
            samples.push_back({grid[wi], mean});
            fmt::print(stderr, "t_H L={} W={} mean={:.6g}\n", L, grid[wi], mean);
        }
        HeisenbergFitOptions fo;
        fo.gauge_b = h.gauge_b;
        table.fits[L] = fit_heisenberg_time(samples, L, fo);
    }
    return table;
}

int cmd_simulate(const CommandOptions& options) {
    return guarded([&] {
        AppConfig cfg = load_app_config(options);
        const std::string dir = out_dir(options, cfg);
        const int workers = resolve_workers(options.workers);
        RunConfig& run = cfg.run;
        run.workers = workers;

        if (run.window.rule == WindowRule::Heisenberg) {
            if (!cfg.heisenberg.fit_path.empty()) {
                run.window.heisenberg = load_heisenberg_fits(cfg.heisenberg.fit_path);
            } else {
                AppConfig hcfg = cfg;
                hcfg.heisenberg.L_list = run.L_list;
                run.window.heisenberg = compute_heisenberg_table(hcfg, workers).fits;
            }
            for (int L : run.L_list) {
                if (!run.window.heisenberg.count(L)) throw ConfigError(fmt::format("no Heisenberg-time fit for L = {}", L));
            }
        }

        Json manifest = {{"code_version", kCodeVersion}, {"run", run_config_json(run)}};
        if (run.window.rule == WindowRule::Heisenberg) {
            manifest["heisenberg"] = {{"center_fraction", cfg.heisenberg.center_fraction},
                                      {"n_realizations", cfg.heisenberg.n_realizations},
                                      {"gauge_b", cfg.heisenberg.gauge_b}};
        }
        const std::string manifest_text = dump_json(manifest);
        const std::string hash = sha256_hex(manifest_text);
        fs::create_directories(dir);
        write_text_file((fs::path(dir) / "manifest.json").string(), manifest_text);

        const auto checkpoint_path = [&](int L, std::size_t wi) {
            return (fs::path(dir) / "checkpoints" / fmt::format("L{}_W{}.json", L, wi)).string();
        };

        EnsembleCallbacks cb;
        cb.on_realization = [](const RealizationLog& log) {
            fmt::print(stderr, "L={} W={} r={} seed={} wall={:.3f}s{}\n", log.L, log.W, log.index, log.seed,
                       log.wall_seconds, log.ok ? "" : " FAILED: " + log.error);
        };
        cb.on_point = [&](const PointResult& p) {
            write_text_file((fs::path(dir) / series_name(p.L, p.W)).string(), series_csv(p.series, hash));
            write_text_file(checkpoint_path(p.L, p.W_index),
                            Json({{"manifest_sha256", hash}, {"point", point_json(p)}}).dump() + "\n");
        };
        if (options.resume) {
            cb.lookup = [&](int L, std::size_t wi) -> std::optional<PointResult> {
                const std::string path = checkpoint_path(L, wi);
                if (!fs::exists(path)) return std::nullopt;
                try {
                    const Json j = Json::parse(read_text_file(path));
                    if (j.at("manifest_sha256").get<std::string>() != hash) return std::nullopt;
                    PointResult p = point_from_json(j.at("point"));
                    write_text_file((fs::path(dir) / series_name(p.L, p.W)).string(), series_csv(p.series, hash));
                    fmt::print(stderr, "resumed L={} W={}\n", p.L, p.W);
                    return p;
                } catch (const std::exception&) {
                    return std::nullopt;
                }
            };
        }

        const EnsembleResult result = run_ensemble(run, cb);

        std::vector<WindowAverage> averages;
        std::string points = "# manifest_sha256=" + hash + "\nL,W,requested,completed,failed,publishable\n";
        std::vector<std::string> files{"manifest.json"};
        long unpublishable = 0;
        for (const auto& [key, p] : result) {
            files.push_back(series_name(p.L, p.W));
            points += fmt::format("{},{},{},{},{},{}\n", p.L, format_double(p.W), p.requested, p.requested - p.failed,
                                  p.failed, p.publishable() ? 1 : 0);
            if (p.publishable()) {
                averages.push_back(p.window_average);
            } else {
                ++unpublishable;
            }
        }
        write_text_file((fs::path(dir) / "window_averages.csv").string(), window_averages_csv(averages, hash));
        write_text_file((fs::path(dir) / "points.csv").string(), points);
        files.push_back("window_averages.csv");
        files.push_back("points.csv");
        write_checksums(dir, hash, files, "checksums.json");

        fmt::print("simulate: {} points, {} publishable, output in {}\n", result.size(),
                   result.size() - static_cast<std::size_t>(unpublishable), dir);
        if (unpublishable > 0) {
            for (const auto& [key, p] : result) {
                if (!p.publishable()) {
                    fmt::print("  partial: L={} W={} completed {}/{}\n", p.L, p.W, p.requested - p.failed, p.requested);
                }
            }
            return static_cast<int>(kExitPartial);
        }
        return static_cast<int>(kExitOk);
    });
}

int cmd_heisenberg_time(const CommandOptions& options) {
    return guarded([&] {
        const AppConfig cfg = load_app_config(options);
        const std::string dir = out_dir(options, cfg);
        const Json manifest = heisenberg_manifest(cfg);
        const std::string manifest_text = dump_json(manifest);
        const std::string hash = sha256_hex(manifest_text);

        const HeisenbergTable table = compute_heisenberg_table(cfg, resolve_workers(options.workers));

        fs::create_directories(dir);
        write_text_file((fs::path(dir) / "heisenberg_manifest.json").string(), manifest_text);
        std::string csv = "# manifest_sha256=" + hash + "\nL,W,t_H,std,count,t_H_fit\n";
        for (const auto& r : table.rows) {
            csv += fmt::format("{},{},{},{},{},{}\n", r.L, format_double(r.W), format_double(r.t_H),
                               format_double(r.stddev), r.count, format_double(table.fits.at(r.L).predict(r.W, r.L)));
        }
        write_text_file((fs::path(dir) / "heisenberg_time.csv").string(), csv);
        const Json report = {{"manifest_sha256", hash},
                             {"center_fraction", cfg.heisenberg.center_fraction},
                             {"gauge_b", cfg.heisenberg.gauge_b},
                             {"fits", heisenberg_fits_json(table.fits)}};
        write_text_file((fs::path(dir) / "heisenberg_fit.json").string(), dump_json(report));
        write_checksums(dir, hash, {"heisenberg_manifest.json", "heisenberg_time.csv", "heisenberg_fit.json"},
                        "heisenberg_checksums.json");
        for (const auto& [L, f] : table.fits) {
            fmt::print("L={} a={:.6g} b={:.6g} c={:.6g} (a/sqrt(b)={:.6g}, c/b={:.6g}) max residual {:.3g}\n", L, f.a,
                       f.b, f.c, f.amplitude(), f.ratio(), f.max_relative_residual);
        }
        return static_cast<int>(kExitOk);
    });
}

int cmd_collapse(const CommandOptions& options) {
    return guarded([&] {
        AppConfig cfg = load_app_config(options);
        const std::string dir = out_dir(options, cfg);
        const std::string input =
            cfg.collapse.input.empty() ? (fs::path(dir) / "window_averages.csv").string() : cfg.collapse.input;
        if (!fs::exists(input)) throw InsufficientDataError("window-averages file '" + input + "' not found");
        const CsvTable raw = read_csv_file(input);
        const std::string manifest_hash = csv_comment_value(raw, "manifest_sha256");
        const ScalingDataset data = dataset_from_window_averages(read_window_averages(input));
        data.validate();

        OptimizerSettings settings = cfg.collapse.optimizer;
        settings.workers = resolve_workers(options.workers);
        fs::create_directories(dir);
        for (AnsatzKind kind : cfg.collapse.ansatz) {
            const auto& configured = kind == AnsatzKind::PowerLaw ? cfg.collapse.power_law_box : cfg.collapse.bkt_box;
            const SearchBox box = configured ? *configured : default_search_box(data, kind);
            const CollapseResult r = optimize_collapse(data, kind, box, settings);
            Json report = collapse_report_json(r);
            report["manifest_sha256"] = manifest_hash;
            report["input_sha256"] = sha256_hex(read_text_file(input));
            const std::string name = to_string(kind);
            write_text_file((fs::path(dir) / ("collapse_" + name + ".json")).string(), dump_json(report));
            write_text_file((fs::path(dir) / ("collapsed_" + name + ".csv")).string(),
                            collapsed_csv(collapsed_coordinates(data, kind, r.parameters), manifest_hash));
            const auto names = parameter_names(kind);
            fmt::print("{}: R*={:.6g}", name, r.R_star);
            for (std::size_t k = 0; k < names.size(); ++k) {
                fmt::print(" {}={:.6g}+-{:.3g}{}", names[k], r.parameters[k], r.widths[k].width,
                           r.widths[k].lower_bound ? "(lower bound)" : "");
            }
            fmt::print("\n");
        }
        return static_cast<int>(kExitOk);
    });
}

namespace {

Json beta_fit_json(const std::string& path, double W) {
    const auto rows = read_window_averages(path);
    std::vector<SizePoint> pts;
    Json used = Json::array();
    for (const auto& w : rows) {
        if (std::abs(w.W - W) <= 1e-9 * std::max(1.0, std::abs(W))) {
            if (!(w.value > 0.0)) {
                throw DomainError(fmt::format("{}: non-positive value {} at L={} W={}", path, w.value, w.L, w.W));
            }
            pts.push_back({static_cast<double>(w.L), w.value});
            used.push_back({{"L", w.L}, {"value", w.value}, {"stderr", w.std_error}});
        }
    }
    if (pts.size() < 3) {
        throw InsufficientDataError(fmt::format("{}: {} sizes at W={}, need at least 3", path, pts.size(), W));
    }
    const BetaFit f = fit_power_beta(pts);
    return {{"input_sha256", sha256_file(path)},
            {"W", W},
            {"beta", f.beta},
            {"ci95", {f.lo, f.hi}},
            {"log_prefactor", f.log_prefactor},
            {"points", used}};
}

} // namespace

int cmd_fit(const CommandOptions& options) {
    return guarded([&] {
        const AppConfig cfg = load_app_config(options);
        const std::string dir = out_dir(options, cfg);
        const FitSettings& f = cfg.fit;
        if (f.beta_input.empty() && f.log_input.empty()) {
            throw ConfigError("fit needs fit.beta_input and/or fit.log_input");
        }
        for (const auto& p : {f.beta_input, f.beta_reference, f.log_input}) {
            if (!p.empty() && !fs::exists(p)) throw InsufficientDataError("input '" + p + "' not found");
        }
        Json report = Json::object();
        if (!f.beta_input.empty()) {
            report["beta"] = beta_fit_json(f.beta_input, f.beta_W);
            fmt::print("beta = {:.6g} [{:.6g}, {:.6g}]\n", report["beta"]["beta"].get<double>(),
                       report["beta"]["ci95"][0].get<double>(), report["beta"]["ci95"][1].get<double>());
            if (!f.beta_reference.empty()) {
                report["beta_reference"] = beta_fit_json(f.beta_reference, f.beta_W);
                const bool exceeds = report["beta"]["beta"].get<double>() > report["beta_reference"]["beta"].get<double>();
                report["beta_exceeds_reference"] = exceeds;
                fmt::print("reference beta = {:.6g}; input exceeds reference: {}\n",
                           report["beta_reference"]["beta"].get<double>(), exceeds ? "yes" : "no");
            }
        }
        if (!f.log_input.empty()) {
            const AggregateSeries s = read_series_csv(f.log_input);
            LogGrowthFit g;
            try {
                g = fit_log_growth(s.times, s.mean, f.log_window);
            } catch (const Error& e) {
                throw InsufficientDataError(f.log_input + ": " + e.what());
            }
            report["log_growth"] = {{"input_sha256", sha256_file(f.log_input)},
                                    {"window", {f.log_window.t_i, f.log_window.t_f}},
                                    {"slope", g.slope},
                                    {"intercept", g.intercept},
                                    {"goodness", g.goodness},
                                    {"slope_ci95", {g.slope_lo, g.slope_hi}},
                                    {"n_points", g.n_points}};
            fmt::print("log slope = {:.6g} (R^2 = {:.6g})\n", g.slope, g.goodness);
        }
        fs::create_directories(dir);
        write_text_file((fs::path(dir) / "fit_report.json").string(), dump_json(report));
        return static_cast<int>(kExitOk);
    });
}

int cmd_report(const CommandOptions& options) {
    return guarded([&] {
        const AppConfig cfg = load_app_config(options);
        const std::string dir = out_dir(options, cfg);
        if (!fs::is_directory(dir)) throw InsufficientDataError("results directory '" + dir + "' not found");
        const auto at = [&](const std::string& f) { return (fs::path(dir) / f).string(); };
        std::vector<std::string> warnings;
        std::string md = "# fockscope report\n\n";

        std::string manifest_hash;
        if (fs::exists(at("manifest.json"))) {
            manifest_hash = sha256_file(at("manifest.json"));
            md += "Manifest SHA-256: `" + manifest_hash + "`\n\n";
        } else {
            warnings.push_back("missing manifest.json");
        }

        if (fs::exists(at("checksums.json"))) {
            const Json sums = Json::parse(read_text_file(at("checksums.json")));
            if (!manifest_hash.empty() && sums.value("manifest_sha256", "") != manifest_hash) {
                warnings.push_back("integrity: manifest hash differs from checksums.json");
            }
            for (const auto& [file, expected] : sums.at("files").items()) {
                if (!fs::exists(at(file))) {
                    warnings.push_back("missing " + file);
                } else if (sha256_file(at(file)) != expected.get<std::string>()) {
                    warnings.push_back("integrity: hash mismatch for " + file);
                } else if (file.ends_with(".csv") && !manifest_hash.empty()) {
                    const std::string ref = csv_comment_value(read_csv_file(at(file)), "manifest_sha256");
                    if (ref != manifest_hash) warnings.push_back("integrity: " + file + " references another manifest");
                }
            }
        } else {
            warnings.push_back("missing checksums.json");
        }

        if (fs::exists(at("points.csv"))) {
            const CsvTable t = read_csv_file(at("points.csv"));
            md += "## Ensemble points\n\n| L | W | completed | requested | publishable |\n|---|---|---|---|---|\n";
            for (std::size_t r = 0; r < t.rows.size(); ++r) {
                md += fmt::format("| {} | {} | {} | {} | {} |\n", t.rows[r][t.column("L")], t.rows[r][t.column("W")],
                                  t.rows[r][t.column("completed")], t.rows[r][t.column("requested")],
                                  t.rows[r][t.column("publishable")] == "1" ? "yes" : "no");
            }
            md += "\n";
        } else {
            warnings.push_back("missing points.csv");
        }

        if (fs::exists(at("window_averages.csv"))) {
            const auto rows = read_window_averages(at("window_averages.csv"));
            std::map<int, std::vector<WindowAverage>> by_size;
            for (const auto& w : rows) by_size[w.L].push_back(w);
            md += "## Peaks\n\n| L | W* | interval | note |\n|---|---|---|---|\n";
            for (auto& [L, ws] : by_size) {
                std::sort(ws.begin(), ws.end(), [](const auto& a, const auto& b) { return a.W < b.W; });
                if (ws.size() < 3) {
                    md += fmt::format("| {} | n/a | n/a | fewer than 3 points |\n", L);
                    continue;
                }
                std::vector<CurvePoint> curve;
                for (const auto& w : ws) curve.push_back({w.W, w.value});
                const PeakEstimate p = peak_location(curve);
                md += fmt::format("| {} | {:.6g} | [{:.6g}, {:.6g}] | {} |\n", L, p.W_star, p.lo, p.hi,
                                  p.boundary ? "boundary maximum" : (p.plateau ? "plateau" : ""));
            }
            md += "\n";
        } else {
            warnings.push_back("missing window_averages.csv");
        }

        if (fs::exists(at("fit_report.json"))) {
            const Json f = Json::parse(read_text_file(at("fit_report.json")));
            md += "## Fits\n\n";
            if (f.contains("beta")) {
                md += fmt::format("- beta = {:.6g}, 95% CI [{:.6g}, {:.6g}] at W = {:.6g}\n", f["beta"]["beta"].get<double>(),
                                  f["beta"]["ci95"][0].get<double>(), f["beta"]["ci95"][1].get<double>(),
                                  f["beta"]["W"].get<double>());
            }
            if (f.contains("beta_reference")) {
                md += fmt::format("- reference beta = {:.6g}\n", f["beta_reference"]["beta"].get<double>());
            }
            if (f.contains("log_growth")) {
                md += fmt::format("- log-growth slope = {:.6g}, R^2 = {:.6g}\n", f["log_growth"]["slope"].get<double>(),
                                  f["log_growth"]["goodness"].get<double>());
            }
            md += "\n";
        }

        std::vector<Json> collapses;
        for (const char* name : {"power-law", "bkt"}) {
            const std::string file = std::string("collapse_") + name + ".json";
            if (fs::exists(at(file))) collapses.push_back(Json::parse(read_text_file(at(file))));
        }
        if (!collapses.empty()) {
            md += "## Collapse\n\n| ansatz | parameters | R* | excluded |\n|---|---|---|---|\n";
            for (const auto& c : collapses) {
                std::string params;
                for (const auto& name : parameter_names(ansatz_kind_from_string(c["ansatz"].get<std::string>()))) {
                    params += fmt::format("{} = {:.6g} +- {:.3g}; ", name, c["parameters"][name].get<double>(),
                                          c["widths"][name]["width"].get<double>());
                }
                md += fmt::format("| {} | {} | {:.6g} | {} |\n", c["ansatz"].get<std::string>(), params,
                                  c["R_star"].get<double>(), c["excluded_points"].get<long>());
                if (!manifest_hash.empty() && c.value("manifest_sha256", "") != manifest_hash) {
                    warnings.push_back("integrity: collapse_" + c["ansatz"].get<std::string>() +
                                       ".json references another manifest");
                }
            }
            md += "\n";
        } else {
            warnings.push_back("no collapse reports");
        }

        if (!warnings.empty()) {
            md += "## Warnings\n\n";
            for (const auto& w : warnings) md += "- " + w + "\n";
        }
        write_text_file(at("report.md"), md);
        fmt::print("{}", md);
        return static_cast<int>(kExitOk);
    });
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Spin-chain Fock-space dynamics and finite-size scaling"};
    app.require_subcommand(1);
    CommandOptions options;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", options.config_path, "Config file");
        sub->add_option("--override", options.overrides, "key=value override (repeatable)");
        sub->add_option("--workers", options.workers, "Worker threads (default: logical cores)")->check(CLI::NonNegativeNumber);
        sub->add_flag("--resume", options.resume, "Reuse completed points from checkpoints");
        sub->add_option("--out", options.out_dir, "Output directory");
    };
    struct Command {
        std::string name;
        std::string help;
        int (*run)(const CommandOptions&);
    };
    const std::vector<Command> commands = {
        {"simulate", "Ensemble dynamics over the (L, W) grid", cmd_simulate},
        {"heisenberg-time", "Exact-diagonalization t_H table and per-L fits", cmd_heisenberg_time},
        {"collapse", "Finite-size data collapse of the window averages", cmd_collapse},
        {"fit", "Size exponent beta and logarithmic growth fits", cmd_fit},
        {"report", "Summary of an output directory with integrity checks", cmd_report},
    };
    std::vector<CLI::App*> subs;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        add_common(sub);
        subs.push_back(sub);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? static_cast<int>(kExitOk) : static_cast<int>(kExitConfig);
    }
    for (std::size_t k = 0; k < subs.size(); ++k) {
        if (subs[k]->parsed()) return commands[k].run(options);
    }
    return static_cast<int>(kExitConfig);
}

} // namespace fockscope
