#include "fockscope/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "fockscope/error.hpp"

namespace fockscope {

namespace {

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double number_from(const Json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::string matrix_hash(const Eigen::MatrixXcd& m) {
    std::string text;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            text += format_double(m(r, c).real()) + "," + format_double(m(r, c).imag()) + ";";
        }
    }
    return sha256_hex(text);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

} // namespace

std::string format_double(double x) { return fmt::format("{:.17g}", x); }

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DomainError("cannot write '" + path + "'");
        out << content;
        if (!out) throw DomainError("write failed for '" + path + "'");
    }
    std::filesystem::rename(tmp, path);
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    std::string hex;
    hex.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_text_file(path)); }

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

std::size_t CsvTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DomainError(source + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

double CsvTable::number(std::size_t row, std::size_t col) const {
    const std::string& cell = rows.at(row).at(col);
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size()) {
        throw DomainError(context(row) + ": cannot parse '" + cell + "' in column '" + header.at(col) + "'");
    }
    return v;
}

std::string CsvTable::context(std::size_t row) const {
    return source + ":" + std::to_string(row < row_lines.size() ? row_lines[row] : 0);
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
    CsvTable t;
    t.source = source;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            std::string c = line.substr(1);
            c.erase(0, c.find_first_not_of(' '));
            t.comments.push_back(c);
            continue;
        }
        auto cells = split(line, ',');
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw DomainError(source + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(t.header.size()) + " columns, found " + std::to_string(cells.size()));
        }
        t.rows.push_back(std::move(cells));
        t.row_lines.push_back(line_no);
    }
    if (t.header.empty()) throw DomainError(source + ": no header row");
    return t;
}

CsvTable read_csv_file(const std::string& path) { return parse_csv(read_text_file(path), path); }

std::string csv_comment_value(const CsvTable& table, const std::string& key) {
    for (const auto& c : table.comments) {
        if (c.rfind(key + "=", 0) == 0) return c.substr(key.size() + 1);
    }
    return {};
}

std::string radial_distribution_csv(const RadialDistribution& d) {
    std::string out = "x,pi\n";
    for (std::size_t x = 0; x < d.pi.size(); ++x) out += std::to_string(x) + "," + format_double(d.pi[x]) + "\n";
    return out;
}

Json radial_distribution_json(const RadialDistribution& d, int L) {
    Json j;
    j["L"] = L;
    j["anchor_bits"] = d.anchor.bits();
    j["pi"] = d.pi;
    return j;
}

Json realization_json(const ModelSpec& spec) {
    spec.validate();
    Json j;
    j["seed"] = spec.seed;
    j["kind"] = to_string(spec.kind);
    j["L"] = spec.L;
    j["W"] = spec.W;
    Rng rng(spec.seed);
    if (spec.kind == ModelKind::Floquet) {
        const FloquetCircuit c = sample_floquet_circuit(spec, rng);
        Json singles = Json::array();
        for (const auto& g : c.single_qubit_layer) singles.push_back(matrix_hash(g));
        Json bonds = Json::array();
        for (const auto& g : c.bond_gates) bonds.push_back({{"bond", g.bond}, {"sha256", matrix_hash(g.gate)}});
        j["single_qubit_gates"] = singles;
        j["bond_gates"] = bonds;
        j["bond_order"] = c.bond_order;
        j["single_qubit_mode"] = spec.single_qubit == SingleQubitMode::Eigenphase ? "eigenphase" : "full-cue";
    } else {
        j["phases"] = sample_fields(spec, rng).phases;
    }
    return j;
}

Json run_config_json(const RunConfig& run) {
    Json j;
    j["model"] = {{"kind", to_string(run.model.kind)},
                  {"J", run.model.J},
                  {"sector", to_string(run.model.sector)},
                  {"single_qubit", run.model.single_qubit == SingleQubitMode::Eigenphase ? "eigenphase" : "full-cue"},
                  {"field_wave_number", kFieldWaveNumber},
                  {"gue_normalization", "M = (A + A^dagger)/2, A_ij standard complex normal"}};
    j["W_grid"] = run.W_grid;
    j["L_list"] = run.L_list;
    j["n_realizations"] = run.n_realizations;
    j["master_seed"] = run.master_seed;
    j["min_completion"] = run.min_completion;
    j["time"] = {{"t_min", run.time.t_min},
                 {"t_max", run.time.t_max},
                 {"n_log", run.time.n_log},
                 {"window_dt", run.time.window_dt}};
    Json window = {{"rule", to_string(run.window.rule)},
                   {"t_i", run.window.fixed.t_i},
                   {"t_f", run.window.fixed.t_f},
                   {"length", run.window.length}};
    Json fits = Json::object();
    for (const auto& [L, fit] : run.window.heisenberg) fits[std::to_string(L)] = heisenberg_fit_json(fit);
    window["heisenberg_fits"] = fits;
    j["window"] = window;
    j["krylov"] = {{"subspace_dim", run.krylov.subspace_dim},
                   {"step_dt", run.krylov.step_dt},
                   {"tolerance", run.krylov.tolerance},
                   {"max_restarts", run.krylov.max_restarts},
                   {"dense_cap", run.krylov.dense_cap}};
    return j;
}

Json heisenberg_fit_json(const HeisenbergFit& fit) {
    return {{"a", fit.a},
            {"b", fit.b},
            {"c", fit.c},
            {"amplitude", fit.amplitude()},
            {"ratio", fit.ratio()},
            {"rms_relative_residual", fit.rms_relative_residual},
            {"max_relative_residual", fit.max_relative_residual},
            {"iterations", fit.iterations}};
}

HeisenbergFit heisenberg_fit_from_json(const Json& j) {
    HeisenbergFit f;
    f.a = j.at("a").get<double>();
    f.b = j.at("b").get<double>();
    f.c = j.at("c").get<double>();
    f.rms_relative_residual = j.value("rms_relative_residual", 0.0);
    f.max_relative_residual = j.value("max_relative_residual", 0.0);
    f.iterations = j.value("iterations", 0);
    return f;
}

std::string series_csv(const AggregateSeries& s, const std::string& manifest_hash) {
    std::string out = "# manifest_sha256=" + manifest_hash + "\n";
    out += "t,mean,std,count\n";
    for (std::size_t k = 0; k < s.times.size(); ++k) {
        out += format_double(s.times[k]) + "," + format_double(s.mean[k]) + "," + format_double(s.stddev[k]) + "," +
               std::to_string(s.count) + "\n";
    }
    return out;
}

AggregateSeries read_series_csv(const std::string& path) {
    const CsvTable t = read_csv_file(path);
    const auto ct = t.column("t"), cm = t.column("mean"), cs = t.column("std"), cc = t.column("count");
    AggregateSeries s;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        s.times.push_back(t.number(r, ct));
        s.mean.push_back(t.number(r, cm));
        s.stddev.push_back(t.number(r, cs));
        s.count = static_cast<long>(t.number(r, cc));
    }
    return s;
}

std::string window_averages_csv(const std::vector<WindowAverage>& rows, const std::string& manifest_hash) {
    std::string out = "# manifest_sha256=" + manifest_hash + "\n";
    out += "L,W,value,stderr,t_i,t_f\n";
    for (const auto& w : rows) {
        out += std::to_string(w.L) + "," + format_double(w.W) + "," + format_double(w.value) + "," +
               format_double(w.std_error) + "," + format_double(w.window.t_i) + "," + format_double(w.window.t_f) +
               "\n";
    }
    return out;
}

std::vector<WindowAverage> read_window_averages(const std::string& path) {
    const CsvTable t = read_csv_file(path);
    const auto cl = t.column("L"), cw = t.column("W"), cv = t.column("value"), ce = t.column("stderr");
    const auto has = [&](const char* n) { return std::find(t.header.begin(), t.header.end(), n) != t.header.end(); };
    const bool window = has("t_i") && has("t_f");
    std::vector<WindowAverage> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        WindowAverage w;
        const double L = t.number(r, cl);
        if (L != std::round(L) || L < 1) throw DomainError(t.context(r) + ": L must be a positive integer");
        w.L = static_cast<int>(L);
        w.W = t.number(r, cw);
        w.value = t.number(r, cv);
        w.std_error = t.number(r, ce);
        if (window) w.window = {t.number(r, t.column("t_i")), t.number(r, t.column("t_f"))};
        out.push_back(w);
    }
    return out;
}

ScalingDataset dataset_from_window_averages(const std::vector<WindowAverage>& rows) {
    std::map<int, std::vector<std::pair<double, double>>> by_size;
    for (const auto& w : rows) {
        if (std::isfinite(w.value)) by_size[w.L].emplace_back(w.W, w.value);
    }
    ScalingDataset d;
    for (auto& [L, pts] : by_size) {
        std::sort(pts.begin(), pts.end());
        SizeCurve c;
        c.L = L;
        for (const auto& [W, Q] : pts) {
            c.W.push_back(W);
            c.Q.push_back(Q);
        }
        d.curves.push_back(std::move(c));
    }
    return d;
}

Json point_json(const PointResult& p) {
    Json mean = Json::array(), sd = Json::array();
    for (double v : p.series.mean) mean.push_back(number_or_null(v));
    for (double v : p.series.stddev) sd.push_back(number_or_null(v));
    return {{"L", p.L},
            {"W_index", p.W_index},
            {"W", p.W},
            {"requested", p.requested},
            {"failed", p.failed},
            {"min_completion", p.min_completion},
            {"series", {{"times", p.series.times}, {"mean", mean}, {"std", sd}, {"count", p.series.count}}},
            {"window_average",
             {{"t_i", p.window_average.window.t_i},
              {"t_f", p.window_average.window.t_f},
              {"value", number_or_null(p.window_average.value)},
              {"stderr", number_or_null(p.window_average.std_error)}}}};
}

PointResult point_from_json(const Json& j) {
    PointResult p;
    p.L = j.at("L").get<int>();
    p.W_index = j.at("W_index").get<std::size_t>();
    p.W = j.at("W").get<double>();
    p.requested = j.at("requested").get<long>();
    p.failed = j.at("failed").get<long>();
    p.min_completion = j.at("min_completion").get<double>();
    const Json& s = j.at("series");
    p.series.times = s.at("times").get<std::vector<double>>();
    for (const auto& v : s.at("mean")) p.series.mean.push_back(number_from(v));
    for (const auto& v : s.at("std")) p.series.stddev.push_back(number_from(v));
    p.series.count = s.at("count").get<long>();
    const Json& w = j.at("window_average");
    p.window_average.L = p.L;
    p.window_average.W = p.W;
    p.window_average.window = {w.at("t_i").get<double>(), w.at("t_f").get<double>()};
    p.window_average.value = number_from(w.at("value"));
    p.window_average.std_error = number_from(w.at("stderr"));
    return p;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
    Json amps = Json::array();
    for (Eigen::Index k = 0; k < c.amplitudes.size(); ++k) amps.push_back({c.amplitudes[k].real(), c.amplitudes[k].imag()});
    const Json j = {{"manifest", c.manifest}, {"time", c.time}, {"amplitudes", amps}};
    write_text_file(path, j.dump() + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
    Json j;
    try {
        j = Json::parse(read_text_file(path));
    } catch (const Json::exception& e) {
        throw DomainError("corrupt checkpoint '" + path + "': " + e.what());
    }
    Checkpoint c;
    c.manifest = j.at("manifest");
    c.time = j.at("time").get<double>();
    const Json& amps = j.at("amplitudes");
    c.amplitudes.resize(static_cast<Eigen::Index>(amps.size()));
    for (std::size_t k = 0; k < amps.size(); ++k) {
        c.amplitudes[static_cast<Eigen::Index>(k)] = {amps[k].at(0).get<double>(), amps[k].at(1).get<double>()};
    }
    return c;
}

Json collapse_report_json(const CollapseResult& r) {
    const auto names = parameter_names(r.kind);
    Json params = Json::object(), widths = Json::object();
    for (std::size_t k = 0; k < names.size(); ++k) {
        params[names[k]] = r.parameters.at(k);
        widths[names[k]] = {{"width", r.widths.at(k).width},
                            {"eta", r.widths.at(k).eta_used},
                            {"lower_bound", r.widths.at(k).lower_bound}};
    }
    return {{"ansatz", to_string(r.kind)},
            {"parameters", params},
            {"widths", widths},
            {"R_star", r.R_star},
            {"n_points", r.n_points},
            {"excluded_points", r.excluded_points},
            {"best_restart", r.best_restart},
            {"converged_restarts", r.converged_restarts},
            {"settings",
             {{"restarts", r.settings.restarts},
              {"seed", r.settings.seed},
              {"eta", r.settings.eta},
              {"tolerance", r.settings.nelder_mead.tolerance},
              {"max_evaluations", r.settings.nelder_mead.max_evaluations},
              {"box", {{"lo", r.box.lo}, {"hi", r.box.hi}}}}}};
}

std::string collapsed_csv(const std::vector<CollapsedPoint>& points, const std::string& manifest_hash) {
    std::string out = "# manifest_sha256=" + manifest_hash + "\n";
    out += "x,y,L\n";
    for (const auto& p : points) out += format_double(p.x) + "," + format_double(p.y) + "," + std::to_string(p.L) + "\n";
    return out;
}

} // namespace fockscope
