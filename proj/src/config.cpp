#include "fockscope/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fockscope/error.hpp"

namespace fockscope {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_string && c == '\\') {
            ++i;
        } else if (c == '"') {
            in_string = !in_string;
        } else if (c == '#' && !in_string) {
            return line.substr(0, i);
        }
    }
    return line;
}

int bracket_balance(const std::string& s) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string && c == '\\') {
            ++i;
        } else if (c == '"') {
            in_string = !in_string;
        } else if (!in_string && c == '[') {
            ++depth;
        } else if (!in_string && c == ']') {
            --depth;
        }
    }
    return depth;
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    return std::all_of(k.begin(), k.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
    });
}

class ValueParser {
public:
    ValueParser(const std::string& s, int line) : s_(s), line_(line) {}

    ConfigValue parse_all() {
        ConfigValue v = parse();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected trailing text '" + s_.substr(pos_) + "'");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(msg, line_); }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    ConfigValue parse() {
        skip_ws();
        if (pos_ >= s_.size()) fail("missing value");
        ConfigValue v;
        v.line = line_;
        const char c = s_[pos_];
        if (c == '"') {
            v.type = ConfigValue::Type::String;
            v.text = parse_string();
            return v;
        }
        if (c == '[') {
            v.type = ConfigValue::Type::Array;
            ++pos_;
            skip_ws();
            if (pos_ < s_.size() && s_[pos_] == ']') {
                ++pos_;
                return v;
            }
            while (true) {
                v.items.push_back(parse());
                skip_ws();
                if (pos_ >= s_.size()) fail("unterminated array");
                if (s_[pos_] == ',') {
                    ++pos_;
                    skip_ws();
                    if (pos_ < s_.size() && s_[pos_] == ']') {
                        ++pos_;
                        return v;
                    }
                    continue;
                }
                if (s_[pos_] == ']') {
                    ++pos_;
                    return v;
                }
                fail("expected ',' or ']' in array");
            }
        }
        std::size_t end = pos_;
        while (end < s_.size() && s_[end] != ',' && s_[end] != ']' &&
               !std::isspace(static_cast<unsigned char>(s_[end]))) {
            ++end;
        }
        const std::string tok = s_.substr(pos_, end - pos_);
        pos_ = end;
        v.text = tok;
        if (tok == "true" || tok == "false") {
            v.type = ConfigValue::Type::Bool;
            v.boolean = tok == "true";
            return v;
        }
        const bool integer = !tok.empty() &&
                             std::all_of(tok.begin() + ((tok[0] == '-' || tok[0] == '+') ? 1 : 0), tok.end(),
                                         [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }) &&
                             tok.find_first_of("0123456789") != std::string::npos;
        char* stop = nullptr;
        const double num = std::strtod(tok.c_str(), &stop);
        if (tok.empty() || stop != tok.c_str() + tok.size() || !std::isfinite(num)) {
            fail("cannot parse value '" + tok + "' (strings need double quotes)");
        }
        v.type = integer ? ConfigValue::Type::Integer : ConfigValue::Type::Float;
        v.number = num;
        return v;
    }

    std::string parse_string() {
        ++pos_;
        std::string out;
        while (pos_ < s_.size()) {
            const char c = s_[pos_++];
            if (c == '"') return out;
            if (c == '\\') {
                if (pos_ >= s_.size()) break;
                const char e = s_[pos_++];
                switch (e) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: fail(std::string("unknown escape '\\") + e + "'");
                }
            } else {
                out += c;
            }
        }
        fail("unterminated string");
    }

    const std::string& s_;
    std::size_t pos_ = 0;
    int line_;
};

// Typed accessors over the document; all failures name the offending line.
class Reader {
public:
    explicit Reader(const ConfigDocument& doc) : doc_(doc) {}

    const ConfigValue* get(const std::string& key) const { return doc_.find(key); }

    double number(const std::string& key, double fallback) const {
        const ConfigValue* v = get(key);
        if (!v) return fallback;
        return as_number(*v, key);
    }

    long integer(const std::string& key, long fallback) const {
        const ConfigValue* v = get(key);
        if (!v) return fallback;
        return as_integer(*v, key);
    }

    std::uint64_t unsigned64(const std::string& key, std::uint64_t fallback) const {
        const ConfigValue* v = get(key);
        if (!v) return fallback;
        if (v->type != ConfigValue::Type::Integer || v->text.starts_with('-')) {
            throw ConfigError("'" + key + "' must be a non-negative integer", v->line);
        }
        try {
            return std::stoull(v->text);
        } catch (const std::exception&) {
            throw ConfigError("'" + key + "' does not fit in 64 bits", v->line);
        }
    }

    std::string string(const std::string& key, const std::string& fallback) const {
        const ConfigValue* v = get(key);
        if (!v) return fallback;
        if (v->type != ConfigValue::Type::String) throw ConfigError("'" + key + "' must be a string", v->line);
        return v->text;
    }

    std::vector<double> numbers(const std::string& key) const {
        const ConfigValue* v = get(key);
        if (!v) return {};
        if (v->type != ConfigValue::Type::Array) throw ConfigError("'" + key + "' must be an array", v->line);
        std::vector<double> out;
        for (const auto& item : v->items) out.push_back(as_number(item, key));
        return out;
    }

    std::vector<int> integers(const std::string& key) const {
        const ConfigValue* v = get(key);
        if (!v) return {};
        if (v->type == ConfigValue::Type::Integer) return {static_cast<int>(as_integer(*v, key))};
        if (v->type != ConfigValue::Type::Array) throw ConfigError("'" + key + "' must be an integer array", v->line);
        std::vector<int> out;
        for (const auto& item : v->items) out.push_back(static_cast<int>(as_integer(item, key)));
        return out;
    }

    std::vector<std::string> strings(const std::string& key) const {
        const ConfigValue* v = get(key);
        if (!v) return {};
        if (v->type == ConfigValue::Type::String) return {v->text};
        if (v->type != ConfigValue::Type::Array) throw ConfigError("'" + key + "' must be a string array", v->line);
        std::vector<std::string> out;
        for (const auto& item : v->items) {
            if (item.type != ConfigValue::Type::String) {
                throw ConfigError("'" + key + "' must contain strings", item.line);
            }
            out.push_back(item.text);
        }
        return out;
    }

    int line(const std::string& key) const {
        const ConfigValue* v = get(key);
        return v ? v->line : 0;
    }

    // Runs `f`, rewrapping library validation errors with the key's line.
    template <class F>
    auto checked(const std::string& key, F f) const {
        try {
            return f();
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError("'" + key + "': " + e.what(), line(key));
        }
    }

private:
    static double as_number(const ConfigValue& v, const std::string& key) {
        if (v.type != ConfigValue::Type::Integer && v.type != ConfigValue::Type::Float) {
            throw ConfigError("'" + key + "' must be a number", v.line);
        }
        return v.number;
    }

    static long as_integer(const ConfigValue& v, const std::string& key) {
        if (v.type != ConfigValue::Type::Integer) throw ConfigError("'" + key + "' must be an integer", v.line);
        return std::stol(v.text);
    }

    const ConfigDocument& doc_;
};

std::optional<SearchBox> read_box(const Reader& r, const std::string& lo_key, const std::string& hi_key) {
    const auto lo = r.numbers(lo_key);
    const auto hi = r.numbers(hi_key);
    if (lo.empty() && hi.empty()) return std::nullopt;
    if (lo.size() != 3 || hi.size() != 3) {
        throw ConfigError("'" + lo_key + "' and '" + hi_key + "' must both hold 3 numbers",
                          std::max(r.line(lo_key), r.line(hi_key)));
    }
    for (std::size_t k = 0; k < 3; ++k) {
        if (!(hi[k] > lo[k])) throw ConfigError("empty search interval in '" + lo_key + "'", r.line(lo_key));
    }
    return SearchBox{lo, hi};
}

} // namespace

std::string ConfigValue::describe() const {
    switch (type) {
    case Type::Bool: return boolean ? "true" : "false";
    case Type::Integer:
    case Type::Float: return text;
    case Type::String: return "\"" + text + "\"";
    case Type::Array: {
        std::string s = "[";
        for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + items[i].describe();
        return s + "]";
    }
    }
    return {};
}

const ConfigValue* ConfigDocument::find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

void ConfigDocument::set(const std::string& key, ConfigValue value) { entries_[key] = std::move(value); }

ConfigValue parse_config_value(const std::string& literal, int line) {
    return ValueParser(literal, line).parse_all();
}

ConfigDocument parse_config(const std::string& text) {
    ConfigDocument doc;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("malformed section header", line_no);
            section = trim(line.substr(1, line.size() - 2));
            if (!valid_key(section)) throw ConfigError("invalid section name '" + section + "'", line_no);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
        const std::string key = trim(line.substr(0, eq));
        if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'", line_no);
        std::string value = trim(line.substr(eq + 1));
        const int start_line = line_no;
        while (bracket_balance(value) > 0) {
            if (!std::getline(in, raw)) throw ConfigError("unterminated array", start_line);
            ++line_no;
            value += " " + trim(strip_comment(raw));
        }
        const std::string full = section.empty() ? key : section + "." + key;
        if (doc.has(full)) throw ConfigError("duplicate key '" + full + "'", start_line);
        doc.set(full, ValueParser(value, start_line).parse_all());
    }
    return doc;
}

ConfigDocument load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

const std::vector<std::string>& config_schema() {
    static const std::vector<std::string> keys = {
        "model.kind",          "model.J",                 "model.sector",          "model.single_qubit",
        "grid.L",              "grid.W",                  "grid.W_min",            "grid.W_max",
        "grid.W_step",         "ensemble.n_realizations", "ensemble.master_seed",  "ensemble.min_completion",
        "time.t_min",          "time.t_max",              "time.n_log",            "time.window_dt",
        "window.rule",         "window.t_i",              "window.t_f",            "window.length",
        "krylov.subspace_dim", "krylov.step_dt",          "krylov.tolerance",      "krylov.max_restarts", "krylov.dense_cap",
        "heisenberg.sizes",    "heisenberg.W_values",     "heisenberg.realizations",
        "heisenberg.center_fraction",                     "heisenberg.ed_cap",     "heisenberg.gauge_b",
        "heisenberg.fit",      "collapse.input",          "collapse.ansatz",       "collapse.restarts",
        "collapse.seed",       "collapse.eta",            "collapse.tolerance",    "collapse.max_evaluations",
        "collapse.power_law_lo", "collapse.power_law_hi", "collapse.bkt_lo",       "collapse.bkt_hi",
        "fit.beta_input",      "fit.beta_reference",      "fit.beta_W",            "fit.log_input",
        "fit.log_t_i",         "fit.log_t_f",             "output.dir",
    };
    return keys;
}

void validate_schema(const ConfigDocument& doc) {
    const auto& schema = config_schema();
    for (const auto& [key, value] : doc.entries()) {
        if (std::find(schema.begin(), schema.end(), key) == schema.end()) {
            throw ConfigError("unknown key '" + key + "'", value.line);
        }
    }
}

void apply_override(ConfigDocument& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    std::string key = trim(assignment.substr(0, eq));
    const std::string literal = trim(assignment.substr(eq + 1));
    const auto& schema = config_schema();
    if (key.find('.') == std::string::npos) {
        std::vector<std::string> hits;
        for (const auto& s : schema) {
            if (s.substr(s.find('.') + 1) == key) hits.push_back(s);
        }
        if (hits.empty()) throw ConfigError("override names unknown key '" + key + "'");
        if (hits.size() > 1) {
            std::string all;
            for (const auto& h : hits) all += " " + h;
            throw ConfigError("override key '" + key + "' is ambiguous:" + all);
        }
        key = hits.front();
    } else if (std::find(schema.begin(), schema.end(), key) == schema.end()) {
        throw ConfigError("override names unknown key '" + key + "'");
    }
    ConfigValue value;
    try {
        value = parse_config_value(literal, 0);
    } catch (const ConfigError&) {
        // Unquoted words are accepted as strings on the command line.
        value.type = ConfigValue::Type::String;
        value.text = literal;
    }
    doc.set(key, std::move(value));
}

std::vector<double> arithmetic_grid(double start, double stop, double step) {
    if (!(step > 0.0) || !(stop >= start)) throw InvalidParameterError("grid needs step > 0 and stop >= start");
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long k = 0; k <= n; ++k) out.push_back(start + static_cast<double>(k) * step);
    return out;
}

AppConfig build_app_config(const ConfigDocument& doc) {
    validate_schema(doc);
    const Reader r(doc);
    AppConfig cfg;
    RunConfig& run = cfg.run;

    run.model.kind = r.checked("model.kind", [&] { return model_kind_from_string(r.string("model.kind", "quasiperiodic")); });
    run.model.J = r.number("model.J", 1.0);
    const std::string sector_default = run.model.kind == ModelKind::Floquet ? "full" : "sz0";
    run.model.sector = r.checked("model.sector", [&] { return sector_from_string(r.string("model.sector", sector_default)); });
    const std::string sq = r.string("model.single_qubit", "eigenphase");
    if (sq == "eigenphase") {
        run.model.single_qubit = SingleQubitMode::Eigenphase;
    } else if (sq == "full-cue" || sq == "full_cue") {
        run.model.single_qubit = SingleQubitMode::FullCue;
    } else {
        throw ConfigError("model.single_qubit must be \"eigenphase\" or \"full-cue\"", r.line("model.single_qubit"));
    }

    run.L_list = r.integers("grid.L");
    if (run.L_list.empty()) run.L_list = {8, 10};
    run.W_grid = r.numbers("grid.W");
    const bool range = r.get("grid.W_min") || r.get("grid.W_max") || r.get("grid.W_step");
    if (!run.W_grid.empty() && range) {
        throw ConfigError("give either grid.W or grid.W_min/W_max/W_step, not both", r.line("grid.W"));
    }
    if (run.W_grid.empty()) {
        run.W_grid = r.checked("grid.W_min", [&] {
            return arithmetic_grid(r.number("grid.W_min", 2.0), r.number("grid.W_max", 8.0), r.number("grid.W_step", 0.5));
        });
    }

    run.n_realizations = r.integer("ensemble.n_realizations", 20);
    run.master_seed = r.unsigned64("ensemble.master_seed", 0);
    run.min_completion = r.number("ensemble.min_completion", 0.95);
    if (!(run.min_completion > 0.0 && run.min_completion <= 1.0)) {
        throw ConfigError("ensemble.min_completion must lie in (0, 1]", r.line("ensemble.min_completion"));
    }

    run.time.t_min = r.number("time.t_min", 0.1);
    run.time.t_max = r.number("time.t_max", 1000.0);
    run.time.n_log = static_cast<int>(r.integer("time.n_log", 40));
    run.time.window_dt = r.number("time.window_dt", 1.0);

    const std::string rule_default = run.model.kind == ModelKind::Floquet ? "floquet" : "fixed";
    run.window.rule = r.checked("window.rule", [&] { return window_rule_from_string(r.string("window.rule", rule_default)); });
    run.window.fixed = {r.number("window.t_i", 10.0), r.number("window.t_f", 1000.0)};
    run.window.length = r.number("window.length", 100.0);
    if (!(run.window.fixed.t_f > run.window.fixed.t_i) || run.window.fixed.t_i < 0.0) {
        throw ConfigError("window needs 0 <= t_i < t_f", r.line("window.t_f"));
    }
    if (!(run.window.length > 0.0)) throw ConfigError("window.length must be positive", r.line("window.length"));

    run.krylov.subspace_dim = static_cast<int>(r.integer("krylov.subspace_dim", 30));
    run.krylov.step_dt = r.number("krylov.step_dt", 5.0);
    run.krylov.tolerance = r.number("krylov.tolerance", 1e-10);
    run.krylov.max_restarts = static_cast<int>(r.integer("krylov.max_restarts", 40));
    r.checked("krylov.subspace_dim", [&] { run.krylov.validate(); return 0; });

    HeisenbergSettings& h = cfg.heisenberg;
    h.L_list = r.integers("heisenberg.sizes");
    h.W_grid = r.numbers("heisenberg.W_values");
    h.n_realizations = r.integer("heisenberg.realizations", 10);
    h.center_fraction = r.number("heisenberg.center_fraction", kDefaultCenterFraction);
    h.ed_cap = static_cast<std::size_t>(r.integer("heisenberg.ed_cap", static_cast<long>(kDefaultEdCap)));
    h.gauge_b = r.number("heisenberg.gauge_b", 1.0);
    h.fit_path = r.string("heisenberg.fit", "");
    if (h.n_realizations < 1) throw ConfigError("heisenberg.realizations must be >= 1", r.line("heisenberg.realizations"));
    if (!(h.center_fraction > 0.0 && h.center_fraction <= 1.0)) {
        throw ConfigError("heisenberg.center_fraction must lie in (0, 1]", r.line("heisenberg.center_fraction"));
    }
    if (!(h.gauge_b > 0.0)) throw ConfigError("heisenberg.gauge_b must be positive", r.line("heisenberg.gauge_b"));

    CollapseSettings& c = cfg.collapse;
    c.input = r.string("collapse.input", "");
    if (r.get("collapse.ansatz")) {
        c.ansatz.clear();
        for (const auto& name : r.strings("collapse.ansatz")) {
            c.ansatz.push_back(r.checked("collapse.ansatz", [&] { return ansatz_kind_from_string(name); }));
        }
        if (c.ansatz.empty()) throw ConfigError("collapse.ansatz is empty", r.line("collapse.ansatz"));
    }
    c.optimizer.restarts = static_cast<int>(r.integer("collapse.restarts", 32));
    c.optimizer.seed = r.get("collapse.seed") ? r.unsigned64("collapse.seed", 0) : run.master_seed;
    c.optimizer.eta = r.number("collapse.eta", kDefaultEta);
    c.optimizer.nelder_mead.tolerance = r.number("collapse.tolerance", 1e-8);
    c.optimizer.nelder_mead.max_evaluations = static_cast<int>(r.integer("collapse.max_evaluations", 6000));
    if (c.optimizer.restarts < 1) throw ConfigError("collapse.restarts must be >= 1", r.line("collapse.restarts"));
    if (!(c.optimizer.eta > 0.0)) throw ConfigError("collapse.eta must be positive", r.line("collapse.eta"));
    c.power_law_box = read_box(r, "collapse.power_law_lo", "collapse.power_law_hi");
    c.bkt_box = read_box(r, "collapse.bkt_lo", "collapse.bkt_hi");

    FitSettings& f = cfg.fit;
    f.beta_input = r.string("fit.beta_input", "");
    f.beta_reference = r.string("fit.beta_reference", "");
    f.beta_W = r.number("fit.beta_W", 4.1);
    f.log_input = r.string("fit.log_input", "");
    f.log_window = {r.number("fit.log_t_i", 10.0), r.number("fit.log_t_f", 1000.0)};

    cfg.output_dir = r.string("output.dir", "results");

    r.checked("ensemble.n_realizations", [&] { run.validate(); return 0; });
    for (int L : run.L_list) {
        if (L < 2 || L > kMaxSites) throw ConfigError("grid.L entries must lie in [2, 64]", r.line("grid.L"));
    }
    return cfg;
}

} // namespace fockscope
