#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fockscope/ensemble.hpp"
#include "fockscope/scaling.hpp"

namespace fockscope {

// Values of the declarative config format: a TOML subset with [sections],
// key = value lines, '#' comments, strings, booleans, numbers and arrays.
struct ConfigValue {
    enum class Type { Bool, Integer, Float, String, Array };
    Type type = Type::String;
    bool boolean = false;
    double number = 0.0;
    std::string text; // string payload, or the literal token for numbers
    std::vector<ConfigValue> items;
    int line = 0; // 0 for command-line overrides

    std::string describe() const;
};

class ConfigDocument {
public:
    // Keys are "section.key" ("key" at top level).
    const std::map<std::string, ConfigValue>& entries() const noexcept { return entries_; }
    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const ConfigValue* find(const std::string& key) const;
    void set(const std::string& key, ConfigValue value);

private:
    std::map<std::string, ConfigValue> entries_;
};

ConfigDocument parse_config(const std::string& text);
ConfigDocument load_config_file(const std::string& path);

// Parses one value literal (used for overrides).
ConfigValue parse_config_value(const std::string& literal, int line = 0);

// "key=value" or "section.key=value"; bare keys must name exactly one schema key.
void apply_override(ConfigDocument& doc, const std::string& assignment);

// All accepted keys, "section.key".
const std::vector<std::string>& config_schema();

// Rejects keys outside the schema, with the offending line.
void validate_schema(const ConfigDocument& doc);

struct HeisenbergSettings {
    std::vector<int> L_list;    // empty: use the run sizes
    std::vector<double> W_grid; // empty: use the run grid
    long n_realizations = 10;
    double center_fraction = kDefaultCenterFraction;
    std::size_t ed_cap = kDefaultEdCap;
    double gauge_b = 1.0;
    std::string fit_path; // precomputed fits for the heisenberg window rule
};

struct CollapseSettings {
    std::string input; // empty: <out>/window_averages.csv
    std::vector<AnsatzKind> ansatz{AnsatzKind::PowerLaw};
    std::optional<SearchBox> power_law_box;
    std::optional<SearchBox> bkt_box;
    OptimizerSettings optimizer;
};

struct FitSettings {
    std::string beta_input;
    std::string beta_reference;
    double beta_W = 4.1;
    std::string log_input;
    Window log_window{10.0, 1000.0};
};

struct AppConfig {
    RunConfig run;
    HeisenbergSettings heisenberg;
    CollapseSettings collapse;
    FitSettings fit;
    std::string output_dir = "results";
};

// Typed view of a validated document; missing keys take their named defaults.
AppConfig build_app_config(const ConfigDocument& doc);

// Inclusive arithmetic grid start, start+step, ... <= stop (within 1e-9 step).
std::vector<double> arithmetic_grid(double start, double stop, double step);

} // namespace fockscope
