#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fockscope/config.hpp"
#include "fockscope/dynamics.hpp"
#include "fockscope/ensemble.hpp"
#include "fockscope/fock.hpp"
#include "fockscope/models.hpp"
#include "fockscope/scaling.hpp"

namespace fockscope {

using Json = nlohmann::json;

inline constexpr const char* kCodeVersion = "fockscope 0.1.0";

// Round-trip decimal text (17 significant digits).
std::string format_double(double x);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::string& path);

// Stable JSON text: sorted keys, two-space indent, trailing newline.
std::string dump_json(const Json& j);

struct CsvTable {
    std::vector<std::string> comments; // '#' lines without the marker
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> row_lines;

    std::size_t column(const std::string& name) const; // throws DomainError if absent
    double number(std::size_t row, std::size_t col) const;
    std::string context(std::size_t row) const;

    std::string source;
};

CsvTable parse_csv(const std::string& text, const std::string& source = "<csv>");
CsvTable read_csv_file(const std::string& path);

// Value of a "# key=value" comment line, empty if absent.
std::string csv_comment_value(const CsvTable& table, const std::string& key);

std::string radial_distribution_csv(const RadialDistribution& d);
Json radial_distribution_json(const RadialDistribution& d, int L);

// Replay record of one disorder draw: phases for Hamiltonian models, gate
// hashes for Floquet circuits.
Json realization_json(const ModelSpec& spec);

Json run_config_json(const RunConfig& run);
Json heisenberg_fit_json(const HeisenbergFit& fit);
HeisenbergFit heisenberg_fit_from_json(const Json& j);

std::string series_csv(const AggregateSeries& s, const std::string& manifest_hash);
AggregateSeries read_series_csv(const std::string& path);

std::string window_averages_csv(const std::vector<WindowAverage>& rows, const std::string& manifest_hash);
std::vector<WindowAverage> read_window_averages(const std::string& path);
ScalingDataset dataset_from_window_averages(const std::vector<WindowAverage>& rows);

Json point_json(const PointResult& p);
PointResult point_from_json(const Json& j);

struct Checkpoint {
    Json manifest;
    double time = 0.0;
    ComplexVector amplitudes;
};

void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

Json collapse_report_json(const CollapseResult& r);
std::string collapsed_csv(const std::vector<CollapsedPoint>& points, const std::string& manifest_hash);

} // namespace fockscope
