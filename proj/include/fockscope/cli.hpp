#pragma once

#include <map>
#include <string>
#include <vector>

#include "fockscope/config.hpp"
#include "fockscope/dynamics.hpp"

namespace fockscope {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitPartial = 3,
    kExitInsufficientData = 4,
};

struct CommandOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    int workers = 0; // 0: all logical cores
    bool resume = false;
    std::string out_dir; // empty: output.dir from the config
};

// Config file, then FOCKSCOPE_SEED, then --override assignments.
AppConfig load_app_config(const CommandOptions& options);

struct HeisenbergRow {
    int L;
    double W;
    double t_H;    // mean over realizations
    double stddev; // population std over realizations
    long count;
};

struct HeisenbergTable {
    std::vector<HeisenbergRow> rows;
    std::map<int, HeisenbergFit> fits;
};

// ED of every (L, W, realization) in the heisenberg settings, then one fit per L.
HeisenbergTable compute_heisenberg_table(const AppConfig& cfg, int workers);

int cmd_simulate(const CommandOptions& options);
int cmd_heisenberg_time(const CommandOptions& options);
int cmd_collapse(const CommandOptions& options);
int cmd_fit(const CommandOptions& options);
int cmd_report(const CommandOptions& options);

int run_cli(int argc, char** argv);

} // namespace fockscope
