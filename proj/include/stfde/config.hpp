#ifndef STFDE_CONFIG_HPP
#define STFDE_CONFIG_HPP

#include <string>
#include <vector>

#include "stfde/forward.hpp"

namespace stfde::config {

/// Scenario description as read from the key-value scenario file.
/// Expressions use the closed grammar of stfde::expr (variable t for the
/// temporal factors, x for the spatial coefficients).
struct ScenarioConfig {
    double alpha = 0.7;
    double delta = 0.2;
    double T = 1.0;
    int steps = 256;
    int modes = 4;
    int grid_points = 1024;
    long long paths = 1;
    unsigned long long seed = 0;
    std::string op = "laplace"; // laplace | elliptic
    std::string a_expr = "1";
    std::string c_expr = "0";
    std::vector<double> u0, u1, f1, f2; // mode coefficients, zero-padded to `modes`
    std::string g1_expr = "1";
    std::string g2_expr = "1";
    std::vector<double> gamma_pts = {0.0, 1.0};

    static ScenarioConfig parse(const std::string& text);
    static ScenarioConfig load(const std::string& path);
    std::string serialize() const;
    forward::Scenario build() const;

    bool operator==(const ScenarioConfig&) const = default;
};

/// Command-line run description shared by the subcommands.
struct RunConfig {
    std::string subcommand;
    std::string scenario_path;
    std::string out_dir;
    std::string moments_path;       // inverse: measured moments CSV
    bool simulate_moments = false;  // inverse: synthesize moments first
    std::string moment_mode = "semi"; // semi | mc
    // overrides, negative/zero = keep scenario value
    long long paths = -1;
    int steps = -1;
    int modes = -1;
    long long seed = -1;
    int workers = 0; // 0 = hardware concurrency
    bool quick = false;
    bool dump_paths = false;
    int n_rec = 4;
    double reg = -1.0;
    bool truncated_svd = false;
    int smoothing_window = 7;

    void apply_overrides(ScenarioConfig& sc) const;
};

} // namespace stfde::config

#endif
