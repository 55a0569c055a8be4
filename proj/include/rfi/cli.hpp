#pragma once

#include <cstdint>
#include <string>

#include "rfi/model_spec.hpp"

namespace rfi {

/// Default seed for the bundled synthetic dataset.
inline constexpr std::uint64_t kDefaultSimSeed = 20242574;

/// Synthetic-dataset shape, defaulting to the published herd counts.
struct SimOptions {
    int n_sires = 125;
    int n_dams = 477;
    int n_offspring = 645;
    int n_dim_levels = 7;
    int n_tw_levels = 143;
    std::uint64_t seed = kDefaultSimSeed;
    bool raw_scale = true;
    bool with_test_week = true;
};

/// Everything a command needs: input paths, the model, and simulation shape.
struct RunConfig {
    std::string phenotypes;
    std::string pedigree;
    ModelSpec model;
    SimOptions sim;
};

/// Parse a JSON config. Unreadable file -> IoError; malformed JSON, unknown
/// keys, or bad types -> ValidationError.
RunConfig load_config(const std::string& path);

struct CompareResult {
    double spearman = 0.0;
    int shared = 0;
};

/// Write pedigree.csv, phenotypes.csv, truth.json, true_genetic_values.csv,
/// and manifest.json into out_dir.
void cmd_simulate(const RunConfig& config, const std::string& out_dir);

/// Fit the configured family and write the run directory: per-chain traces
/// and samples, summary.json, diagnostics.csv, genetic values, coefficient
/// report, manifest.json.
void cmd_fit(const RunConfig& config, const std::string& out_dir);

/// Recompute diagnostics.csv from the trace files of an existing run.
/// Returns the largest final shrink factor.
double cmd_diagnose(const std::string& run_dir);

/// Rank-compare the genetic values of two runs; writes the per-animal rank
/// table to out_csv.
CompareResult cmd_compare(const std::string& run_a, const std::string& run_b,
                          const std::string& out_csv);

/// Entry point behind main(): parses subcommands and maps errors to exit
/// codes (0 ok, 2 validation, 3 numerical, 4 I/O).
int cli_main(int argc, char** argv);

}  // namespace rfi
