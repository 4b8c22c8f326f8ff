#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qcurv/config.hpp"
#include "qcurv/diagnostics.hpp"
#include "qcurv/kernel.hpp"
#include "qcurv/solver.hpp"

namespace qcurv {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitUnconverged = 2;

// Command-line overrides applied on top of the config file.
struct CommandOptions {
    std::optional<std::filesystem::path> out;
    std::optional<unsigned> workers;
    std::optional<std::uint64_t> seed;
    std::ostream* log = nullptr;  // progress and errors; defaults to std::cerr
};

// $QCURV_KERNEL_CACHE, or empty when unset.
std::filesystem::path kernel_cache_dir();

// Result of one solve with its diagnostics.
struct RunOutcome {
    double alpha = 0.0;
    bool converged = false;
    std::string error;  // set when the run aborted
    std::optional<Solution> primary;
    std::optional<Solution> secondary;  // fixed_point result when method = both
    double cross_agreement = 0.0;
    bool methods_agree = true;
    DiagnosticsReport report;
    double growth_exponent = 0.0;
    Obstruction obstruction = Obstruction::NotApplicable;
};

// Solves one alpha and writes solution.csv, trace.csv, diagnostics.json and
// run.json into dir (created if needed). `table` may be null when neither
// the fixed-point method nor the normality diagnostic is requested.
RunOutcome run_one(const RunConfig& cfg, double alpha, const GridPtr& grid, const KernelTable* table,
                   const std::filesystem::path& dir);

int cmd_solve(const std::filesystem::path& config, const CommandOptions& opts = {});
int cmd_sweep(const std::filesystem::path& config, const CommandOptions& opts = {});
int cmd_verify(const std::filesystem::path& config, const CommandOptions& opts = {});

struct VerifyCheck {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

// The invariant suites behind cmd_verify; deterministic for a fixed seed.
std::vector<VerifyCheck> verify_checks(const RunConfig& cfg, const std::filesystem::path& out_dir);
std::string verify_json(const RunConfig& cfg, const std::vector<VerifyCheck>& checks);

}  // namespace qcurv
