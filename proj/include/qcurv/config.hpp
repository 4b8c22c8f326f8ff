#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qcurv/background.hpp"
#include "qcurv/ineq.hpp"
#include "qcurv/solver.hpp"

namespace qcurv {

struct GridConfig {
    std::size_t nodes = 2000;
    double r_max = 1e4;
    double core_radius = 1.0;

    GridPtr build(int n) const { return make_radial_grid(n, nodes, r_max, GridStretch{core_radius}); }
};

struct CurvatureConfig {
    // power | gaussian | sign_changing | manufactured | constant, or empty when
    // csv is set.
    std::string preset = "power";
    std::filesystem::path csv;
    double l = 2.0;
};

struct DiagnosticsToggles {
    bool normality = true;
    bool completeness = true;
    bool growth = true;
    bool obstruction = true;
};

struct IneqConfig {
    std::vector<double> epsilons{0.25, 0.5, 1.0, 2.0};
    TrialKind family = TrialKind::Mixed;
    std::size_t family_size = 200;
    double margin = 0.1;
    GridConfig grid{3000, 1e5, 0.01};
};

struct RunConfig {
    int dimension = 2;
    GridConfig grid;
    CurvatureConfig curvature;
    std::vector<double> alphas{0.5};
    bool alpha_list = false;  // alpha was given as an array
    SolverConfig solver;
    DiagnosticsToggles diagnostics;
    IneqConfig ineq;
    std::filesystem::path output = "qcurv_out";
    unsigned workers = 1;
    std::uint64_t seed = 1;
};

// Parses a JSON configuration. Unknown keys, wrong types and out-of-range
// values raise ConfigError naming the field path ("solver.tol") or, for
// syntax errors, "<origin>:<line>:<column>". Relative CSV paths are resolved
// against base_dir. Alpha values are checked against the admissible window.
RunConfig parse_config(const std::string& text, const std::string& origin = "config",
                       const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& file);

// The curvature of one run (the manufactured preset depends on alpha).
CurvatureSpec make_curvature(const RunConfig& cfg, double alpha);

}  // namespace qcurv
