#pragma once

#include <string>
#include <vector>

#include "qcurv/background.hpp"
#include "qcurv/kernel.hpp"
#include "qcurv/solver.hpp"

namespace qcurv {

struct DiagnosticsReport {
    double theta = 0.0;
    double theta_target = 0.0;
    double normality_residual = 0.0;
    double asymptotic_slope = 0.0;
    double completeness_exponent = 0.0;
    double predicted_exponent = 0.0;
    bool complete = false;
    bool obstruction_flag = false;
};

// sup - inf over interior nodes of u - L[density].
double normality_residual(const Field& u, const Field& density, const KernelTable& table);
double normality_residual(const Solution& sol, const KernelTable& table);

// Node indices of the fitting window [R_max/10, R_max], widened inwards to at
// least `min_nodes` nodes.
std::vector<std::size_t> outer_window(const RadialGrid& grid, double decades = 1.0, std::size_t min_nodes = 30);

// Ray length d_g(0, r_k) = int_0^{r_k} e^{u(t)} dt for every node.
std::vector<double> ray_distance(const Field& u);

struct ExponentFit {
    double fitted = 0.0;
    double predicted = 0.0;
};

// max{1 - 2 theta / Lambda_n, 0}.
double predicted_exponent(double theta, int n);

// Slope of log d_g(0, R) against log R over the outer decade.
double fitted_completeness_exponent(const Field& u);
ExponentFit completeness_exponent(const Solution& sol);

// Least-squares slope of u against log r over the outer decade.
double asymptotic_slope(const Field& u);
double asymptotic_slope(const Solution& sol);

enum class Obstruction {
    Holds,          // r f'/f >= -n/2 everywhere: no complete finite-total-curvature metric
    Fails,          // the condition is violated somewhere
    NotApplicable,  // f is not positive on the whole grid
};

std::string to_string(Obstruction o);

// Checks r f'(r) / f(r) >= -n/2 - tolerance at every node, with f' from
// second-order differences.
Obstruction obstruction_indicator(const CurvatureSpec& spec, const GridPtr& grid, double tolerance = 1e-3);

DiagnosticsReport diagnose(const Solution& sol, const CurvatureSpec& spec, const KernelTable& table);

// Flat JSON object with one key per report field.
std::string to_json(const DiagnosticsReport& report);
std::string csv_header();
std::string csv_row(const DiagnosticsReport& report);

}  // namespace qcurv
