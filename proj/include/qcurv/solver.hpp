#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qcurv/background.hpp"
#include "qcurv/grid.hpp"
#include "qcurv/kernel.hpp"

namespace qcurv {

enum class SolverMethod { FixedPoint, Minimize, Both };

std::string to_string(SolverMethod m);
// Accepts "fixed_point", "minimize", "both".
SolverMethod parse_solver_method(const std::string& name);

struct LineSearch {
    double armijo = 1e-4;  // sufficient-decrease constant
    double shrink = 0.5;   // step factor per backtrack
    int max_backtracks = 40;
};

struct SolverConfig {
    double alpha = 0.5;
    SolverMethod method = SolverMethod::Minimize;
    double damping = 0.5;             // Picard relaxation tau
    double damping_floor = 1.0 / 64;  // tau is never halved below this
    double tol = 1e-4;
    std::size_t max_iter = 2000;
    LineSearch line_search;
};

// Throws InvalidArgument on tau outside (0, 1], tol <= 0, max_iter = 0.
void validate(const SolverConfig& cfg);

// Everything a solve needs that does not change between iterations.
struct SolverContext {
    GridPtr grid;
    CurvatureSpec spec;
    double alpha = 0.0;
    Field f;
    Background bg;
    Field K;
    WeightSpec weight;
    double theta_target = 0.0;  // Lambda_n alpha / 2
};

// Builds background, K and the gauge weight. Throws InvalidArgument when
// alpha is outside admissible_alpha_range(spec.l, n) and DegenerateCurvature
// when f <= 0 everywhere.
SolverContext make_context(const CurvatureSpec& spec, double alpha, const GridPtr& grid);

struct TraceRow {
    std::size_t iter = 0;
    double residual = 0.0;
    double F = 0.0;
    double theta = 0.0;
};

struct Solution {
    std::string method;
    double alpha = 0.0;
    Field u;   // u0 + v1
    Field v1;  // normalised so that int K e^{n v1} = theta_target
    double theta = 0.0;  // integrate(f e^{nu})
    double theta_target = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    // Residual of the method's own discrete equation, relative to sup of the
    // curvature density: the gradient of F for minimize, the oscillation of
    // u - L[f e^{nu}] for fixed_point.
    double residual = 0.0;
    // sup |(-Delta)^{n/2} u - f e^{nu}| / sup |f e^{nu}| on interior nodes with
    // the finite-difference polyharmonic operator; a cross-check shared by
    // both methods.
    double pde_residual = 0.0;
    std::vector<double> f_history;
    std::vector<double> energy_history;
    std::vector<TraceRow> trace;
    Field density;  // f e^{nu}
};

// F(v) = 1/2 E(v) + int psi v - (Theta/n) log int K e^{nv}.
// Throws NotAdmissible when int K e^{nv} <= 0.
double functional_F(const Field& v, const SolverContext& ctx);

// L^2 gradient of F: (-Delta)^{n/2} v + psi - Theta K e^{nv} / int K e^{nv},
// where (-Delta)^{n/2} is the operator of the discrete energy. Satisfies
// dF(v)[phi] = integrate(gradient * phi) exactly.
Field gradient_F(const Field& v, const SolverContext& ctx);

// Starting point in the admissible set: 0 if int K > 0, otherwise a Gaussian
// bump at the maximiser of K scaled up until int K e^{nv} > 0.
Field initial_iterate(const SolverContext& ctx);

// Preconditioned gradient descent with Armijo backtracking. `start` defaults
// to initial_iterate(ctx).
Solution solve_minimize(const SolverContext& ctx, const SolverConfig& cfg,
                        const std::optional<Field>& start = std::nullopt);

// Damped Picard iteration on the normal-solution representation.
Solution solve_fixed_point(const SolverContext& ctx, const SolverConfig& cfg, const KernelTable& table,
                           const std::optional<Field>& start = std::nullopt);

// One undamped-to-cfg.damping Picard step from u (exposed for the fixed-point
// property check). Returns the next normalised iterate.
Field picard_step(const Field& u, const SolverContext& ctx, const KernelTable& table, double tau);

// sup_i |(a_i - b_i) - m| over interior nodes, m the weighted mean of a - b.
double cross_agreement(const Field& a, const Field& b, const WeightSpec& weight);

// Fitted exponent p of int_{B_R} |u| dx ~ R^p over [R_max/100, R_max].
double growth_check(const Field& u);
double growth_check(const Solution& sol, const RadialGrid& grid);

}  // namespace qcurv
