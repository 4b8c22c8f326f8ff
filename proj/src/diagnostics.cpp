#include "qcurv/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "qcurv/error.hpp"
#include "qcurv/fit.hpp"
#include "qcurv/format.hpp"

namespace qcurv {

double normality_residual(const Field& u, const Field& density, const KernelTable& table) {
    require_same_grid(u, density);
    const Field w = log_potential(density, table);
    const std::size_t end = interior_end(*u.grid());
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < end; ++i) {
        lo = std::min(lo, u[i] - w[i]);
        hi = std::max(hi, u[i] - w[i]);
    }
    return hi - lo;
}

double normality_residual(const Solution& sol, const KernelTable& table) {
    return normality_residual(sol.u, sol.density, table);
}

std::vector<std::size_t> outer_window(const RadialGrid& grid, double decades, std::size_t min_nodes) {
    const std::size_t N = grid.size();
    std::size_t first = grid.lower_index(grid.r_max() * std::pow(10.0, -decades));
    if (N - first < min_nodes) first = N > min_nodes ? N - min_nodes : 0;
    std::vector<std::size_t> idx;
    for (std::size_t i = first; i < N; ++i) idx.push_back(i);
    return idx;
}

std::vector<double> ray_distance(const Field& u) {
    std::vector<double> e(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) e[i] = std::exp(u[i]);
    return u.grid()->ray_integral(e);
}

double predicted_exponent(double theta, int n) { return std::max(1.0 - 2.0 * theta / sphere_q_mass(n), 0.0); }

double fitted_completeness_exponent(const Field& u) {
    const auto& grid = *u.grid();
    const std::vector<double> d = ray_distance(u);
    std::vector<double> x, y;
    for (std::size_t i : outer_window(grid)) {
        x.push_back(std::log(grid.node(i)));
        y.push_back(std::log(d[i]));
    }
    return least_squares_slope(x, y);
}

ExponentFit completeness_exponent(const Solution& sol) {
    return {fitted_completeness_exponent(sol.u), predicted_exponent(sol.theta, sol.u.grid()->dimension())};
}

double asymptotic_slope(const Field& u) {
    const auto& grid = *u.grid();
    std::vector<double> x, y;
    for (std::size_t i : outer_window(grid)) {
        x.push_back(std::log(grid.node(i)));
        y.push_back(u[i]);
    }
    return least_squares_slope(x, y);
}

double asymptotic_slope(const Solution& sol) { return asymptotic_slope(sol.u); }

std::string to_string(Obstruction o) {
    switch (o) {
        case Obstruction::Holds: return "holds";
        case Obstruction::Fails: return "fails";
        case Obstruction::NotApplicable: return "not_applicable";
    }
    return "unknown";
}

Obstruction obstruction_indicator(const CurvatureSpec& spec, const GridPtr& grid, double tolerance) {
    const Field f = spec.sample(grid);
    for (double x : f.values())
        if (!(x > 0.0)) return Obstruction::NotApplicable;
    const int n = grid->dimension();
    const auto r = grid->nodes();
    const std::size_t N = r.size();
    for (std::size_t i = 0; i < N; ++i) {
        // Three-point derivative on the (non-uniform) stencil around i.
        const std::size_t a = i == 0 ? 0 : (i + 1 == N ? N - 3 : i - 1);
        const double x0 = r[a], x1 = r[a + 1], x2 = r[a + 2];
        const double y0 = f[a], y1 = f[a + 1], y2 = f[a + 2];
        const double x = r[i];
        const double d = y0 * (2 * x - x1 - x2) / ((x0 - x1) * (x0 - x2)) +
                         y1 * (2 * x - x0 - x2) / ((x1 - x0) * (x1 - x2)) +
                         y2 * (2 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
        if (x * d / f[i] < -0.5 * n - tolerance) return Obstruction::Fails;
    }
    return Obstruction::Holds;
}

DiagnosticsReport diagnose(const Solution& sol, const CurvatureSpec& spec, const KernelTable& table) {
    DiagnosticsReport rep;
    const int n = sol.u.grid()->dimension();
    rep.theta = sol.theta;
    rep.theta_target = sol.theta_target;
    rep.normality_residual = normality_residual(sol, table);
    rep.asymptotic_slope = asymptotic_slope(sol);
    rep.completeness_exponent = fitted_completeness_exponent(sol.u);
    rep.predicted_exponent = predicted_exponent(sol.theta, n);
    rep.complete = rep.predicted_exponent > 0.0;
    rep.obstruction_flag = obstruction_indicator(spec, sol.u.grid()) == Obstruction::Holds;
    return rep;
}

std::string to_json(const DiagnosticsReport& r) {
    nlohmann::ordered_json j;
    j["theta"] = r.theta;
    j["theta_target"] = r.theta_target;
    j["normality_residual"] = r.normality_residual;
    j["asymptotic_slope"] = r.asymptotic_slope;
    j["completeness_exponent"] = r.completeness_exponent;
    j["predicted_exponent"] = r.predicted_exponent;
    j["complete"] = r.complete;
    j["obstruction_flag"] = r.obstruction_flag;
    return j.dump(2) + "\n";
}

std::string csv_header() {
    return "theta,theta_target,normality_residual,asymptotic_slope,completeness_exponent,predicted_exponent,complete,"
           "obstruction_flag";
}

std::string csv_row(const DiagnosticsReport& r) {
    return format_number(r.theta) + ',' + format_number(r.theta_target) + ',' + format_number(r.normality_residual) +
           ',' + format_number(r.asymptotic_slope) + ',' + format_number(r.completeness_exponent) + ',' +
           format_number(r.predicted_exponent) + ',' + (r.complete ? "true" : "false") + ',' +
           (r.obstruction_flag ? "true" : "false");
}

}  // namespace qcurv
