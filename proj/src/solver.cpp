#include "qcurv/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "qcurv/error.hpp"
#include "qcurv/fit.hpp"
#include "qcurv/radial_operator.hpp"

namespace qcurv {

std::string to_string(SolverMethod m) {
    switch (m) {
        case SolverMethod::FixedPoint: return "fixed_point";
        case SolverMethod::Minimize: return "minimize";
        case SolverMethod::Both: return "both";
    }
    return "unknown";
}

SolverMethod parse_solver_method(const std::string& name) {
    if (name == "fixed_point") return SolverMethod::FixedPoint;
    if (name == "minimize") return SolverMethod::Minimize;
    if (name == "both") return SolverMethod::Both;
    throw InvalidArgument("unknown solver method '" + name + "' (expected fixed_point, minimize or both)");
}

void validate(const SolverConfig& cfg) {
    if (!(cfg.damping > 0.0 && cfg.damping <= 1.0)) throw InvalidArgument("damping must lie in (0, 1]");
    if (!(cfg.damping_floor > 0.0 && cfg.damping_floor <= cfg.damping))
        throw InvalidArgument("damping floor must lie in (0, damping]");
    if (!(cfg.tol > 0.0)) throw InvalidArgument("tol must be positive");
    if (cfg.max_iter == 0) throw InvalidArgument("max_iter must be positive");
    const auto& ls = cfg.line_search;
    if (!(ls.armijo > 0.0 && ls.armijo < 1.0) || !(ls.shrink > 0.0 && ls.shrink < 1.0) || ls.max_backtracks < 1)
        throw InvalidArgument("line search needs armijo and shrink in (0, 1) and max_backtracks >= 1");
}

SolverContext make_context(const CurvatureSpec& spec, double alpha, const GridPtr& grid) {
    const int n = grid->dimension();
    const auto [lo, hi] = admissible_alpha_range(spec.l, n);
    if (!(alpha > lo && alpha < hi)) {
        std::ostringstream msg;
        msg << "alpha=" << alpha << " is outside the admissible interval (" << lo << ", " << hi << ") for l=" << spec.l
            << ", n=" << n;
        throw InvalidArgument(msg.str());
    }
    check_curvature(spec, grid);

    SolverContext ctx;
    ctx.grid = grid;
    ctx.spec = spec;
    ctx.alpha = alpha;
    ctx.f = spec.sample(grid);
    ctx.bg = build_background(alpha, grid);
    ctx.K = modified_curvature(spec, ctx.bg);
    const double eps = background_epsilon(alpha, spec.l, n);
    ctx.weight = WeightSpec{std::isfinite(eps) ? eps : 1.0};
    ctx.theta_target = 0.5 * sphere_q_mass(n) * alpha;
    return ctx;
}

namespace {

// log int K e^{nv} and the normalised density K e^{nv} / int K e^{nv}.
struct Exponential {
    double log_mass;
    std::vector<double> p;
};

Exponential exponential_moment(const Field& v, const Field& K) {
    require_same_grid(v, K);
    const auto& grid = *v.grid();
    const int n = grid.dimension();
    const std::size_t N = v.size();
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < N; ++i)
        if (K[i] != 0.0) top = std::max(top, n * v[i]);
    if (!std::isfinite(top)) throw NotAdmissible("curvature integral vanishes: K is identically zero");
    Exponential e;
    e.p.resize(N);
    double z = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        e.p[i] = K[i] * std::exp(n * v[i] - top);
        z += grid.weight(i) * e.p[i];
    }
    if (!(z > 0.0) || !std::isfinite(z)) {
        std::ostringstream msg;
        msg << "int K e^{nv} dx = " << z * std::exp(top) << " is not positive";
        throw NotAdmissible(msg.str());
    }
    for (double& x : e.p) x /= z;
    e.log_mass = top + std::log(z);
    return e;
}

double sup_abs(std::span<const double> x) {
    double m = 0.0;
    for (double a : x) m = std::max(m, std::abs(a));
    return m;
}

void recenter(Field& v, const WeightSpec& w) { v -= weighted_mean(v, w); }

double relative_change(const Field& next, const Field& prev) {
    double d = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) d = std::max(d, std::abs(next[i] - prev[i]));
    return d / std::max(1.0, next.max_abs());
}

double pde_residual(const Field& u, const Field& f) {
    const int n = u.grid()->dimension();
    const Field lhs = polyharmonic(u);
    const std::size_t end = interior_end(*u.grid());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < end; ++i) {
        const double rho = f[i] * std::exp(n * u[i]);
        num = std::max(num, std::abs(lhs[i] - rho));
        den = std::max(den, std::abs(rho));
    }
    return den > 0.0 ? num / den : num;
}

// Fills u, v1, theta, pde_residual from the final v (any additive constant).
void finish(Solution& sol, const Field& v, const SolverContext& ctx) {
    const int n = ctx.grid->dimension();
    const Exponential e = exponential_moment(v, ctx.K);
    const double shift = (std::log(ctx.theta_target) - e.log_mass) / n;
    sol.alpha = ctx.alpha;
    sol.theta_target = ctx.theta_target;
    sol.v1 = v + shift;
    sol.u = ctx.bg.u0 + sol.v1;
    Field dens = ctx.f;
    for (std::size_t i = 0; i < dens.size(); ++i) dens[i] *= std::exp(n * sol.u[i]);
    sol.theta = integrate(dens);
    sol.density = std::move(dens);
    sol.pde_residual = pde_residual(sol.u, ctx.f);
}

}  // namespace

double functional_F(const Field& v, const SolverContext& ctx) {
    require_same_grid(v, ctx.K);
    const int n = ctx.grid->dimension();
    const Exponential e = exponential_moment(v, ctx.K);
    double linear = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) linear += ctx.grid->weight(i) * ctx.bg.psi[i] * v[i];
    return 0.5 * energy(v) + linear - ctx.theta_target / n * e.log_mass;
}

Field gradient_F(const Field& v, const SolverContext& ctx) {
    const Exponential e = exponential_moment(v, ctx.K);
    const std::vector<double> sv = energy_matvec(v);
    Field g(v.grid());
    for (std::size_t i = 0; i < v.size(); ++i)
        g[i] = sv[i] / ctx.grid->weight(i) + ctx.bg.psi[i] - ctx.theta_target * e.p[i];
    return g;
}

Field initial_iterate(const SolverContext& ctx) {
    Field v(ctx.grid);
    if (integrate(ctx.K) > 0.0) return v;
    std::size_t top = 0;
    for (std::size_t i = 1; i < ctx.K.size(); ++i)
        if (ctx.K[i] > ctx.K[top]) top = i;
    const double c = ctx.grid->node(top);
    const double width = std::max(0.5, 0.25 * c);
    const Field bump(ctx.grid, [c, width](double r) { return std::exp(-((r - c) / width) * ((r - c) / width)); });
    const int n = ctx.grid->dimension();
    for (double s = 0.5; s < 200.0; s *= 1.5) {
        double z = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) z += ctx.grid->weight(i) * ctx.K[i] * std::exp(n * s * bump[i]);
        if (z > 0.0) return s * bump;
    }
    throw NotAdmissible("no admissible starting point found: int K e^{nv} stays non-positive");
}

Solution solve_minimize(const SolverContext& ctx, const SolverConfig& cfg, const std::optional<Field>& start) {
    validate(cfg);
    const auto& grid = *ctx.grid;
    const std::size_t N = grid.size();
    const int n = grid.dimension();

    // Metric for the descent direction: the energy plus a weighted mass term
    // that removes the constants from its kernel.
    const Field h = ctx.weight.sample(ctx.grid);
    double hmass = 0.0;
    for (std::size_t i = 0; i < N; ++i) hmass += grid.weight(i) * h[i];
    const double mu = n * ctx.theta_target / hmass;
    Eigen::SparseMatrix<double> P = energy_matrix(grid);
    for (std::size_t i = 0; i < N; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        P.coeffRef(k, k) += mu * grid.weight(i) * h[i];
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> metric(P);
    if (metric.info() != Eigen::Success) throw SolverBreakdown("descent metric factorisation failed");

    Solution sol;
    sol.method = "minimize";
    Field v = start ? *start : initial_iterate(ctx);
    recenter(v, ctx.weight);
    double F = functional_F(v, ctx);
    Field g = gradient_F(v, ctx);
    Eigen::VectorXd eg(static_cast<Eigen::Index>(N));
    auto euclidean = [&](const Field& grad, Eigen::VectorXd& out) {
        for (std::size_t i = 0; i < N; ++i) out[static_cast<Eigen::Index>(i)] = grid.weight(i) * grad[i];
    };
    euclidean(g, eg);
    auto residual_of = [&](const Field& grad, const Field& vv) {
        const Exponential e = exponential_moment(vv, ctx.K);
        return sup_abs(grad.values()) / (ctx.theta_target * sup_abs(e.p));
    };
    sol.f_history.push_back(F);
    sol.energy_history.push_back(energy(v));
    double residual = residual_of(g, v);
    sol.trace.push_back({0, residual, F, ctx.theta_target});

    double step = 1.0;
    Eigen::VectorXd eg_next(static_cast<Eigen::Index>(N));
    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        const Eigen::VectorXd d = -metric.solve(eg);
        const double slope = eg.dot(d);
        if (!(slope < 0.0)) break;  // gradient vanished to rounding

        Field trial(ctx.grid);
        double F_trial = 0.0;
        bool accepted = false;
        bool admissible_seen = false;
        double t = step;
        for (int b = 0; b < cfg.line_search.max_backtracks; ++b, t *= cfg.line_search.shrink) {
            for (std::size_t i = 0; i < N; ++i) trial[i] = v[i] + t * d[static_cast<Eigen::Index>(i)];
            try {
                F_trial = functional_F(trial, ctx);
            } catch (const NotAdmissible&) {
                continue;
            }
            admissible_seen = true;
            if (F_trial <= F + cfg.line_search.armijo * t * slope) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (!admissible_seen) throw SolverBreakdown("every trial step left the admissible set");
            break;  // no further decrease representable
        }

        recenter(trial, ctx.weight);
        const double change = relative_change(trial, v);
        const Field g_next = gradient_F(trial, ctx);
        euclidean(g_next, eg_next);
        // Barzilai-Borwein step measured in the descent metric.
        const Eigen::VectorXd s = t * d;
        const Eigen::VectorXd y = eg_next - eg;
        const double sy = s.dot(y);
        step = sy > 0.0 ? std::clamp(s.dot(P * s) / sy, 1e-4, 1e4) : 1.0;

        v = trial;
        g = g_next;
        eg = eg_next;
        F = functional_F(v, ctx);
        residual = residual_of(g, v);
        sol.iterations = it;
        sol.f_history.push_back(F);
        sol.energy_history.push_back(energy(v));
        sol.trace.push_back({it, residual, F, ctx.theta_target});
        if (change < cfg.tol && residual < cfg.tol) {
            sol.converged = true;
            break;
        }
    }
    sol.residual = residual;
    if (!sol.converged && residual < cfg.tol) sol.converged = true;
    finish(sol, v, ctx);
    return sol;
}

namespace {

double oscillation(const Field& a, const Field& b) {
    const std::size_t end = interior_end(*a.grid());
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < end; ++i) {
        const double w = a[i] - b[i];
        lo = std::min(lo, w);
        hi = std::max(hi, w);
    }
    return hi - lo;
}

Field curvature_density(const Field& u, const SolverContext& ctx) {
    // Theta f e^{nu} / int f e^{nu}, with f e^{nu} = K e^{n(u - u0)}.
    const Exponential e = exponential_moment(u - ctx.bg.u0, ctx.K);
    Field rho(u.grid());
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = ctx.theta_target * e.p[i];
    return rho;
}

// Adds the constant that makes int f e^{nu} = Theta.
void normalise(Field& u, const SolverContext& ctx) {
    const Exponential e = exponential_moment(u - ctx.bg.u0, ctx.K);
    u += (std::log(ctx.theta_target) - e.log_mass) / ctx.grid->dimension();
}

// (1 - tau) u + tau w, normalised; halves tau while the blend is outside
// the admissible set.
Field relax(const Field& u, const Field& w, const SolverContext& ctx, double tau, double floor) {
    for (;;) {
        Field next = (1.0 - tau) * u + tau * w;
        try {
            normalise(next, ctx);
            return next;
        } catch (const NotAdmissible&) {
            tau *= 0.5;
            if (tau < floor) throw SolverBreakdown("Picard damping fell below its floor: iterate left the admissible set");
        }
    }
}

}  // namespace

Field picard_step(const Field& u, const SolverContext& ctx, const KernelTable& table, double tau) {
    const Field w = log_potential(curvature_density(u, ctx), table);
    return relax(u, w, ctx, tau, tau / 64.0);
}

Solution solve_fixed_point(const SolverContext& ctx, const SolverConfig& cfg, const KernelTable& table,
                           const std::optional<Field>& start) {
    validate(cfg);
    if (table.grid() != ctx.grid) throw GridMismatch("kernel table and solver context live on different grids");

    Solution sol;
    sol.method = "fixed_point";
    Field u = ctx.bg.u0 + (start ? *start : initial_iterate(ctx));
    normalise(u, ctx);
    double change = std::numeric_limits<double>::infinity();
    double residual = std::numeric_limits<double>::infinity();
    Field w;
    for (std::size_t it = 0;; ++it) {
        w = log_potential(curvature_density(u, ctx), table);
        residual = oscillation(u, w);
        const Field v = u - ctx.bg.u0;
        const double F = functional_F(v, ctx);
        sol.f_history.push_back(F);
        sol.energy_history.push_back(energy(v));
        sol.trace.push_back({it, residual, F, ctx.theta_target});
        sol.iterations = it;
        if (residual < cfg.tol && change < cfg.tol) {
            sol.converged = true;
            break;
        }
        if (it == cfg.max_iter) break;
        Field next = relax(u, w, ctx, cfg.damping, cfg.damping_floor);
        change = relative_change(next, u);
        u = std::move(next);
    }
    sol.residual = residual;
    // Report the last potential image rather than the damped blend: it is
    // within `residual` of u, but carries no trace of the starting iterate.
    finish(sol, w - ctx.bg.u0, ctx);
    return sol;
}

double cross_agreement(const Field& a, const Field& b, const WeightSpec& weight) {
    require_same_grid(a, b);
    const Field gap = a - b;
    const double m = weighted_mean(gap, weight);
    const std::size_t end = interior_end(*a.grid());
    double d = 0.0;
    for (std::size_t i = 0; i < end; ++i) d = std::max(d, std::abs(gap[i] - m));
    return d;
}

double growth_check(const Field& u) {
    const auto& grid = *u.grid();
    const double lo = grid.r_max() / 100.0;
    std::vector<double> x, y;
    double acc = 0.0;
    // The last node carries only a half cell; stop one short of it.
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        acc += grid.weight(i) * std::abs(u[i]);
        if (grid.node(i) >= lo && acc > 0.0) {
            x.push_back(std::log(grid.node(i)));
            y.push_back(std::log(acc));
        }
    }
    return least_squares_slope(x, y);
}

double growth_check(const Solution& sol, const RadialGrid& grid) {
    if (sol.u.grid().get() != &grid) throw GridMismatch("solution does not live on this grid");
    return growth_check(sol.u);
}

}  // namespace qcurv
