#include "qcurv/commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "qcurv/error.hpp"
#include "qcurv/format.hpp"
#include "qcurv/radial_operator.hpp"
#include "qcurv/rng.hpp"

namespace qcurv {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

fs::path kernel_cache_dir() {
    const char* env = std::getenv("QCURV_KERNEL_CACHE");
    return env && *env ? fs::path(env) : fs::path();
}

namespace {

void write_file(const fs::path& file, const std::string& content) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + file.string());
    out << content;
    if (!out) throw Error("cannot write " + file.string());
}

std::string solution_csv(const Solution& sol) {
    std::ostringstream out;
    out << "r,u,v1,density\n";
    const auto& grid = *sol.u.grid();
    for (std::size_t i = 0; i < grid.size(); ++i)
        out << format_number(grid.node(i)) << ',' << format_number(sol.u[i]) << ',' << format_number(sol.v1[i])
            << ',' << format_number(sol.density[i]) << '\n';
    return out.str();
}

std::string trace_csv(const Solution& sol) {
    std::ostringstream out;
    out << "iter,residual,F,theta\n";
    for (const auto& row : sol.trace)
        out << row.iter << ',' << format_number(row.residual) << ',' << format_number(row.F) << ','
            << format_number(row.theta) << '\n';
    return out.str();
}

// JSON number, or null for values that were not computed.
ordered_json maybe(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

std::string diagnostics_json(const DiagnosticsReport& r) {
    ordered_json j;
    j["theta"] = maybe(r.theta);
    j["theta_target"] = maybe(r.theta_target);
    j["normality_residual"] = maybe(r.normality_residual);
    j["asymptotic_slope"] = maybe(r.asymptotic_slope);
    j["completeness_exponent"] = maybe(r.completeness_exponent);
    j["predicted_exponent"] = maybe(r.predicted_exponent);
    j["complete"] = r.complete;
    j["obstruction_flag"] = r.obstruction_flag;
    return j.dump(2) + "\n";
}

ordered_json solution_summary(const Solution& s) {
    ordered_json j;
    j["method"] = s.method;
    j["converged"] = s.converged;
    j["iterations"] = s.iterations;
    j["residual"] = s.residual;
    j["pde_residual"] = s.pde_residual;
    j["theta"] = s.theta;
    return j;
}

std::ostream& log_of(const CommandOptions& opts) { return opts.log ? *opts.log : std::cerr; }

RunConfig load_with_overrides(const fs::path& config, const CommandOptions& opts) {
    RunConfig cfg = load_config(config);
    if (opts.out) cfg.output = *opts.out;
    if (opts.workers) {
        if (*opts.workers == 0) throw ConfigError("--workers", "must be at least 1");
        cfg.workers = *opts.workers;
    }
    if (opts.seed) cfg.seed = *opts.seed;
    return cfg;
}

bool needs_kernel(const RunConfig& cfg) {
    return cfg.solver.method != SolverMethod::Minimize || cfg.diagnostics.normality;
}

KernelTable kernel_for(const RunConfig& cfg, const GridPtr& grid) {
    KernelBuildOptions kopt;
    kopt.workers = cfg.workers;
    return cached_kernel_table(grid, kernel_cache_dir(), kopt);
}

std::string run_dir_name(std::size_t k, double alpha) {
    std::ostringstream s;
    s << "run_" << (k < 10 ? "0" : "") << k << "_alpha_" << format_number(alpha);
    return s.str();
}

// Runs every alpha of cfg, `workers` at a time; outcomes keep input order.
std::vector<RunOutcome> run_all(const RunConfig& cfg, bool subdirs, std::ostream& log) {
    const GridPtr grid = cfg.grid.build(cfg.dimension);
    std::optional<KernelTable> table;
    if (needs_kernel(cfg)) table.emplace(kernel_for(cfg, grid));

    std::vector<RunOutcome> outcomes(cfg.alphas.size());
    std::vector<std::exception_ptr> failures(cfg.alphas.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&]() {
        for (std::size_t k = next++; k < cfg.alphas.size(); k = next++) {
            const double alpha = cfg.alphas[k];
            const fs::path dir = subdirs ? cfg.output / run_dir_name(k, alpha) : cfg.output;
            try {
                outcomes[k] = run_one(cfg, alpha, grid, table ? &*table : nullptr, dir);
            } catch (...) {
                failures[k] = std::current_exception();
                continue;
            }
            std::lock_guard lock(log_mutex);
            const auto& o = outcomes[k];
            log << "alpha=" << format_number(alpha) << ": ";
            if (!o.error.empty()) {
                log << "failed: " << o.error << '\n';
            } else {
                log << (o.converged ? "converged" : "NOT converged") << " after " << o.primary->iterations
                    << " iterations, residual " << format_number(o.primary->residual) << ", theta "
                    << format_number(o.primary->theta) << '\n';
                if (!o.methods_agree)
                    log << "  warning: fixed_point and minimize differ by " << format_number(o.cross_agreement)
                        << " (> 5 tol); both solutions were written\n";
                if (o.obstruction == Obstruction::Holds)
                    log << "  note: f satisfies r f'/f >= -n/2; no complete metric with finite total curvature "
                           "exists for this f\n";
            }
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(cfg.alphas.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);
    return outcomes;
}

int exit_code(const std::vector<RunOutcome>& outcomes) {
    for (const auto& o : outcomes)
        if (!o.converged) return kExitUnconverged;
    return kExitOk;
}

template <class Body>
int guarded(const CommandOptions& opts, Body body) {
    auto& log = log_of(opts);
    try {
        return body();
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const InvalidArgument& e) {
        log << "invalid input: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const CapacityExceeded& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfigError;
    }
}

}  // namespace

RunOutcome run_one(const RunConfig& cfg, double alpha, const GridPtr& grid, const KernelTable* table,
                   const fs::path& dir) {
    RunOutcome o;
    o.alpha = alpha;
    fs::create_directories(dir);
    const CurvatureSpec spec = make_curvature(cfg, alpha);
    const SolverContext ctx = make_context(spec, alpha, grid);
    SolverConfig sc = cfg.solver;
    sc.alpha = alpha;
    const SolverMethod m = sc.method;
    if (m != SolverMethod::Minimize && !table) throw InvalidArgument("fixed_point needs a kernel table");

    try {
        if (m == SolverMethod::FixedPoint) {
            o.primary = solve_fixed_point(ctx, sc, *table);
        } else {
            o.primary = solve_minimize(ctx, sc);
            if (m == SolverMethod::Both) {
                o.secondary = solve_fixed_point(ctx, sc, *table);
                o.cross_agreement = cross_agreement(o.primary->u, o.secondary->u, ctx.weight);
                o.methods_agree = o.cross_agreement < 5.0 * sc.tol;
            }
        }
    } catch (const SolverBreakdown& e) {
        o.error = e.what();
    } catch (const NotAdmissible& e) {
        o.error = e.what();
    }

    ordered_json run;
    run["alpha"] = alpha;
    run["dimension"] = cfg.dimension;
    run["curvature"] = spec.name;
    run["l"] = maybe(spec.l);
    run["method"] = to_string(m);
    if (!o.error.empty()) {
        run["converged"] = false;
        run["error"] = o.error;
        write_file(dir / "run.json", run.dump(2) + "\n");
        return o;
    }

    const Solution& sol = *o.primary;
    o.converged = sol.converged && (!o.secondary || o.secondary->converged);

    auto& rep = o.report;
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    rep.theta = sol.theta;
    rep.theta_target = sol.theta_target;
    rep.normality_residual = cfg.diagnostics.normality ? normality_residual(sol, *table) : nan;
    rep.asymptotic_slope = asymptotic_slope(sol);
    rep.predicted_exponent = predicted_exponent(sol.theta, cfg.dimension);
    rep.completeness_exponent = cfg.diagnostics.completeness ? fitted_completeness_exponent(sol.u) : nan;
    rep.complete = rep.predicted_exponent > 0.0;
    o.obstruction = obstruction_indicator(spec, grid);
    rep.obstruction_flag = cfg.diagnostics.obstruction && o.obstruction == Obstruction::Holds;
    o.growth_exponent = cfg.diagnostics.growth ? growth_check(sol.u) : nan;

    run["converged"] = o.converged;
    run["solution"] = solution_summary(sol);
    if (o.secondary) {
        run["fixed_point"] = solution_summary(*o.secondary);
        run["cross_agreement"] = o.cross_agreement;
        run["methods_agree"] = o.methods_agree;
    }
    run["growth_exponent"] = maybe(o.growth_exponent);
    run["obstruction"] = to_string(o.obstruction);

    write_file(dir / "solution.csv", solution_csv(sol));
    write_file(dir / "trace.csv", trace_csv(sol));
    if (o.secondary) {
        write_file(dir / "solution_fixed_point.csv", solution_csv(*o.secondary));
        write_file(dir / "trace_fixed_point.csv", trace_csv(*o.secondary));
    }
    write_file(dir / "diagnostics.json", diagnostics_json(rep));
    write_file(dir / "run.json", run.dump(2) + "\n");
    return o;
}

int cmd_solve(const fs::path& config, const CommandOptions& opts) {
    return guarded(opts, [&] {
        const RunConfig cfg = load_with_overrides(config, opts);
        if (cfg.alphas.empty()) throw ConfigError("alpha", "no alpha given");
        const auto outcomes = run_all(cfg, cfg.alphas.size() > 1, log_of(opts));
        return exit_code(outcomes);
    });
}

int cmd_sweep(const fs::path& config, const CommandOptions& opts) {
    return guarded(opts, [&] {
        const RunConfig cfg = load_with_overrides(config, opts);
        if (cfg.alphas.empty()) throw ConfigError("alpha", "sweep needs a non-empty alpha list");
        const auto outcomes = run_all(cfg, true, log_of(opts));
        std::ostringstream csv;
        csv << "alpha,theta,fitted_exponent,predicted_exponent,residual,converged,complete\n";
        for (const auto& o : outcomes) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            const bool ok = o.error.empty();
            csv << format_number(o.alpha) << ',' << format_number(ok ? o.report.theta : nan) << ','
                << format_number(ok ? o.report.completeness_exponent : nan) << ','
                << format_number(ok ? o.report.predicted_exponent : nan) << ','
                << format_number(ok ? o.primary->residual : nan) << ',' << (o.converged ? "true" : "false") << ','
                << (ok && o.report.complete ? "true" : "false") << '\n';
        }
        fs::create_directories(cfg.output);
        write_file(cfg.output / "sweep.csv", csv.str());
        return exit_code(outcomes);
    });
}

int cmd_verify(const fs::path& config, const CommandOptions& opts) {
    return guarded(opts, [&] {
        const RunConfig cfg = load_with_overrides(config, opts);
        fs::create_directories(cfg.output);
        const auto checks = verify_checks(cfg, cfg.output);
        write_file(cfg.output / "verify.json", verify_json(cfg, checks));
        bool all = true;
        auto& log = log_of(opts);
        for (const auto& c : checks) {
            log << (c.pass ? "PASS " : "FAIL ") << c.name << "  value=" << format_number(c.value)
                << " threshold=" << format_number(c.threshold) << '\n';
            all = all && c.pass;
        }
        return all ? kExitOk : kExitUnconverged;
    });
}

namespace {

double relative_error(double value, double exact) { return std::abs(value - exact) / std::abs(exact); }

VerifyCheck make_check(std::string name, double value, double threshold, std::string detail = {}) {
    VerifyCheck c;
    c.name = std::move(name);
    c.value = value;
    c.threshold = threshold;
    c.pass = std::isfinite(value) && value < threshold;
    c.detail = std::move(detail);
    return c;
}

// Angular average of log|x - y| in closed form.
double kernel_closed_form(int n, double s, double r) {
    const double hi = std::max(s, r), lo = std::min(s, r);
    const double t = lo / hi;
    return n == 2 ? std::log(hi) : std::log(hi) + 0.25 * t * t;
}

// u = -log(1 + r^2) solves (-Delta)^{n/2} u = c e^{nu} with c = 4 (n = 2), 96 (n = 4).
double bubble_residual(const GridPtr& grid) {
    const int n = grid->dimension();
    const double c = n == 2 ? 4.0 : 96.0;
    const Field u(grid, [](double r) { return -std::log1p(r * r); });
    const Field lhs = polyharmonic(u);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < interior_end(*grid); ++i) {
        const double rhs = c * std::exp(n * u[i]);
        err = std::max(err, std::abs(lhs[i] - rhs));
        scale = std::max(scale, std::abs(rhs));
    }
    return err / scale;
}

}  // namespace

std::vector<VerifyCheck> verify_checks(const RunConfig& cfg, const fs::path& out_dir) {
    const int n = cfg.dimension;
    const GridPtr grid = cfg.grid.build(n);
    const double pi = std::numbers::pi;
    std::vector<VerifyCheck> checks;
    Rng rng(cfg.seed);

    const double gauss = integrate(Field(grid, [](double r) { return std::exp(-r * r); }));
    checks.push_back(make_check("quadrature.gaussian", relative_error(gauss, std::pow(pi, 0.5 * n)), 1e-3));
    const double decay = integrate(Field(grid, [n](double r) { return std::pow(1.0 + r * r, -n); }));
    const double decay_exact = 0.5 * sphere_area(n - 1) * std::beta(0.5 * n, 0.5 * n);
    checks.push_back(make_check("quadrature.power_decay", relative_error(decay, decay_exact), 1e-3));

    double mass_err = 0.0, support = 0.0;
    for (int k = 0; k < 20; ++k) {
        const double alpha = rng.uniform(0.0, 2.0);
        const Background bg = build_background(alpha, grid);
        mass_err = std::max(mass_err, relative_error(integrate(bg.psi), sphere_q_mass(n) * alpha / 2));
        double peak = 0.0, outside = 0.0;
        for (std::size_t i = 0; i < grid->size(); ++i) {
            peak = std::max(peak, std::abs(bg.psi[i]));
            if (grid->node(i) > 0.6) outside = std::max(outside, std::abs(bg.psi[i]));
        }
        support = std::max(support, outside / peak);
    }
    checks.push_back(make_check("background.psi_mass", mass_err, 0.02, "20 seeded alpha in (0, 2)"));
    checks.push_back(make_check("background.psi_support", support, 1e-6, "sup over r > 0.6 relative to sup |psi|"));

    double eps_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 20; ++k) {
        const double l = rng.uniform(0.1, 2.0 * n);
        const auto [lo, hi] = admissible_alpha_range(l, n);
        const double alpha = lo + (hi - lo) * rng.uniform(0.01, 0.99);
        eps_min = std::min(eps_min, background_epsilon(alpha, l, n));
    }
    VerifyCheck eps = make_check("background.epsilon_positive", eps_min, 0.0, "min epsilon over 20 admissible pairs");
    eps.pass = eps_min > 0.0;
    checks.push_back(eps);

    KernelBuildOptions kopt;
    kopt.workers = cfg.workers;
    const KernelTable table = cached_kernel_table(grid, kernel_cache_dir(), kopt);
    const std::size_t N = grid->size();
    double closed = 0.0, asym = 0.0;
    if (n == 2) {
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j)
                closed = std::max(closed, std::abs(table(i, j) - kernel_closed_form(n, grid->node(i), grid->node(j))));
    } else {
        for (int k = 0; k < 20; ++k) {
            const std::size_t i = rng.below(N), j = rng.below(N);
            closed = std::max(closed, std::abs(table(i, j) - kernel_closed_form(n, grid->node(i), grid->node(j))));
        }
    }
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < i; ++j) asym = std::max(asym, std::abs(table(i, j) - table(j, i)));
    checks.push_back(make_check("kernel.closed_form", closed, 1e-5, n == 2 ? "full table" : "20 seeded pairs"));
    VerifyCheck sym = make_check("kernel.symmetry", asym, 0.0);
    sym.pass = asym == 0.0;
    checks.push_back(sym);

    const Field gaussian_density(grid, [](double r) { return std::exp(-r * r); });
    const double greens = greens_consistency(gaussian_density, table, [](const Field& u) { return polyharmonic(u); });
    checks.push_back(make_check("kernel.greens_consistency", greens, n == 2 ? 1e-2 : 5e-2));
    checks.push_back(make_check("operator.bubble", bubble_residual(grid), n == 2 ? 1e-3 : 1e-2,
                                "u = -log(1+r^2), relative sup on interior nodes"));

    fs::create_directories(out_dir);
    for (double e : cfg.ineq.epsilons) {
        TrialFamily family;
        family.kind = cfg.ineq.family;
        family.count = cfg.ineq.family_size;
        family.seed = cfg.seed;
        family.epsilon = e;
        const MtaReport rep = mta_scan(family, e, cfg.ineq.grid.build(n), cfg.ineq.margin);
        const std::string tag = "mta_eps_" + format_number(e);
        write_file(out_dir / (tag + ".csv"), trials_csv(rep));
        write_file(out_dir / (tag + ".json"), to_json(rep));
        const double identity = relative_error(mta_coefficient_via_bn(n, e), mta_coefficient(n, e));
        VerifyCheck c = make_check("ineq.mta.eps=" + format_number(e), static_cast<double>(rep.violations), 1.0,
                                   "c_fit " + format_number(rep.c_fit) + ", coefficient identity error " +
                                       format_number(identity));
        c.pass = rep.violations == 0 && identity <= 1e-12;
        checks.push_back(c);
    }

    const HardyScan hardy = hardy_scan(n, 50, cfg.seed);
    checks.push_back(make_check("ineq.hardy_stability", hardy.drift, 1e-2,
                                "max ratio over 50 bump superpositions " + format_number(hardy.max_ratio) +
                                    ", refined " + format_number(hardy.refined_max_ratio)));

    const bool holds = obstruction_indicator(CurvatureSpec::constant(), grid) == Obstruction::Holds;
    const bool fails = obstruction_indicator(CurvatureSpec::power(2.0 * n), grid) == Obstruction::Fails;
    VerifyCheck ob = make_check("diagnostics.obstruction", (holds ? 0.0 : 1.0) + (fails ? 0.0 : 1.0), 1.0,
                                "f = 1 holds, f = (1+r^2)^-n fails");
    checks.push_back(ob);
    return checks;
}

std::string verify_json(const RunConfig& cfg, const std::vector<VerifyCheck>& checks) {
    ordered_json j;
    j["dimension"] = cfg.dimension;
    j["nodes"] = cfg.grid.nodes;
    j["r_max"] = cfg.grid.r_max;
    j["seed"] = cfg.seed;
    ordered_json list = ordered_json::array();
    bool all = true;
    for (const auto& c : checks) {
        ordered_json e;
        e["name"] = c.name;
        e["pass"] = c.pass;
        e["value"] = maybe(c.value);
        e["threshold"] = c.threshold;
        if (!c.detail.empty()) e["detail"] = c.detail;
        list.push_back(std::move(e));
        all = all && c.pass;
    }
    j["checks"] = std::move(list);
    j["all_pass"] = all;
    return j.dump(2) + "\n";
}

}  // namespace qcurv
