#include "qcurv/ineq.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "qcurv/error.hpp"
#include "qcurv/format.hpp"
#include "qcurv/radial_operator.hpp"
#include "qcurv/rng.hpp"

namespace qcurv {

double halfpower_energy(const Field& u, int n) {
    if (!u.grid()) throw GridMismatch("field has no grid");
    if (n != u.grid()->dimension()) throw InvalidArgument("energy order does not match grid dimension");
    return energy(u);
}

std::string to_string(TrialKind k) {
    switch (k) {
        case TrialKind::Zero: return "zero";
        case TrialKind::CappedLog: return "capped_log";
        case TrialKind::MoserProfile: return "moser_profile";
        case TrialKind::ScaledBump: return "scaled_bump";
        case TrialKind::BesselSum: return "bessel_sum";
        case TrialKind::Mixed: return "mixed";
    }
    return "unknown";
}

TrialKind parse_trial_kind(const std::string& name) {
    for (TrialKind k : {TrialKind::Zero, TrialKind::CappedLog, TrialKind::MoserProfile, TrialKind::ScaledBump,
                        TrialKind::BesselSum, TrialKind::Mixed})
        if (to_string(k) == name) return k;
    throw InvalidArgument("unknown trial family '" + name + "'");
}

namespace {

double log_uniform(Rng& rng, double lo, double hi) { return std::exp(rng.uniform(std::log(lo), std::log(hi))); }

Field make_trial(TrialKind kind, Rng& rng, const GridPtr& grid, double eps) {
    const double crit = 2.0 * std::min(eps, 1.0);
    const double r_lo = grid->node(0), r_hi = grid->r_max();
    switch (kind) {
        case TrialKind::Zero:
            return Field(grid);
        case TrialKind::CappedLog: {
            const double t = log_uniform(rng, 0.05, std::max(1.5, std::min(8.0, std::log(r_hi / 100.0))));
            const double s = crit * rng.uniform(0.5, 1.25);
            const double c = std::exp(-2.0 * t);
            return Field(grid, [=](double r) { return 0.5 * s * std::log((1.0 + r * r) / (1.0 + c * r * r)); });
        }
        case TrialKind::MoserProfile: {
            const double t = log_uniform(rng, 0.05, std::max(1.5, std::min(8.0, std::log(1.0 / (20.0 * r_lo)))));
            const double s = crit * rng.uniform(0.5, 1.25);
            const double c = std::exp(-2.0 * t);
            return Field(grid, [=](double r) { return 0.5 * s * std::log((1.0 + r * r) / (r * r + c)); });
        }
        case TrialKind::ScaledBump: {
            const double lambda = log_uniform(rng, 1e-2, 1e2);
            const double s = rng.uniform(-3.0, 3.0);
            return Field(grid, [=](double r) {
                const double x = r / lambda;
                return x < 1.0 ? s * std::pow(1.0 - x * x, 4) : 0.0;
            });
        }
        case TrialKind::BesselSum: {
            std::array<double, 5> a{};
            for (double& x : a) x = crit * rng.uniform(-1.0, 1.0);
            const double sigma = rng.uniform(1.0, 5.0);
            const double k0 = rng.uniform(0.5, 2.0);
            return Field(grid, [=](double r) {
                double acc = 0.0;
                for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * std::cyl_bessel_j(0.0, k0 * (k + 1) * r);
                return acc * std::exp(-(r / sigma) * (r / sigma));
            });
        }
        case TrialKind::Mixed:
            break;
    }
    throw InvalidArgument("mixed family has no single generator");
}

}  // namespace

std::vector<Field> generate_family(const TrialFamily& family, const GridPtr& grid) {
    if (!(family.epsilon > 0.0)) throw InvalidArgument("trial family needs epsilon > 0");
    Rng rng(family.seed);
    std::vector<Field> out;
    out.reserve(family.count);
    constexpr TrialKind cycle[] = {TrialKind::CappedLog, TrialKind::MoserProfile, TrialKind::ScaledBump,
                                   TrialKind::BesselSum};
    for (std::size_t i = 0; i < family.count; ++i) {
        const TrialKind kind = family.kind == TrialKind::Mixed ? cycle[i % 4] : family.kind;
        out.push_back(make_trial(kind, rng, grid, family.epsilon));
    }
    return out;
}

Field mta_weight(const GridPtr& grid, double epsilon) {
    const WeightSpec w{epsilon};
    Field h = w.sample(grid);
    h *= w.bound_constant(grid->dimension());
    return h;
}

double mta_coefficient(int n, double epsilon) {
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
    return n / (2.0 * sphere_q_mass(n) * std::min(epsilon, 1.0));
}

double mta_coefficient_via_bn(int n, double epsilon) {
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
    const double bn = n * std::pow(2.0 * std::numbers::pi, n) / sphere_area(n - 1);
    return static_cast<double>(n) * n / (4.0 * bn * std::min(epsilon, 1.0));
}

MtaTrial mta_trial(const Field& u, double epsilon) {
    const auto& grid = u.grid();
    const int n = grid->dimension();
    const Field h = mta_weight(grid, epsilon);
    const double mean = weighted_mean(u, WeightSpec{epsilon});
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < u.size(); ++i) top = std::max(top, n * std::abs(u[i] - mean));
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        acc += grid->weight(i) * h[i] * std::exp(n * std::abs(u[i] - mean) - top);
    MtaTrial t;
    t.energy = energy(u);
    t.lhs = top + std::log(acc);
    t.gap = t.lhs - mta_coefficient(n, epsilon) * t.energy;
    t.rejected = !std::isfinite(t.gap);
    return t;
}

MtaReport mta_scan(const TrialFamily& family, double epsilon, const GridPtr& grid, double margin) {
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
    TrialFamily fam = family;
    fam.epsilon = epsilon;
    const std::vector<Field> members = generate_family(fam, grid);

    MtaReport rep;
    rep.epsilon = epsilon;
    rep.coefficient = mta_coefficient(grid->dimension(), epsilon);
    rep.margin = margin;
    for (std::size_t i = 0; i < members.size(); ++i) {
        MtaTrial t = mta_trial(members[i], epsilon);
        t.id = i;
        if (t.rejected) ++rep.rejected;
        rep.trials.push_back(t);
    }

    std::vector<std::size_t> order(members.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(family.seed ^ 0x9e3779b97f4a7c15ull);
    rng.shuffle(order);
    const std::size_t half = order.size() / 2;
    rep.calibration.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
    rep.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());
    std::sort(rep.calibration.begin(), rep.calibration.end());
    std::sort(rep.validation.begin(), rep.validation.end());

    rep.c_fit = -std::numeric_limits<double>::infinity();
    for (std::size_t i : rep.calibration)
        if (!rep.trials[i].rejected) rep.c_fit = std::max(rep.c_fit, rep.trials[i].gap);
    for (std::size_t i : rep.validation)
        if (!rep.trials[i].rejected && rep.trials[i].gap > rep.c_fit + margin) ++rep.violations;
    return rep;
}

GridPtr mta_grid(int n, std::size_t nodes, double r_max) {
    return make_radial_grid(n, nodes, r_max, GridStretch{0.01});
}

std::string to_json(const MtaReport& r) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i : r.validation)
        if (!r.trials[i].rejected) worst = std::max(worst, r.trials[i].gap);
    nlohmann::ordered_json j;
    j["epsilon"] = r.epsilon;
    j["coefficient"] = r.coefficient;
    j["margin"] = r.margin;
    j["c_fit"] = r.c_fit;
    j["max_validation_gap"] = worst;
    j["violations"] = r.violations;
    j["rejected"] = r.rejected;
    j["calibration_size"] = r.calibration.size();
    j["validation_size"] = r.validation.size();
    return j.dump(2) + "\n";
}

std::string trials_csv(const MtaReport& r) {
    std::ostringstream out;
    out << "trial,energy,lhs,gap\n";
    for (const auto& t : r.trials)
        out << t.id << ',' << format_number(t.energy) << ',' << format_number(t.lhs) << ',' << format_number(t.gap)
            << '\n';
    return out.str();
}

namespace {

// Derivatives of the quadratic through (x_k, y_k), k = 0..2, at x.
double lagrange_d1(const double* x, const double* y, double at) {
    return y[0] * (2 * at - x[1] - x[2]) / ((x[0] - x[1]) * (x[0] - x[2])) +
           y[1] * (2 * at - x[0] - x[2]) / ((x[1] - x[0]) * (x[1] - x[2])) +
           y[2] * (2 * at - x[0] - x[1]) / ((x[2] - x[0]) * (x[2] - x[1]));
}

double lagrange_d2(const double* x, const double* y) {
    return 2.0 * (y[0] / ((x[0] - x[1]) * (x[0] - x[2])) + y[1] / ((x[1] - x[0]) * (x[1] - x[2])) +
                  y[2] / ((x[2] - x[0]) * (x[2] - x[1])));
}

// Stencil around node i; node 0 borrows its even mirror image at -r_0.
void stencil(const Field& u, std::size_t i, double* x, double* y) {
    const auto r = u.grid()->nodes();
    const std::size_t N = r.size();
    if (i == 0) {
        x[0] = -r[0], x[1] = r[0], x[2] = r[1];
        y[0] = u[0], y[1] = u[0], y[2] = u[1];
        return;
    }
    const std::size_t a = i + 1 == N ? N - 3 : i - 1;
    for (int k = 0; k < 3; ++k) {
        x[k] = r[a + static_cast<std::size_t>(k)];
        y[k] = u[a + static_cast<std::size_t>(k)];
    }
}

}  // namespace

std::vector<double> radial_derivative(const Field& u) {
    std::vector<double> d(u.size());
    double x[3], y[3];
    for (std::size_t i = 0; i < u.size(); ++i) {
        stencil(u, i, x, y);
        d[i] = lagrange_d1(x, y, u.grid()->node(i));
    }
    return d;
}

std::vector<double> radial_second_derivative(const Field& u) {
    std::vector<double> d(u.size());
    double x[3], y[3];
    for (std::size_t i = 0; i < u.size(); ++i) {
        stencil(u, i, x, y);
        d[i] = lagrange_d2(x, y);
    }
    return d;
}

double hardy_ratio(const Field& u, int k, double p) {
    const auto& grid = *u.grid();
    const int n = grid.dimension();
    if (k != 1 && k != 2) throw InvalidArgument("hardy_ratio supports k = 1 and k = 2");
    if (!(p >= 1.0)) throw InvalidArgument("hardy_ratio needs p >= 1");
    if (!(k * p < n)) throw InvalidArgument("hardy_ratio needs k p < n");
    const double scale = u.max_abs();
    if (scale == 0.0) return 0.0;
    for (std::size_t i = grid.lower_index(1.0 + 1e-12); i < u.size(); ++i)
        if (std::abs(u[i]) > 1e-12 * scale) throw InvalidArgument("hardy_ratio needs u = 0 outside the unit ball");

    const std::vector<double> d1 = radial_derivative(u);
    std::vector<double> dk = d1;
    if (k == 2) {
        const std::vector<double> d2 = radial_second_derivative(u);
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double t = d1[i] / grid.node(i);
            dk[i] = std::sqrt(d2[i] * d2[i] + (n - 1) * t * t);
        }
    }
    // Piecewise-constant |u|^p on the xi-cells [a sinh(i dxi), a sinh((i+1) dxi)]
    // against the exact integral of the radial power; this keeps the
    // r^{n-1-kp} singularity of the numerator at the origin under control.
    const double a = grid.stretch().core_radius;
    const double area = sphere_area(n - 1);
    auto power_integral = [](double q, double lo, double hi) {
        return std::abs(q) < 1e-14 ? std::log(hi / lo) : (std::pow(hi, q) - std::pow(lo, q)) / q;
    };
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double lo = a * std::sinh(static_cast<double>(i) * grid.lattice_step());
        if (lo >= 1.0) break;
        const double hi = std::min(1.0, a * std::sinh(static_cast<double>(i + 1) * grid.lattice_step()));
        num += area * power_integral(n - k * p, lo, hi) * std::pow(std::abs(u[i]), p);
        den += area * power_integral(n, lo, hi) * std::pow(std::abs(dk[i]), p);
    }
    return std::pow(num / den, 1.0 / p);
}

HardyScan hardy_scan(int n, std::size_t count, std::uint64_t seed, std::size_t nodes) {
    struct Bump {
        double a, lambda;
    };
    std::vector<std::vector<Bump>> trials(count);
    Rng rng(seed);
    for (auto& t : trials) {
        const std::size_t terms = 1 + rng.below(3);
        for (std::size_t k = 0; k < terms; ++k) t.push_back({rng.uniform(-1.0, 1.0), rng.uniform(0.2, 1.0)});
    }
    const double p = 0.5 * n;
    auto scan = [&](std::size_t N) {
        const GridPtr g = make_radial_grid(n, N, 4.0, GridStretch{0.05});
        double worst = 0.0;
        for (const auto& t : trials) {
            const Field u(g, [&](double r) {
                double acc = 0.0;
                for (const auto& b : t)
                    if (r < b.lambda) acc += b.a * std::pow(1.0 - (r / b.lambda) * (r / b.lambda), 4);
                return acc;
            });
            worst = std::max(worst, hardy_ratio(u, 1, p));
        }
        return worst;
    };
    HardyScan out;
    out.max_ratio = scan(nodes);
    out.refined_max_ratio = scan(2 * nodes);
    out.drift = std::abs(out.max_ratio - out.refined_max_ratio) / out.refined_max_ratio;
    return out;
}

}  // namespace qcurv
