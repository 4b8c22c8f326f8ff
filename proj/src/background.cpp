#include "qcurv/background.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

// Boost 1.74's pchip calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include "qcurv/error.hpp"
#include "qcurv/radial_operator.hpp"

namespace qcurv {

double background_blend(double r) {
    constexpr double lo = 0.25, hi = 0.5;
    if (r <= lo) return 0.0;
    if (r >= hi) return 1.0;
    const double x = std::log(r / lo) / std::log(hi / lo);
    const double x2 = x * x;
    return x2 * x2 * x * (126.0 + x * (-420.0 + x * (540.0 + x * (-315.0 + 70.0 * x))));
}

Background build_background(double alpha, const GridPtr& grid) {
    if (!(alpha > 0.0 && alpha < 2.0))
        throw InvalidArgument("alpha must lie in (0, 2), got " + std::to_string(alpha));
    Background bg;
    bg.alpha = alpha;
    bg.u0 = Field(grid, [alpha](double r) { return -alpha * background_blend(r) * std::log(r); });
    bg.psi = polyharmonic(bg.u0);
    for (std::size_t i = grid->lower_index(1.0); i < grid->size(); ++i) bg.psi[i] = 0.0;
    return bg;
}

Field CurvatureSpec::sample(const GridPtr& grid) const {
    if (!f) throw InvalidArgument("curvature '" + name + "' has no profile");
    return Field(grid, f);
}

CurvatureSpec CurvatureSpec::power(double l) {
    if (!(l > 0.0)) throw InvalidArgument("power curvature needs l > 0");
    return {"power", l, [l](double r) { return std::pow(1.0 + r * r, -0.5 * l); }};
}

CurvatureSpec CurvatureSpec::gaussian() {
    return {"gaussian", std::numeric_limits<double>::infinity(), [](double r) { return std::exp(-r * r); }};
}

CurvatureSpec CurvatureSpec::sign_changing(double l) {
    if (!(l > 0.0)) throw InvalidArgument("sign_changing curvature needs l > 0");
    return {"sign_changing", l, [l](double r) {
                const double bump = std::exp(-(r - 2.0) * (r - 2.0));
                return (1.0 - 3.0 * bump) * std::pow(1.0 + r * r, -0.5 * l);
            }};
}

CurvatureSpec CurvatureSpec::constant(double value) {
    return {"constant", 0.0, [value](double) { return value; }};
}

CurvatureSpec CurvatureSpec::manufactured(int n, double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw InvalidArgument("manufactured curvature needs alpha in (0, 2)");
    if (n == 2)
        return {"manufactured", 4.0 - 2.0 * alpha,
                [alpha](double r) { return 2.0 * alpha * std::pow(1.0 + r * r, alpha - 2.0); }};
    if (n == 4)
        return {"manufactured", 8.0 - 4.0 * alpha,
                [alpha](double r) { return 48.0 * alpha * std::pow(1.0 + r * r, 2.0 * alpha - 4.0); }};
    throw InvalidArgument("manufactured curvature needs n in {2, 4}");
}

double manufactured_solution(double alpha, double r) { return -0.5 * alpha * std::log1p(r * r); }

CurvatureSpec CurvatureSpec::from_csv(const std::filesystem::path& file, double l) {
    std::ifstream in(file);
    if (!in) throw ConfigError(file.string(), "cannot open curvature CSV");
    std::vector<double> xs, ys;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        double r = 0.0, v = 0.0;
        if (!(fields >> r >> v)) {
            if (xs.empty() && lineno == 1) continue;  // header row
            throw ConfigError(file.string() + ":" + std::to_string(lineno), "expected two numbers 'r, f'");
        }
        if (!xs.empty() && !(r > xs.back()))
            throw ConfigError(file.string() + ":" + std::to_string(lineno), "radii must be strictly increasing");
        if (!(r >= 0.0) || !std::isfinite(v))
            throw ConfigError(file.string() + ":" + std::to_string(lineno), "bad sample");
        xs.push_back(r);
        ys.push_back(v);
    }
    if (xs.size() < 4) throw ConfigError(file.string(), "curvature CSV needs at least 4 samples");

    const double r0 = xs.front(), f0 = ys.front();
    const double r1 = xs[xs.size() - 2], r2 = xs.back();
    const double f1 = ys[ys.size() - 2], f2 = ys.back();
    // Power-law continuation f2 (r/r2)^p, or zero if the tail changes sign.
    double p = 0.0;
    if (f1 * f2 > 0.0 && r1 > 0.0) p = std::log(f2 / f1) / std::log(r2 / r1);
    const bool power_tail = f1 * f2 > 0.0 && r1 > 0.0;

    auto interp = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(std::move(xs),
                                                                                            std::move(ys));
    return {"csv:" + file.string(), l, [interp, r0, f0, r2, f2, p, power_tail](double r) {
                if (r <= r0) return f0;
                if (r >= r2) return power_tail ? f2 * std::pow(r / r2, p) : 0.0;
                return (*interp)(r);
            }};
}

double check_curvature(const CurvatureSpec& spec, const GridPtr& grid) {
    const Field f = spec.sample(grid);
    if (!f.all_finite()) throw InvalidArgument("curvature '" + spec.name + "' is not finite on the grid");
    double fmax = -std::numeric_limits<double>::infinity();
    for (double x : f.values()) fmax = std::max(fmax, x);
    if (!(fmax > 0.0)) throw DegenerateCurvature("curvature '" + spec.name + "' is non-positive everywhere");
    if (!std::isfinite(spec.l)) return 0.0;

    // sup |f| r^l over [1, R/10] versus over the outer decade; the bound
    // |f| <= C r^{-l} fails visibly when the outer supremum keeps growing.
    const auto r = grid->nodes();
    double inner = 0.0, outer = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] < 1.0) continue;
        const double c = std::abs(f[i]) * std::pow(r[i], spec.l);
        double& slot = r[i] < 0.1 * grid->r_max() ? inner : outer;
        slot = std::max(slot, c);
    }
    if (outer > 1.1 * std::max(inner, std::abs(f[grid->lower_index(1.0)])))
        throw InvalidArgument("curvature '" + spec.name + "' decays slower than r^{-l} with l=" +
                              std::to_string(spec.l));
    return std::max(inner, outer);
}

Field modified_curvature(const CurvatureSpec& spec, const Background& bg) {
    const auto& grid = bg.u0.grid();
    const int n = grid->dimension();
    Field k = spec.sample(grid);
    for (std::size_t i = 0; i < k.size(); ++i) k[i] *= std::exp(n * bg.u0[i]);
    return k;
}

std::pair<double, double> admissible_alpha_range(double l, int n) {
    if (!(l > 0.0)) throw InvalidArgument("decay exponent l must be positive");
    if (n <= 0) throw InvalidArgument("dimension must be positive");
    return {std::max(0.0, 2.0 - 2.0 * l / n), 2.0};
}

double background_epsilon(double alpha, double l, int n) { return alpha + l / n - 1.0; }

}  // namespace qcurv
