#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <utility>

#include "qcurv/grid.hpp"

namespace qcurv {

// Logarithmic background u0 = -alpha B(r) log r and psi = (-Delta)^{n/2} u0.
struct Background {
    double alpha = 0.0;
    Field u0;
    Field psi;
    // B rises from 0 to 1 across [blend_inner, blend_outer].
    double blend_inner = 0.25;
    double blend_outer = 0.5;
};

// Degree-9 smoothstep in log r: 0 below 1/4, 1 above 1/2. It is C^4, so the
// fourth-order image psi stays continuous for n = 4 as well.
double background_blend(double r);

// Requires 0 < alpha < 2. psi is zeroed beyond r = 1 where u0 is exactly
// -alpha log r and the discrete operator returns rounding noise.
Background build_background(double alpha, const GridPtr& grid);

// Prescribed curvature f together with its decay exponent l, f = O(r^{-l}).
// An infinite l marks faster-than-polynomial decay.
struct CurvatureSpec {
    std::string name;
    double l = 2.0;
    std::function<double(double)> f;

    Field sample(const GridPtr& grid) const;

    // (1 + r^2)^{-l/2}.
    static CurvatureSpec power(double l);
    // exp(-r^2).
    static CurvatureSpec gaussian();
    // Positive near the origin, negative on an annulus around r = 2, decaying
    // like r^{-l}.
    static CurvatureSpec sign_changing(double l);
    // f = 1 (l = 0, outside every admissible window; used for the obstruction check).
    static CurvatureSpec constant(double value = 1.0);
    // The curvature whose solution is u* = -(alpha/2) log(1 + r^2):
    // 2 alpha (1+r^2)^{alpha-2} for n = 2, 48 alpha (1+r^2)^{2 alpha-4} for n = 4.
    static CurvatureSpec manufactured(int n, double alpha);
    // Two-column CSV (r, f); monotone cubic interpolation inside the sampled
    // range, f(r_0) below it and a power law fitted to the last two samples
    // beyond it.
    static CurvatureSpec from_csv(const std::filesystem::path& file, double l);
};

// u* = -(alpha/2) log(1 + r^2), the exact solution paired with manufactured().
double manufactured_solution(double alpha, double r);

// Checks the CurvatureSpec invariants on a grid: throws DegenerateCurvature
// if f <= 0 at every node, InvalidArgument if |f| r^l grows over the tail.
// Returns the tail constant max_{r >= 1} |f(r)| r^l (0 when l is infinite).
double check_curvature(const CurvatureSpec& spec, const GridPtr& grid);

// K = f e^{n u0}.
Field modified_curvature(const CurvatureSpec& spec, const Background& bg);

// (max{0, 2 - 2l/n}, 2). Requires l > 0.
std::pair<double, double> admissible_alpha_range(double l, int n);

// epsilon = alpha + l/n - 1; infinite when l is.
double background_epsilon(double alpha, double l, int n);

}  // namespace qcurv
