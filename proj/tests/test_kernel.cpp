#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qcurv/error.hpp"
#include "qcurv/kernel.hpp"
#include "qcurv/radial_operator.hpp"
#include "qcurv/rng.hpp"
#include "support.hpp"

using namespace qcurv;
using std::numbers::pi;

namespace {

// (2/pi) int_0^pi log|1 - t e^{i theta}| sin^2(theta) d theta by composite
// Simpson; the kernel in four dimensions is log max(s, r) plus this term.
double four_dim_correction(double t) {
    const int m = 20000;
    const double h = pi / m;
    double acc = 0.0;
    for (int k = 0; k <= m; ++k) {
        const double th = k * h;
        const double q = 1.0 + t * t - 2.0 * t * std::cos(th);
        const double v = q > 0.0 ? 0.5 * std::log(q) * std::sin(th) * std::sin(th) : 0.0;
        acc += (k == 0 || k == m ? 1.0 : (k % 2 ? 4.0 : 2.0)) * v;
    }
    return 2.0 / pi * acc * h / 3.0;
}

double oscillation(const Field& u, std::size_t end) {
    double lo = u[0], hi = u[0];
    for (std::size_t i = 0; i < end; ++i) {
        lo = std::min(lo, u[i]);
        hi = std::max(hi, u[i]);
    }
    return hi - lo;
}

}  // namespace

TEST_CASE("angular log average") {
    CHECK(angular_log_average(2, 2.0, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(std::abs(angular_log_average(2, 1.0, 1.0)) < 1e-8);
    CHECK(std::abs(angular_log_average(4, 1.0, 0.5) - 0.0625) < 1e-6);
    CHECK(angular_log_average(4, 0.5, 1.0) == angular_log_average(4, 1.0, 0.5));

    // Above log max in four dimensions, approaching it as min/max -> 0.
    double previous = 1.0;
    for (double t : {0.9, 0.5, 0.1, 0.01}) {
        const double gap = angular_log_average(4, 3.0, 3.0 * t) - std::log(3.0);
        CHECK(gap > 0.0);
        CHECK(gap < previous);
        previous = gap;
    }
    CHECK(previous < 1e-4);
}

TEST_CASE("planar table equals log max") {
    const auto g = make_radial_grid(2, 1000, 1e4);
    const auto& A = qtest::table_for(g);
    double err = 0.0, asym = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i)
        for (std::size_t j = 0; j < g->size(); ++j) {
            err = std::max(err, std::abs(A(i, j) - std::log(std::max(g->node(i), g->node(j)))));
            asym = std::max(asym, std::abs(A(i, j) - A(j, i)));
        }
    CHECK(err < 1e-5);
    CHECK(asym == 0.0);
}

TEST_CASE("four-dimensional table against direct quadrature") {
    const auto g = make_radial_grid(4, 1000, 1e4);
    const auto& A = qtest::table_for(g);
    Rng rng(2024);
    for (int k = 0; k < 20; ++k) {
        const std::size_t i = rng.below(g->size()), j = rng.below(g->size());
        const double s = g->node(i), r = g->node(j);
        const double oracle = std::log(std::max(s, r)) + four_dim_correction(std::min(s, r) / std::max(s, r));
        CHECK(std::abs(A(i, j) - oracle) < 1e-6);
        CHECK(A(i, j) == A(j, i));
    }
}

TEST_CASE("log potential") {
    const auto g = make_radial_grid(2, 2000, 1e4);
    const auto& A = qtest::table_for(g);

    SUBCASE("zero density") { CHECK(log_potential(Field(g), A).max_abs() == 0.0); }

    SUBCASE("planar bubble is normal") {
        const Field rho(g, [](double r) { return 4.0 / std::pow(1.0 + r * r, 2); });
        Field w = log_potential(rho, A);
        w += Field(g, [](double r) { return std::log1p(r * r) - std::log(2.0); });
        CHECK(oscillation(w, interior_end(*g)) < 1e-3);
    }

    SUBCASE("far-field slope is -2m/Lambda") {
        const Field rho(g, [](double r) { return r < 1.0 ? std::pow(1.0 - r * r, 2) : 0.0; });
        const double m = integrate(rho);
        const Field w = log_potential(rho, A);
        const std::size_t a = g->lower_index(1e3), b = g->size() - 1;
        const double slope = (w[b] - w[a]) / (std::log(g->node(b)) - std::log(g->node(a)));
        CHECK(qtest::relative(slope, -2.0 * m / A.lambda()) < 0.02);
    }
}

TEST_CASE("green consistency") {
    const auto diff = [](const Field& u) { return polyharmonic(u); };
    const auto gauss = [](double r) { return std::exp(-r * r); };

    SUBCASE("zero density") {
        const auto g = make_radial_grid(2, 1000, 1e4);
        CHECK(greens_consistency(Field(g), qtest::table_for(g), diff) == 0.0);
    }
    SUBCASE("planar") {
        // The planar table inverts the discrete Laplacian exactly, so the
        // residual sits at the rounding floor and cannot shrink further.
        const auto coarse = make_radial_grid(2, 1000, 1e4), fine = make_radial_grid(2, 2000, 1e4);
        const double rc = greens_consistency(Field(coarse, gauss), qtest::table_for(coarse), diff);
        const double rf = greens_consistency(Field(fine, gauss), qtest::table_for(fine), diff);
        CHECK(rf < 1e-2);
        CHECK((rf < rc || rf < 1e-8));
    }
    SUBCASE("four dimensions") {
        const auto coarse = make_radial_grid(4, 1000, 1e4), fine = make_radial_grid(4, 2000, 1e4);
        const double rc = greens_consistency(Field(coarse, gauss), qtest::table_for(coarse), diff);
        const double rf = greens_consistency(Field(fine, gauss), qtest::table_for(fine), diff);
        CHECK(rf < 5e-2);
        CHECK(rf < rc);
    }
}

TEST_CASE("table cache round trip") {
    qtest::TempDir dir("kernel");
    const auto g = make_radial_grid(2, 64, 100.0);
    const KernelTable built = build_kernel_table(g);
    const auto file = dir / "t.bin";
    save_kernel_table(built, file);

    const auto loaded = load_kernel_table(g, file);
    REQUIRE(loaded.has_value());
    CHECK(loaded->entries() == built.entries());

    CHECK_FALSE(load_kernel_table(make_radial_grid(2, 65, 100.0), file).has_value());
    CHECK_FALSE(load_kernel_table(g, dir / "missing.bin").has_value());

    // Flip one payload byte: the checksum must reject the file.
    {
        std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(-3, std::ios::end);
        f.put('\x5a');
    }
    CHECK_FALSE(load_kernel_table(g, file).has_value());

    const KernelTable again = cached_kernel_table(g, dir.path());
    CHECK(again.entries() == built.entries());
    CHECK(cached_kernel_table(g, dir.path()).entries() == built.entries());
}

TEST_CASE("threaded build is identical") {
    const auto g = make_radial_grid(4, 80, 100.0);
    KernelBuildOptions one, three;
    three.workers = 3;
    CHECK(build_kernel_table(g, one).entries() == build_kernel_table(g, three).entries());
}

TEST_CASE("table size cap") {
    const auto g = make_radial_grid(2, 100, 100.0);
    KernelBuildOptions opts;
    opts.max_nodes = 50;
    CHECK_THROWS_AS(build_kernel_table(g, opts), CapacityExceeded);
}

TEST_CASE("tables are tied to their grid") {
    const auto g = make_radial_grid(2, 64, 100.0);
    const auto other = make_radial_grid(2, 64, 100.0);
    const KernelTable t = build_kernel_table(g);
    CHECK_THROWS_AS(log_potential(Field(other), t), GridMismatch);
}
