#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qcurv/error.hpp"
#include "qcurv/ineq.hpp"
#include "qcurv/radial_operator.hpp"
#include "support.hpp"

using namespace qcurv;
using std::numbers::pi;

namespace {

// sup |polyharmonic(u) - c e^{nu}| / sup |c e^{nu}| on interior nodes for the
// bubble u = log(2/(1+r^2)); c = 1 for n = 2 and c = 6 for n = 4.
double bubble_error(int n, std::size_t N) {
    const auto g = make_radial_grid(n, N, 1e3);
    const Field u(g, [](double r) { return std::log(2.0 / (1.0 + r * r)); });
    const Field p = polyharmonic(u, n);
    const double c = n == 2 ? 1.0 : 6.0;
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < interior_end(*g); ++i) {
        const double rhs = c * std::exp(n * u[i]);
        err = std::max(err, std::abs(p[i] - rhs));
        scale = std::max(scale, rhs);
    }
    return err / scale;
}

}  // namespace

TEST_CASE("constants are annihilated") {
    for (int n : {2, 4}) {
        const auto g = make_radial_grid(n, 600, 1e3);
        const Field c(g, [](double) { return 2.75; });
        CHECK(polyharmonic(c).max_abs() < 1e-9);
        CHECK(std::abs(energy(c)) < 1e-18);
    }
}

TEST_CASE("bubble identities") {
    CHECK(bubble_error(2, 2000) < 1e-3);
    CHECK(bubble_error(4, 2000) < 1e-2);
}

TEST_CASE("bilaplacian converges at second order") {
    const double coarse = bubble_error(4, 500), fine = bubble_error(4, 1000);
    CHECK(coarse / fine > 3.0);
}

TEST_CASE("laplacian is exact on the probes") {
    const auto g2 = make_radial_grid(2, 300, 100.0);
    const Field q(g2, [](double r) { return r * r; });
    const Field lq = laplacian(q);
    for (std::size_t i = 0; i + 1 < g2->size(); ++i) CHECK(lq[i] == doctest::Approx(4.0).epsilon(1e-9));

    const auto g4 = make_radial_grid(4, 300, 100.0);
    const Field lg(g4, [](double r) { return std::log(r); });
    const Field ll = laplacian(lg);
    for (std::size_t i = g4->lower_index(0.2); i + 1 < g4->size(); ++i) {
        const double r = g4->node(i);
        CHECK(ll[i] == doctest::Approx(2.0 / (r * r)).epsilon(1e-8));
    }
}

TEST_CASE("energy matrix matches the quadratic form") {
    for (int n : {2, 4}) {
        const auto g = make_radial_grid(n, 200, 100.0);
        const Field u(g, [](double r) { return std::exp(-r) * std::cos(r); });
        const auto S = energy_matrix(*g);
        Eigen::VectorXd x(static_cast<Eigen::Index>(g->size()));
        for (std::size_t i = 0; i < g->size(); ++i) x[static_cast<Eigen::Index>(i)] = u[i];
        const Eigen::VectorXd Sx = S * x;
        CHECK(x.dot(Sx) == doctest::Approx(energy(u)).epsilon(1e-10));
        const auto mv = energy_matvec(u);
        for (std::size_t i = 0; i < g->size(); ++i)
            CHECK(mv[i] == doctest::Approx(Sx[static_cast<Eigen::Index>(i)]).epsilon(1e-9).scale(1e-9));
    }
}

TEST_CASE("half-power energy of a gaussian") {
    // int |grad e^{-r^2}|^2 over R^2 = pi; int (Delta e^{-r^2})^2 over R^4 = 6 pi^2.
    const auto g2 = make_radial_grid(2, 2000, 100.0);
    CHECK(qtest::relative(halfpower_energy(Field(g2, [](double r) { return std::exp(-r * r); }), 2), pi) < 1e-3);
    const auto g4 = make_radial_grid(4, 2000, 100.0);
    CHECK(qtest::relative(halfpower_energy(Field(g4, [](double r) { return std::exp(-r * r); }), 4), 6 * pi * pi) <
          1e-3);
    CHECK(halfpower_energy(Field(g4, [](double) { return 1.0; }), 4) == doctest::Approx(0.0).scale(1e-12));
}

TEST_CASE("polyharmonic checks its order") {
    const auto g = make_radial_grid(2, 100, 10.0);
    CHECK_THROWS_AS(polyharmonic(Field(g), 4), InvalidArgument);
}
