#include "qcurv/radial_operator.hpp"

#include <string>

#include "qcurv/error.hpp"

namespace qcurv {

namespace {

// (D u)_i = F_{i+1/2} - F_{i-1/2} with zero flux through the origin and
// through R_max.
std::vector<double> divergence_neumann(const RadialGrid& grid, std::span<const double> u) {
    const std::size_t N = grid.size();
    const auto c = grid.face_coefficients();
    std::vector<double> out(N, 0.0);
    double inner = 0.0;
    for (std::size_t i = 0; i + 1 < N; ++i) {
        const double outer = c[i] * (u[i + 1] - u[i]);
        out[i] = outer - inner;
        inner = outer;
    }
    out[N - 1] = -inner;
    return out;
}

// The first Laplacian's truncation error is O(h^2) but not smooth across the
// first couple of cells, and the second application amplifies that kink into
// an O(1) error at nodes 0 and 1. The result is even in r, so those two
// values are replaced by the quadratic in r^2 through nodes 2..4.
void repair_origin(Field& p) {
    const auto& grid = *p.grid();
    double x[3], y[3];
    for (int k = 0; k < 3; ++k) {
        const double r = grid.node(static_cast<std::size_t>(k + 2));
        x[k] = r * r;
        y[k] = p[static_cast<std::size_t>(k + 2)];
    }
    for (std::size_t i = 0; i < 2; ++i) {
        const double t = grid.node(i) * grid.node(i);
        double acc = 0.0;
        for (int a = 0; a < 3; ++a) {
            double l = 1.0;
            for (int b = 0; b < 3; ++b)
                if (b != a) l *= (t - x[b]) / (x[a] - x[b]);
            acc += l * y[a];
        }
        p[i] = acc;
    }
}

}  // namespace

Field laplacian(const Field& u, OuterClosure closure) {
    const auto& grid = *u.grid();
    const std::size_t N = grid.size();
    auto div = divergence_neumann(grid, u.values());
    const auto w = grid.weights();
    Field out(u.grid());
    for (std::size_t i = 0; i + 1 < N; ++i) out[i] = div[i] / w[i];
    if (closure == OuterClosure::Neumann) {
        out[N - 1] = div[N - 1] / w[N - 1];
    } else {
        const double ghost = 4.0 * u[N - 1] - 6.0 * u[N - 2] + 4.0 * u[N - 3] - u[N - 4];
        const double outer = grid.ghost_face_coefficient() * (ghost - u[N - 1]);
        out[N - 1] = (outer + div[N - 1]) / grid.full_last_volume();
    }
    return out;
}

Field polyharmonic(const Field& u) { return polyharmonic(u, u.grid()->dimension()); }

Field polyharmonic(const Field& u, int n) {
    if (!u.grid()) throw GridMismatch("field has no grid");
    if (n != u.grid()->dimension())
        throw InvalidArgument("polyharmonic order n=" + std::to_string(n) + " does not match grid dimension");
    if (u.size() < 16) throw InvalidArgument("grid too coarse for the polyharmonic stencil");
    Field out = u;
    for (int k = 0; k < n / 2; ++k) out = laplacian(out);
    if ((n / 2) % 2 == 1) out *= -1.0;
    if (n >= 4) repair_origin(out);
    return out;
}

double energy(const Field& u) {
    const auto& grid = *u.grid();
    const std::size_t N = grid.size();
    const auto c = grid.face_coefficients();
    double acc = 0.0;
    if (grid.dimension() == 2) {
        for (std::size_t k = 0; k + 1 < N; ++k) {
            const double d = u[k + 1] - u[k];
            acc += c[k] * d * d;
        }
        return acc;
    }
    const auto div = divergence_neumann(grid, u.values());
    for (std::size_t i = 0; i + 1 < N; ++i) acc += div[i] * div[i] / grid.weight(i);
    return acc;
}

std::vector<double> energy_matvec(const Field& u) {
    const auto& grid = *u.grid();
    const std::size_t N = grid.size();
    auto div = divergence_neumann(grid, u.values());
    if (grid.dimension() == 2) {
        for (double& x : div) x = -x;
        return div;
    }
    for (std::size_t i = 0; i + 1 < N; ++i) div[i] /= grid.weight(i);
    div[N - 1] = 0.0;
    return divergence_neumann(grid, div);
}

Eigen::SparseMatrix<double> energy_matrix(const RadialGrid& grid) {
    using Triplet = Eigen::Triplet<double>;
    const auto N = static_cast<Eigen::Index>(grid.size());
    const auto c = grid.face_coefficients();

    // Graph Laplacian G with u^T G u = sum_k c_k (u_{k+1} - u_k)^2, i.e. G = -D.
    std::vector<Triplet> g;
    for (Eigen::Index k = 0; k + 1 < N; ++k) {
        const double ck = c[static_cast<std::size_t>(k)];
        g.emplace_back(k, k, ck);
        g.emplace_back(k + 1, k + 1, ck);
        g.emplace_back(k, k + 1, -ck);
        g.emplace_back(k + 1, k, -ck);
    }
    Eigen::SparseMatrix<double> G(N, N);
    G.setFromTriplets(g.begin(), g.end());
    if (grid.dimension() == 2) return G;

    Eigen::SparseMatrix<double> Winv(N, N);
    std::vector<Triplet> d;
    for (Eigen::Index i = 0; i + 1 < N; ++i) d.emplace_back(i, i, 1.0 / grid.weight(static_cast<std::size_t>(i)));
    Winv.setFromTriplets(d.begin(), d.end());
    Eigen::SparseMatrix<double> S = G * Winv * G;
    S.makeCompressed();
    return S;
}

}  // namespace qcurv
