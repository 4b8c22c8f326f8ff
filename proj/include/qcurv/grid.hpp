#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace qcurv {

// Surface area |S^k| of the unit k-sphere in R^{k+1}.
double sphere_area(int k);

// Lebesgue volume of the unit ball in R^n.
double ball_volume(int n);

// Lambda_n = (n-1)! |S^n|, the total Q-curvature of the round n-sphere.
double sphere_q_mass(int n);

// Node grading. Radii are r = core_radius * sinh(xi) on a uniform, cell-centred
// xi lattice: spacing is nearly uniform for r << core_radius and geometric
// (constant ratio) for r >> core_radius.
struct GridStretch {
    double core_radius = 1.0;
};

// Radial discretization of R^n, n even. Node i is the centre of a spherical
// shell cell; weights()[i] is the n-volume attributed to it so that
// sum_i w_i phi(r_i) approximates the integral of phi(|x|) over R^n.
//
// The flux-form radial Laplacian shares the same data: face_coefficients()[k]
// couples nodes k and k+1 and is exact for the fundamental solution
// (log r for n = 2, r^{2-n} otherwise); the weights are the cell volumes that
// make the operator exact on a second test function (r^2 for n = 2, log r for
// n >= 4). See src/grid.cpp.
class RadialGrid {
public:
    RadialGrid(int n, std::size_t count, double r_max, GridStretch stretch);

    int dimension() const noexcept { return n_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    double r_max() const noexcept { return r_max_; }
    const GridStretch& stretch() const noexcept { return stretch_; }

    std::span<const double> nodes() const noexcept { return nodes_; }
    std::span<const double> weights() const noexcept { return weights_; }
    double node(std::size_t i) const { return nodes_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }

    // Flux coefficients between consecutive nodes (size N-1).
    std::span<const double> face_coefficients() const noexcept { return faces_; }
    // Coefficient of a ghost face between node N-1 and a virtual node one
    // lattice step beyond R_max, and the full (not half) cell volume of node N-1.
    double ghost_face_coefficient() const noexcept { return ghost_face_; }
    double ghost_node() const noexcept { return ghost_node_; }
    double full_last_volume() const noexcept { return full_last_volume_; }

    double lattice_step() const noexcept { return dxi_; }
    // dr/dxi at node i.
    double jacobian(std::size_t i) const;

    // Cumulative line integral int_0^{r_k} phi(t) dt along a ray, for every k.
    // phi is extended evenly through the origin.
    std::vector<double> ray_integral(std::span<const double> phi) const;

    // Index of the first node with r >= radius (size() if none).
    std::size_t lower_index(double radius) const;

    // 64-bit fingerprint of (n, N, R_max, nodes) for cache keys.
    std::uint64_t fingerprint() const;

private:
    int n_;
    double r_max_;
    GridStretch stretch_;
    double dxi_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<double> faces_;
    double ghost_face_ = 0.0;
    double ghost_node_ = 0.0;
    double full_last_volume_ = 0.0;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

// Builds a grid. Requires n in {2, 4}, count >= 16, r_max > 1.
GridPtr make_radial_grid(int n, std::size_t count, double r_max, GridStretch stretch = {});

// A radial function sampled at the nodes of one grid.
class Field {
public:
    Field() = default;
    explicit Field(GridPtr grid);
    Field(GridPtr grid, std::vector<double> values);
    Field(GridPtr grid, const std::function<double(double)>& fn);

    const GridPtr& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    bool all_finite() const;
    double max_abs() const;

    Field& operator+=(const Field& other);
    Field& operator-=(const Field& other);
    Field& operator+=(double c);
    Field& operator-=(double c);
    Field& operator*=(double c);

private:
    GridPtr grid_;
    std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double c, Field a);
Field operator+(Field a, double c);
Field operator-(Field a, double c);

// One past the last node whose difference stencils stay clear of the outer
// closure: residuals and comparisons "on interior nodes" use [0, N - n).
std::size_t interior_end(const RadialGrid& grid);

// Throws GridMismatch unless both fields share one grid object.
void require_same_grid(const Field& a, const Field& b);

// Sum_i w_i phi_i.
double integrate(const Field& phi);

// Polynomially decaying weight h(r) = (1 + r^2)^{-n/2 - n eps/2} of the
// measure dmu = h dx. Between C^{-1} r^{-n-n eps} and C r^{-n-n eps} for r >= 1
// with C = 2^{n/2 + n eps/2}.
struct WeightSpec {
    double epsilon = 0.5;

    double operator()(int n, double r) const;
    double bound_constant(int n) const;
    Field sample(const GridPtr& grid) const;
};

// int u h dx / int h dx.
double weighted_mean(const Field& u, const WeightSpec& weight);

}  // namespace qcurv
