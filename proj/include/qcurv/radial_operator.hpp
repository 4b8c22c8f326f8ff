#pragma once

#include <vector>

#include <Eigen/SparseCore>

#include "qcurv/grid.hpp"

namespace qcurv {

// How the flux through the outermost face is closed.
enum class OuterClosure {
    // Ghost node one lattice step beyond R_max, filled by cubic extrapolation.
    Extrapolate,
    // Zero flux through R_max (the natural condition of the Dirichlet energy).
    Neumann,
};

// Flux-form radial Laplacian u'' + (n-1)/r u'. The origin is closed by even
// reflection (zero flux through r = 0).
Field laplacian(const Field& u, OuterClosure closure = OuterClosure::Extrapolate);

// Discrete (-Delta)^{n/2} u, n taken from the grid.
Field polyharmonic(const Field& u);
Field polyharmonic(const Field& u, int n);

// Discrete energy int ((-Delta)^{n/4} u)^2 dx: int |grad u|^2 for n = 2,
// int (Delta u)^2 for n = 4 (the outermost half cell is left out so that v
// is unconstrained at R_max). Vanishes exactly on constants.
double energy(const Field& u);

// Symmetric positive semidefinite matrix S with energy(u) = u^T S u.
Eigen::SparseMatrix<double> energy_matrix(const RadialGrid& grid);

// S u without forming S.
std::vector<double> energy_matvec(const Field& u);

}  // namespace qcurv
