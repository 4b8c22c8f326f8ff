#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "qcurv/grid.hpp"

namespace qcurv {

// Average of log|s e_1 - r w| over the unit sphere S^{n-1}, computed by
// quadrature in the polar angle with weight sin^{n-2}(theta).
double angular_log_average(int n, double s, double r);

// Dense symmetric table A[i][j] = A_n(r_i, r_j) on one grid.
class KernelTable {
public:
    KernelTable(GridPtr grid, std::vector<double> entries);

    const GridPtr& grid() const noexcept { return grid_; }
    int dimension() const noexcept { return grid_->dimension(); }
    std::size_t size() const noexcept { return grid_->size(); }
    // Lambda_n = (n-1)! |S^n|.
    double lambda() const noexcept { return lambda_; }

    double operator()(std::size_t i, std::size_t j) const { return a_[i * size() + j]; }
    const std::vector<double>& entries() const noexcept { return a_; }

private:
    GridPtr grid_;
    double lambda_;
    std::vector<double> a_;
};

struct KernelBuildOptions {
    // Dense tables above this size are refused (memory is 8 N^2 bytes).
    std::size_t max_nodes = 4096;
    unsigned workers = 1;
};

// Computes the upper triangle by quadrature and mirrors it, so the table is
// exactly symmetric. Throws CapacityExceeded above options.max_nodes.
KernelTable build_kernel_table(const GridPtr& grid, const KernelBuildOptions& options = {});

// Binary cache: a fixed header (magic, n, N, R_max, grid fingerprint,
// checksum of the payload) followed by the row-major table.
void save_kernel_table(const KernelTable& table, const std::filesystem::path& file);
// Returns nothing when the file is missing, belongs to another grid, or fails
// its checksum.
std::optional<KernelTable> load_kernel_table(const GridPtr& grid, const std::filesystem::path& file);

// Looks for a table of this grid in `dir` (typically $QCURV_KERNEL_CACHE);
// builds and stores it on a miss. An empty dir disables caching.
KernelTable cached_kernel_table(const GridPtr& grid, const std::filesystem::path& dir,
                                const KernelBuildOptions& options = {});

// L[rho](s) = (2/Lambda_n) int log(|y|/|x-y|) rho(y) dy at |x| = s.
Field log_potential(const Field& rho, const KernelTable& table);

using PolyharmonicOperator = std::function<Field(const Field&)>;

// Relative sup-norm residual of diff(L[rho]) - rho over interior nodes.
// Returns 0 for rho = 0.
double greens_consistency(const Field& rho, const KernelTable& table, const PolyharmonicOperator& diff);

}  // namespace qcurv
