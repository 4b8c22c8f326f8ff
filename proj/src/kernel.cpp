#include "qcurv/kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "qcurv/error.hpp"

namespace qcurv {

namespace {

// Normalisation int_0^pi sin^{n-2}(theta) d theta.
double polar_mass(int n) {
    return std::sqrt(std::numbers::pi) * std::tgamma(0.5 * (n - 1)) / std::tgamma(0.5 * n);
}

}  // namespace

double angular_log_average(int n, double s, double r) {
    if (!(s > 0.0) || !(r > 0.0)) throw InvalidArgument("angular_log_average needs positive radii");
    if (n < 2) throw InvalidArgument("angular_log_average needs n >= 2");
    const double big = std::max(s, r);
    const double t = std::min(s, r) / big;

    // |s e1 - r w|^2 / big^2 = (1 - t)^2 + 4 t sin^2(theta/2); written this way
    // it has no cancellation near theta = 0 when t is close to 1.
    auto integrand = [n, t](double theta) {
        const double h = std::sin(0.5 * theta);
        const double q = (1.0 - t) * (1.0 - t) + 4.0 * t * h * h;
        if (!(q > 0.0)) return 0.0;  // theta underflowed to 0 at t = 1
        const double w = n == 2 ? 1.0 : std::pow(std::sin(theta), n - 2);
        return std::log(q) * w;
    };
    static thread_local boost::math::quadrature::tanh_sinh<double> rule;
    const double integral = rule.integrate(integrand, 0.0, std::numbers::pi, 1e-12);
    return std::log(big) + 0.5 * integral / polar_mass(n);
}

KernelTable::KernelTable(GridPtr grid, std::vector<double> entries)
    : grid_(std::move(grid)), a_(std::move(entries)) {
    if (!grid_) throw InvalidArgument("kernel table requires a grid");
    if (a_.size() != grid_->size() * grid_->size()) throw GridMismatch("kernel table size does not match grid");
    lambda_ = sphere_q_mass(grid_->dimension());
}

KernelTable build_kernel_table(const GridPtr& grid, const KernelBuildOptions& options) {
    if (!grid) throw InvalidArgument("kernel table requires a grid");
    const std::size_t N = grid->size();
    if (N > options.max_nodes) {
        throw CapacityExceeded("dense kernel table with N=" + std::to_string(N) + " exceeds the cap of " +
                               std::to_string(options.max_nodes) + " nodes (" +
                               std::to_string(8.0 * N * N / 1048576.0) + " MiB)");
    }
    const int n = grid->dimension();
    std::vector<double> a(N * N);
    const auto r = grid->nodes();

    // Rows are dealt round-robin so the triangular workload balances.
    auto fill = [&](unsigned worker, unsigned stride) {
        for (std::size_t i = worker; i < N; i += stride) {
            for (std::size_t j = i; j < N; ++j) a[i * N + j] = angular_log_average(n, r[i], r[j]);
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(N)));
    if (workers == 1) {
        fill(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(fill, w, workers);
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < i; ++j) a[i * N + j] = a[j * N + i];
    return KernelTable(grid, std::move(a));
}

namespace {

constexpr std::array<char, 8> kMagic = {'Q', 'C', 'K', 'T', 'B', 'L', '0', '1'};

struct CacheHeader {
    std::array<char, 8> magic;
    std::int64_t n;
    std::uint64_t count;
    double r_max;
    std::uint64_t fingerprint;
    std::uint64_t checksum;
};

std::uint64_t payload_checksum(const std::vector<double>& a) {
    std::uint64_t h = 1469598103934665603ull;
    const auto* p = reinterpret_cast<const unsigned char*>(a.data());
    for (std::size_t i = 0; i < a.size() * sizeof(double); ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

void save_kernel_table(const KernelTable& table, const std::filesystem::path& file) {
    const auto& grid = *table.grid();
    CacheHeader head{kMagic, grid.dimension(), grid.size(), grid.r_max(), grid.fingerprint(),
                     payload_checksum(table.entries())};
    // Write to a temporary name first so a concurrent reader never sees a
    // half-written table.
    auto tmp = file;
    tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write kernel cache " + tmp.string());
        out.write(reinterpret_cast<const char*>(&head), sizeof head);
        out.write(reinterpret_cast<const char*>(table.entries().data()),
                  static_cast<std::streamsize>(table.entries().size() * sizeof(double)));
        if (!out) throw Error("cannot write kernel cache " + tmp.string());
    }
    std::filesystem::rename(tmp, file);
}

std::optional<KernelTable> load_kernel_table(const GridPtr& grid, const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return std::nullopt;
    CacheHeader head{};
    in.read(reinterpret_cast<char*>(&head), sizeof head);
    if (!in || head.magic != kMagic) return std::nullopt;
    if (head.n != grid->dimension() || head.count != grid->size() || head.r_max != grid->r_max() ||
        head.fingerprint != grid->fingerprint())
        return std::nullopt;
    std::vector<double> a(grid->size() * grid->size());
    in.read(reinterpret_cast<char*>(a.data()), static_cast<std::streamsize>(a.size() * sizeof(double)));
    if (!in || payload_checksum(a) != head.checksum) return std::nullopt;
    return KernelTable(grid, std::move(a));
}

KernelTable cached_kernel_table(const GridPtr& grid, const std::filesystem::path& dir,
                                const KernelBuildOptions& options) {
    if (dir.empty()) return build_kernel_table(grid, options);
    std::ostringstream name;
    name << "kernel_n" << grid->dimension() << "_N" << grid->size() << '_' << std::hex << grid->fingerprint()
         << ".bin";
    const auto file = dir / name.str();
    if (auto hit = load_kernel_table(grid, file)) return std::move(*hit);
    KernelTable table = build_kernel_table(grid, options);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!ec) save_kernel_table(table, file);
    return table;
}

Field log_potential(const Field& rho, const KernelTable& table) {
    if (rho.grid() != table.grid()) throw GridMismatch("density and kernel table live on different grids");
    const auto& grid = *table.grid();
    const std::size_t N = grid.size();
    std::vector<double> m(N);
    for (std::size_t j = 0; j < N; ++j) m[j] = grid.weight(j) * rho[j];
    double log_moment = 0.0;
    for (std::size_t j = 0; j < N; ++j) log_moment += m[j] * std::log(grid.node(j));

    const double scale = 2.0 / table.lambda();
    Field out(rho.grid());
    const auto& a = table.entries();
    for (std::size_t i = 0; i < N; ++i) {
        const double* row = a.data() + i * N;
        double acc = 0.0;
        for (std::size_t j = 0; j < N; ++j) acc += row[j] * m[j];
        out[i] = scale * (log_moment - acc);
    }
    return out;
}

double greens_consistency(const Field& rho, const KernelTable& table, const PolyharmonicOperator& diff) {
    const Field image = diff(log_potential(rho, table));
    const std::size_t end = interior_end(*table.grid());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < end; ++i) {
        num = std::max(num, std::abs(image[i] - rho[i]));
        den = std::max(den, std::abs(rho[i]));
    }
    return den == 0.0 ? 0.0 : num / den;
}

}  // namespace qcurv
