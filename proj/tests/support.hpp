#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unistd.h>

#include "qcurv/commands.hpp"
#include "qcurv/kernel.hpp"

namespace qtest {

// Kernel tables are expensive; every suite shares one per grid object, backed
// by the on-disk cache configured for the test run.
inline const qcurv::KernelTable& table_for(const qcurv::GridPtr& grid) {
    static std::map<const qcurv::RadialGrid*, std::pair<qcurv::GridPtr, qcurv::KernelTable>> tables;
    auto it = tables.find(grid.get());
    if (it == tables.end())
        it = tables.emplace(grid.get(), std::pair{grid, qcurv::cached_kernel_table(grid, qcurv::kernel_cache_dir())})
                 .first;
    return it->second.second;
}

inline double relative(double value, double exact) { return std::abs(value - exact) / std::abs(exact); }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("qcurv_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& file, const std::string& text) {
    std::ofstream(file) << text;
}

inline std::string read_text(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace qtest
