#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "qcurv/commands.hpp"
#include "support.hpp"

using namespace qcurv;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string log;
};

template <class Cmd>
Run run(Cmd cmd, const qtest::TempDir& dir, const std::string& config) {
    qtest::write_text(dir / "config.json", config);
    std::ostringstream log;
    CommandOptions opts;
    opts.out = dir / "out";
    opts.log = &log;
    const int code = cmd(dir / "config.json", opts);
    return {code, log.str()};
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& file) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(qtest::read_text(file));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream fields(line);
        std::string cell;
        while (std::getline(fields, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("solve writes the run artifacts") {
    qtest::TempDir dir("solve");
    const Run r = run(cmd_solve, dir, R"({"curvature": {"preset": "power", "l": 2}, "alpha": 0.5})");
    REQUIRE(r.code == kExitOk);
    const auto out = dir / "out";
    const json diag = json::parse(qtest::read_text(out / "diagnostics.json"));
    CHECK(diag["complete"] == true);
    CHECK(diag["predicted_exponent"].get<double>() == doctest::Approx(0.5).epsilon(1e-9));

    const auto sol = read_csv(out / "solution.csv");
    CHECK(sol.front() == std::vector<std::string>{"r", "u", "v1", "density"});
    CHECK(sol.size() == 2001);
    CHECK(read_csv(out / "trace.csv").front() == std::vector<std::string>{"iter", "residual", "F", "theta"});
    CHECK(json::parse(qtest::read_text(out / "run.json"))["converged"] == true);
}

TEST_CASE("solve with alpha past the completeness threshold") {
    qtest::TempDir dir("solve");
    const Run r = run(cmd_solve, dir, R"({"alpha": 1.5})");
    REQUIRE(r.code == kExitOk);
    const json diag = json::parse(qtest::read_text(dir / "out" / "diagnostics.json"));
    CHECK(diag["predicted_exponent"].get<double>() == 0.0);
    CHECK(diag["complete"] == false);
}

TEST_CASE("solve with both methods") {
    qtest::TempDir dir("solve");
    const Run r = run(cmd_solve, dir, R"({"alpha": 0.5, "solver": {"method": "both"}})");
    REQUIRE(r.code == kExitOk);
    CHECK(std::filesystem::exists(dir / "out" / "solution_fixed_point.csv"));
    const json j = json::parse(qtest::read_text(dir / "out" / "run.json"));
    CHECK(j["methods_agree"] == true);
    CHECK(j["cross_agreement"].get<double>() < 5e-4);
}

TEST_CASE("exit codes") {
    qtest::TempDir dir("exit");
    Run r = run(cmd_solve, dir, R"({"alpha": 2.5})");
    CHECK(r.code == kExitConfigError);
    CHECK(r.log.find("(0, 2)") != std::string::npos);

    r = run(cmd_sweep, dir, R"({"alpha": []})");
    CHECK(r.code == kExitConfigError);

    r = run(cmd_solve, dir, "{\"alpha\": 0.5,,}");
    CHECK(r.code == kExitConfigError);
    CHECK(r.log.find("config.json:1:") != std::string::npos);

    r = run(cmd_solve, dir, R"({"alpha": 0.5, "solver": {"max_iter": 1}})");
    CHECK(r.code == kExitUnconverged);
}

TEST_CASE("sweep across the completeness threshold") {
    qtest::TempDir dir("sweep");
    const Run r = run(cmd_sweep, dir,
                      R"({"grid": {"r_max": 1e8}, "alpha": [0.3, 0.5, 0.8, 1.2, 1.8], "workers": 2,
                          "diagnostics": {"normality": false}})");
    REQUIRE(r.code == kExitOk);
    const auto rows = read_csv(dir / "out" / "sweep.csv");
    REQUIRE(rows.size() == 6);
    CHECK(rows[0] == std::vector<std::string>{"alpha", "theta", "fitted_exponent", "predicted_exponent", "residual",
                                              "converged", "complete"});
    const double expected[] = {0.7, 0.5, 0.2, 0.0, 0.0};
    const char* alphas[] = {"0.3", "0.5", "0.8", "1.2", "1.8"};
    for (int k = 0; k < 5; ++k) {
        const auto& row = rows[static_cast<std::size_t>(k + 1)];
        CHECK(row[0] == alphas[k]);
        CHECK(std::stod(row[3]) == doctest::Approx(expected[k]).scale(1.0).epsilon(1e-9));
        if (k < 3) CHECK(std::abs(std::stod(row[2]) - expected[k]) < 0.05);
        CHECK(row[5] == "true");
        CHECK(row[6] == (k < 3 ? "true" : "false"));
        CHECK(std::filesystem::exists(dir / "out" / ("run_0" + std::to_string(k) + "_alpha_" + alphas[k]) /
                                      "solution.csv"));
    }
}

TEST_CASE("verify") {
    qtest::TempDir dir("verify");
    SUBCASE("default configuration passes and is reproducible") {
        Run r = run(cmd_verify, dir, "{}");
        CHECK(r.code == kExitOk);
        const auto first = qtest::read_text(dir / "out" / "verify.json");
        const json j = json::parse(first);
        CHECK(j["all_pass"] == true);
        std::set<std::string> names;
        for (const auto& c : j["checks"]) names.insert(c["name"].get<std::string>());
        for (const char* want : {"background.psi_mass", "kernel.closed_form", "ineq.mta.eps=0.5"})
            CHECK(names.count(want) == 1);

        const auto csv = qtest::read_text(dir / "out" / "mta_eps_0.5.csv");
        std::filesystem::remove_all(dir / "out");
        r = run(cmd_verify, dir, "{}");
        CHECK(qtest::read_text(dir / "out" / "verify.json") == first);
        CHECK(qtest::read_text(dir / "out" / "mta_eps_0.5.csv") == csv);
    }
    SUBCASE("a coarse grid fails the quadrature checks") {
        const Run r = run(cmd_verify, dir, R"({"grid": {"nodes": 32}, "ineq": {"family_size": 40}})");
        CHECK(r.code != kExitOk);
        const json j = json::parse(qtest::read_text(dir / "out" / "verify.json"));
        CHECK(j["all_pass"] == false);
        for (const auto& c : j["checks"])
            if (c["name"] == "quadrature.gaussian") CHECK(c["pass"] == false);
    }
}

TEST_CASE("kernel cache location") {
    const auto dir = kernel_cache_dir();
    // The test harness points the cache at the build tree.
    CHECK_FALSE(dir.empty());
}
