#include "qcurv/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qcurv/error.hpp"

namespace qcurv {

namespace {

using nlohmann::json;

// Walks one JSON object, remembering the dotted path for error messages and
// rejecting keys nobody asked for.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(display(), "expected an object");
    }

    void finish() const {
        for (const auto& item : node_.items())
            if (!seen_.count(item.key())) throw ConfigError(child(item.key()), "unknown key");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return node_.contains(key);
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return node_.at(key);
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_number()) throw ConfigError(child(key), "expected a number");
        return v.get<double>();
    }

    std::size_t count(const std::string& key, std::size_t fallback) {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw ConfigError(child(key), "expected a non-negative integer");
        return v.get<std::size_t>();
    }

    bool flag(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_boolean()) throw ConfigError(child(key), "expected true or false");
        return v.get<bool>();
    }

    std::string text(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_string()) throw ConfigError(child(key), "expected a string");
        return v.get<std::string>();
    }

private:
    std::string display() const { return path_.empty() ? "<root>" : path_; }

    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

GridConfig read_grid(Section& parent, const std::string& key, GridConfig g) {
    if (!parent.has(key)) return g;
    Section s(parent.raw(key), parent.child(key));
    g.nodes = s.count("nodes", g.nodes);
    g.r_max = s.number("r_max", g.r_max);
    g.core_radius = s.number("core_radius", g.core_radius);
    s.finish();
    if (g.nodes < 16) throw ConfigError(s.child("nodes"), "needs at least 16 nodes");
    if (!(g.r_max > 1.0)) throw ConfigError(s.child("r_max"), "must exceed 1");
    if (!(g.core_radius > 0.0)) throw ConfigError(s.child("core_radius"), "must be positive");
    return g;
}

std::vector<double> number_list(const json& v, const std::string& path) {
    std::vector<double> out;
    if (v.is_number()) {
        out.push_back(v.get<double>());
        return out;
    }
    if (!v.is_array()) throw ConfigError(path, "expected a number or a list of numbers");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ConfigError(path + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

std::string locate(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return std::to_string(line) + ":" + std::to_string(col);
}

const std::set<std::string> kPresets = {"power", "gaussian", "sign_changing", "manufactured", "constant"};

}  // namespace

CurvatureSpec make_curvature(const RunConfig& cfg, double alpha) {
    const auto& c = cfg.curvature;
    if (!c.csv.empty()) return CurvatureSpec::from_csv(c.csv, c.l);
    if (c.preset == "power") return CurvatureSpec::power(c.l);
    if (c.preset == "gaussian") return CurvatureSpec::gaussian();
    if (c.preset == "sign_changing") return CurvatureSpec::sign_changing(c.l);
    if (c.preset == "manufactured") return CurvatureSpec::manufactured(cfg.dimension, alpha);
    if (c.preset == "constant") return CurvatureSpec::constant();
    throw ConfigError("curvature.preset", "unknown preset '" + c.preset + "'");
}

RunConfig parse_config(const std::string& text, const std::string& origin, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        std::string what = e.what();
        // Drop nlohmann's "[json.exception.parse_error.101] " prefix.
        if (auto pos = what.find("] "); pos != std::string::npos) what = what.substr(pos + 2);
        throw ConfigError(origin + ":" + locate(text, e.byte == 0 ? 0 : e.byte - 1), what);
    }

    RunConfig cfg;
    Section top(root, "");
    const double dim = top.number("dimension", 2);
    if (dim != 2 && dim != 4) throw ConfigError("dimension", "must be 2 or 4");
    cfg.dimension = static_cast<int>(dim);
    cfg.grid = read_grid(top, "grid", cfg.grid);

    if (top.has("curvature")) {
        Section s(top.raw("curvature"), "curvature");
        const bool has_preset = s.has("preset");
        const bool has_csv = s.has("csv");
        if (has_preset && has_csv) throw ConfigError("curvature", "give either 'preset' or 'csv', not both");
        cfg.curvature.preset = s.text("preset", has_csv ? "" : cfg.curvature.preset);
        if (has_csv) {
            std::filesystem::path p = s.text("csv", "");
            if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
            if (!std::filesystem::exists(p)) throw ConfigError("curvature.csv", "file not found: " + p.string());
            cfg.curvature.csv = p;
        }
        cfg.curvature.l = s.number("l", cfg.curvature.l);
        s.finish();
        if (!has_csv && !kPresets.count(cfg.curvature.preset))
            throw ConfigError("curvature.preset", "unknown preset '" + cfg.curvature.preset +
                                                      "' (power, gaussian, sign_changing, manufactured, constant)");
        if (!(cfg.curvature.l > 0.0) && cfg.curvature.preset != "constant")
            throw ConfigError("curvature.l", "must be positive");
    }

    if (top.has("alpha")) {
        const json& a = top.raw("alpha");
        cfg.alphas = number_list(a, "alpha");
        cfg.alpha_list = a.is_array();
    }

    if (top.has("solver")) {
        Section s(top.raw("solver"), "solver");
        auto& sc = cfg.solver;
        const std::string method = s.text("method", to_string(sc.method));
        try {
            sc.method = parse_solver_method(method);
        } catch (const InvalidArgument& e) {
            throw ConfigError("solver.method", e.what());
        }
        sc.damping = s.number("damping", sc.damping);
        sc.damping_floor = s.number("damping_floor", sc.damping_floor);
        sc.tol = s.number("tol", sc.tol);
        sc.max_iter = s.count("max_iter", sc.max_iter);
        if (s.has("line_search")) {
            Section ls(s.raw("line_search"), "solver.line_search");
            sc.line_search.armijo = ls.number("armijo", sc.line_search.armijo);
            sc.line_search.shrink = ls.number("shrink", sc.line_search.shrink);
            sc.line_search.max_backtracks =
                static_cast<int>(ls.count("max_backtracks", static_cast<std::size_t>(sc.line_search.max_backtracks)));
            ls.finish();
        }
        s.finish();
        if (!(sc.damping > 0.0 && sc.damping <= 1.0)) throw ConfigError("solver.damping", "must lie in (0, 1]");
        if (!(sc.damping_floor > 0.0 && sc.damping_floor <= sc.damping))
            throw ConfigError("solver.damping_floor", "must lie in (0, damping]");
        if (!(sc.tol > 0.0)) throw ConfigError("solver.tol", "must be positive");
        if (sc.max_iter == 0) throw ConfigError("solver.max_iter", "must be positive");
        try {
            validate(sc);
        } catch (const InvalidArgument& e) {
            throw ConfigError("solver.line_search", e.what());
        }
    }

    if (top.has("diagnostics")) {
        Section s(top.raw("diagnostics"), "diagnostics");
        auto& d = cfg.diagnostics;
        d.normality = s.flag("normality", d.normality);
        d.completeness = s.flag("completeness", d.completeness);
        d.growth = s.flag("growth", d.growth);
        d.obstruction = s.flag("obstruction", d.obstruction);
        s.finish();
    }

    if (top.has("ineq")) {
        Section s(top.raw("ineq"), "ineq");
        auto& q = cfg.ineq;
        if (s.has("epsilons")) q.epsilons = number_list(s.raw("epsilons"), "ineq.epsilons");
        for (std::size_t i = 0; i < q.epsilons.size(); ++i)
            if (!(q.epsilons[i] > 0.0))
                throw ConfigError("ineq.epsilons[" + std::to_string(i) + "]", "must be positive");
        try {
            q.family = parse_trial_kind(s.text("family", to_string(q.family)));
        } catch (const InvalidArgument& e) {
            throw ConfigError("ineq.family", e.what());
        }
        q.family_size = s.count("family_size", q.family_size);
        if (q.family_size < 2) throw ConfigError("ineq.family_size", "needs at least 2 trials");
        q.margin = s.number("margin", q.margin);
        q.grid = read_grid(s, "grid", q.grid);
        s.finish();
    }

    cfg.output = top.text("output", cfg.output.string());
    const std::size_t workers = top.count("workers", cfg.workers);
    if (workers == 0) throw ConfigError("workers", "must be at least 1");
    cfg.workers = static_cast<unsigned>(workers);
    if (top.has("seed")) {
        const json& v = top.raw("seed");
        if (!v.is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
        cfg.seed = v.get<std::uint64_t>();
    }
    top.finish();

    for (std::size_t i = 0; i < cfg.alphas.size(); ++i) {
        const double a = cfg.alphas[i];
        const std::string where = cfg.alpha_list ? "alpha[" + std::to_string(i) + "]" : "alpha";
        if (!(a > 0.0 && a < 2.0)) {
            std::ostringstream msg;
            msg << "alpha=" << a << " is outside the admissible interval (0, 2)";
            throw ConfigError(where, msg.str());
        }
        const CurvatureSpec spec = make_curvature(cfg, a);
        if (!(spec.l > 0.0)) throw ConfigError("curvature", "curvature '" + spec.name + "' has no admissible alpha (l = 0)");
        const auto [lo, hi] = admissible_alpha_range(spec.l, cfg.dimension);
        if (!(a > lo && a < hi)) {
            std::ostringstream msg;
            msg << "alpha=" << a << " is outside the admissible interval (" << lo << ", " << hi << ") for l=" << spec.l
                << ", n=" << cfg.dimension;
            throw ConfigError(where, msg.str());
        }
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError(file.string(), "cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), file.string(), file.parent_path());
}

}  // namespace qcurv
