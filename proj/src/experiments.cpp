#include "funnelsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace funnelsim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// JSON reading with path-qualified diagnostics

class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError("config: " + path_ + ": " + msg); }

    const json& raw() const { return j_; }
    const std::string& path() const { return path_; }

    bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

    Node at(const char* key) const {
        if (!j_.is_object()) fail("expected an object");
        if (!j_.contains(key)) fail(std::string("missing field '") + key + "'");
        return {j_.at(key), path_ + "." + key};
    }

    Node at(std::size_t i) const { return {j_.at(i), path_ + "[" + std::to_string(i) + "]"}; }

    std::size_t array_size() const {
        if (!j_.is_array()) fail("expected an array");
        return j_.size();
    }

    double number() const {
        if (!j_.is_number()) fail("expected a number");
        const double v = j_.get<double>();
        if (!std::isfinite(v)) fail("expected a finite number");
        return v;
    }

    int integer() const {
        if (!j_.is_number_integer()) fail("expected an integer");
        return j_.get<int>();
    }

    std::uint64_t unsigned_integer() const {
        if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<long long>() >= 0)) {
            fail("expected a non-negative integer");
        }
        return j_.get<std::uint64_t>();
    }

    std::string string() const {
        if (!j_.is_string()) fail("expected a string");
        return j_.get<std::string>();
    }

    double number_or(const char* key, double fallback) const { return has(key) ? at(key).number() : fallback; }
    int integer_or(const char* key, int fallback) const { return has(key) ? at(key).integer() : fallback; }

    std::vector<double> numbers() const {
        std::vector<double> out;
        for (std::size_t i = 0; i < array_size(); ++i) out.push_back(at(i).number());
        return out;
    }

private:
    const json& j_;
    std::string path_;
};

FeedbackSign read_eta(const Node& n) {
    const int v = n.integer();
    if (v != 1 && v != -1) n.fail("eta must be +1 or -1");
    return v == 1 ? FeedbackSign::Negative : FeedbackSign::Positive;
}

DriftFunction read_drift(const Node& n) {
    const auto kind = n.at("kind").string();
    if (kind == "zero") return DriftFunction::zero();
    if (kind == "affine") return DriftFunction::affine(n.at("a").number(), n.at("b").number());
    if (kind == "quadratic") return DriftFunction::quadratic(n.at("a").number());
    if (kind == "table") {
        DriftTable t;
        t.rho = n.at("rho").numbers();
        t.xi = n.at("xi").numbers();
        const auto rows = n.at("values");
        if (rows.array_size() != t.rho.size()) rows.fail("expected one row per rho node");
        for (std::size_t i = 0; i < rows.array_size(); ++i) {
            const auto row = rows.at(i).numbers();
            if (row.size() != t.xi.size()) rows.at(i).fail("expected one value per xi node");
            t.values.insert(t.values.end(), row.begin(), row.end());
        }
        try {
            return DriftFunction::table(std::move(t));
        } catch (const std::invalid_argument& e) {
            n.fail(e.what());
        }
    }
    n.at("kind").fail("unknown drift kind '" + kind + "' (zero, affine, quadratic, table)");
}

json write_drift(const DriftFunction& f) {
    switch (f.kind()) {
        case DriftFunction::Kind::Zero:
            return {{"kind", "zero"}};
        case DriftFunction::Kind::Affine:
            return {{"kind", "affine"}, {"a", f.a()}, {"b", f.b()}};
        case DriftFunction::Kind::Quadratic:
            return {{"kind", "quadratic"}, {"a", f.a()}};
        case DriftFunction::Kind::Table: {
            const auto& t = f.tabulated();
            json rows = json::array();
            for (std::size_t i = 0; i < t.rho.size(); ++i) {
                rows.push_back(std::vector<double>(t.values.begin() + i * t.xi.size(),
                                                   t.values.begin() + (i + 1) * t.xi.size()));
            }
            return {{"kind", "table"}, {"rho", t.rho}, {"xi", t.xi}, {"values", rows}};
        }
    }
    return {};
}

PerturbationSpec read_perturbation(const Node& n) {
    PerturbationSpec p;
    const auto kind = n.at("kind").string();
    if (kind == "constant") {
        p.kind = PerturbationSignal::Kind::Constant;
        p.value = n.at("value").number();
    } else if (kind == "sinusoid") {
        p.kind = PerturbationSignal::Kind::Sinusoid;
        p.value = n.at("amplitude").number();
        p.omega = n.at("omega").number();
        p.phase = n.number_or("phase", 0.0);
    } else if (kind == "spline") {
        p.kind = PerturbationSignal::Kind::NoiseSpline;
        p.bound = n.at("bound").number();
        p.knot_spacing = n.number_or("knot_spacing", 1.0);
        if (p.bound < 0.0) n.at("bound").fail("must be >= 0");
        if (!(p.knot_spacing > 0.0)) n.at("knot_spacing").fail("must be > 0");
        if (n.has("seed")) p.seed = n.at("seed").unsigned_integer();
    } else {
        n.at("kind").fail("unknown perturbation kind '" + kind + "' (constant, sinusoid, spline)");
    }
    return p;
}

json write_perturbation(const PerturbationSpec& p) {
    switch (p.kind) {
        case PerturbationSignal::Kind::Constant:
            return {{"kind", "constant"}, {"value", p.value}};
        case PerturbationSignal::Kind::Sinusoid:
            return {{"kind", "sinusoid"}, {"amplitude", p.value}, {"omega", p.omega}, {"phase", p.phase}};
        case PerturbationSignal::Kind::NoiseSpline: {
            json j{{"kind", "spline"}, {"bound", p.bound}, {"knot_spacing", p.knot_spacing}};
            if (p.seed) j["seed"] = *p.seed;
            return j;
        }
    }
    return {};
}

FunnelFunction read_funnel(const Node& n) {
    const auto kind = n.at("kind").string();
    if (kind == "identity") return FunnelFunction::identity();
    if (kind == "expm1") {
        const double rate = n.at("rate").number();
        if (!(rate > 0.0)) n.at("rate").fail("must be > 0");
        return FunnelFunction::exp_minus_one(rate);
    }
    n.at("kind").fail("unknown funnel kind '" + kind + "' (identity, expm1)");
}

json write_funnel(const FunnelFunction& f) {
    if (f.kind() == FunnelFunction::Kind::Identity) return {{"kind", "identity"}};
    return {{"kind", "expm1"}, {"rate", f.rate()}};
}

Interval read_interval(const Node& n) {
    const auto v = n.numbers();
    if (v.size() != 2) n.fail("expected [lo, hi]");
    if (v[0] > v[1]) n.fail("interval is inverted");
    return {v[0], v[1]};
}

ChiGrid read_grid(const Node& n) {
    ChiGrid g;
    g.p_points = n.integer_or("p_points", g.p_points);
    g.k_points = n.integer_or("k_points", g.k_points);
    g.v_points_per_half = n.integer_or("v_points_per_half", g.v_points_per_half);
    g.refinement_depth = n.integer_or("refinement_depth", g.refinement_depth);
    if (g.p_points < 3 || g.k_points < 3 || g.v_points_per_half < 3) n.fail("need at least 3 points per axis");
    if (g.refinement_depth < 0) n.fail("refinement_depth must be >= 0");
    return g;
}

RunSettings read_settings(const Node& n) {
    RunSettings s;
    s.t_end = n.number_or("t_end", s.t_end);
    s.tolerances.rel = n.number_or("tol_rel", s.tolerances.rel);
    s.tolerances.abs = n.number_or("tol_abs", s.tolerances.abs);
    s.guard_margin = n.number_or("guard_margin", s.guard_margin);
    s.report_points = n.integer_or("report_points", s.report_points);
    if (n.has("method")) {
        try {
            s.method = step_method_from_string(n.at("method").string());
        } catch (const std::invalid_argument& e) {
            n.at("method").fail(e.what());
        }
    }
    s.conv_threshold = n.number_or("conv_threshold", s.conv_threshold);
    s.conv_window = n.number_or("conv_window", s.conv_window);
    return s;
}

json write_settings(const RunSettings& s) {
    return {{"t_end", s.t_end},
            {"tol_rel", s.tolerances.rel},
            {"tol_abs", s.tolerances.abs},
            {"guard_margin", s.guard_margin},
            {"report_points", s.report_points},
            {"method", to_string(s.method)},
            {"conv_threshold", s.conv_threshold},
            {"conv_window", s.conv_window}};
}

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string safe_filename(const std::string& name) {
    std::string out = name;
    for (char& c : out) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_' || c == '.' || c == '+';
        if (!ok) c = '_';
    }
    return out;
}

std::string describe(const PerturbationSpec& p, std::uint64_t seed) { return p.resolve(seed).describe(); }

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << content;
    if (!os) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

PerturbationSignal PerturbationSpec::resolve(std::uint64_t default_seed) const {
    switch (kind) {
        case PerturbationSignal::Kind::Constant:
            return PerturbationSignal::constant(value);
        case PerturbationSignal::Kind::Sinusoid:
            return PerturbationSignal::sinusoid(value, omega, phase);
        case PerturbationSignal::Kind::NoiseSpline:
            return PerturbationSignal::noise_spline(seed.value_or(default_seed), bound, knot_spacing);
    }
    return {};
}

std::vector<ScenarioDescriptor> ExperimentConfig::expanded_scenarios() const {
    std::vector<ScenarioDescriptor> out = scenarios;
    if (!sweep) return out;
    int index = 0;
    for (const auto& f : sweep->drift) {
        for (const auto& p : sweep->perturbation) {
            for (double x0 : sweep->x0) {
                for (FeedbackSign eta : sweep->eta) {
                    for (const auto& phi : sweep->funnel) {
                        char id[32];
                        std::snprintf(id, sizeof id, "-%03d", index++);
                        ScenarioDescriptor d;
                        d.name = sweep->name + id;
                        d.drift = f;
                        d.perturbation = p;
                        d.funnel = phi;
                        d.eta = eta;
                        d.x0 = x0;
                        out.push_back(std::move(d));
                    }
                }
            }
        }
    }
    return out;
}

ScenarioSpec ExperimentConfig::resolve(const ScenarioDescriptor& d) const {
    ScenarioSpec s;
    s.drift = d.drift;
    s.perturbation = d.perturbation.resolve(seed);
    s.funnel = d.funnel;
    s.eta = d.eta;
    s.x0 = d.x0;
    s.t_end = d.t_end.value_or(defaults.t_end);
    s.tolerances = defaults.tolerances;
    s.guard_margin = defaults.guard_margin;
    s.method = defaults.method;
    s.report_points = defaults.report_points;
    return s;
}

void ExperimentConfig::validate() const {
    if (workers < 1) throw ConfigError("config: workers must be >= 1");
    if (sweep) {
        if (sweep->x0.empty() || sweep->eta.empty() || sweep->drift.empty() || sweep->perturbation.empty() ||
            sweep->funnel.empty()) {
            throw ConfigError("config: sweep '" + sweep->name + "' has an empty axis");
        }
    }
    std::set<std::string> names;
    for (const auto& d : expanded_scenarios()) {
        if (d.name.empty()) throw ConfigError("config: scenario without a name");
        if (!names.insert(d.name).second) throw ConfigError("config: duplicate scenario name '" + d.name + "'");
        try {
            resolve(d).validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("config: scenario '" + d.name + "': " + e.what());
        }
    }
    std::set<std::string> jobs;
    for (const auto& j : chi_jobs) {
        if (j.name.empty()) throw ConfigError("config: chi job without a name");
        if (!jobs.insert(j.name).second) throw ConfigError("config: duplicate chi job name '" + j.name + "'");
        const int first = j.eta == FeedbackSign::Negative ? 0 : 1;
        if (j.n_max < first) {
            throw ConfigError("config: chi job '" + j.name + "': n_max leaves the eta branch empty");
        }
    }
    if (!(defaults.conv_window > 0.0 && defaults.conv_window <= 1.0)) {
        throw ConfigError("config: defaults.conv_window must lie in (0, 1]");
    }
}

ExperimentConfig config_from_json(const json& j) {
    const Node root(j, "$");
    if (!j.is_object()) root.fail("expected an object");
    ExperimentConfig cfg;
    if (root.has("name")) cfg.name = root.at("name").string();
    if (root.has("output_dir")) cfg.output_dir = root.at("output_dir").string();
    if (root.has("report_format")) {
        const auto f = root.at("report_format").string();
        if (f == "csv") {
            cfg.report_format = ReportFormat::Csv;
        } else if (f == "text-summary") {
            cfg.report_format = ReportFormat::TextSummary;
        } else {
            root.at("report_format").fail("expected 'csv' or 'text-summary'");
        }
    }
    cfg.workers = root.integer_or("workers", cfg.workers);
    if (root.has("seed")) cfg.seed = root.at("seed").unsigned_integer();
    if (root.has("defaults")) cfg.defaults = read_settings(root.at("defaults"));

    if (root.has("scenarios")) {
        const auto list = root.at("scenarios");
        for (std::size_t i = 0; i < list.array_size(); ++i) {
            const auto n = list.at(i);
            ScenarioDescriptor d;
            d.name = n.at("name").string();
            d.drift = n.has("drift") ? read_drift(n.at("drift")) : DriftFunction::zero();
            if (n.has("perturbation")) d.perturbation = read_perturbation(n.at("perturbation"));
            if (n.has("funnel")) d.funnel = read_funnel(n.at("funnel"));
            d.eta = read_eta(n.at("eta"));
            d.x0 = n.at("x0").number();
            if (n.has("t_end")) d.t_end = n.at("t_end").number();
            cfg.scenarios.push_back(std::move(d));
        }
    }

    if (root.has("sweep")) {
        const auto n = root.at("sweep");
        SweepSpec s;
        if (n.has("name")) s.name = n.at("name").string();
        s.x0 = n.at("x0").numbers();
        const auto etas = n.at("eta");
        for (std::size_t i = 0; i < etas.array_size(); ++i) s.eta.push_back(read_eta(etas.at(i)));
        const auto drifts = n.at("drift");
        for (std::size_t i = 0; i < drifts.array_size(); ++i) s.drift.push_back(read_drift(drifts.at(i)));
        const auto ps = n.at("perturbation");
        for (std::size_t i = 0; i < ps.array_size(); ++i) s.perturbation.push_back(read_perturbation(ps.at(i)));
        const auto fs_ = n.at("funnel");
        for (std::size_t i = 0; i < fs_.array_size(); ++i) s.funnel.push_back(read_funnel(fs_.at(i)));
        cfg.sweep = std::move(s);
    }

    if (root.has("chi_jobs")) {
        const auto list = root.at("chi_jobs");
        for (std::size_t i = 0; i < list.array_size(); ++i) {
            const auto n = list.at(i);
            ChiJob job;
            job.name = n.at("name").string();
            const auto box = n.at("box");
            job.box.P = read_interval(box.at("P"));
            job.box.K = read_interval(box.at("K"));
            job.drift = n.has("drift") ? read_drift(n.at("drift")) : DriftFunction::zero();
            job.eta = read_eta(n.at("eta"));
            job.n_max = n.at("n_max").integer();
            if (n.has("grid")) job.grid = read_grid(n.at("grid"));
            job.tolerance = n.number_or("tolerance", job.tolerance);
            cfg.chi_jobs.push_back(std::move(job));
        }
    }

    cfg.validate();
    return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    j["output_dir"] = cfg.output_dir;
    j["report_format"] = cfg.report_format == ReportFormat::Csv ? "csv" : "text-summary";
    j["workers"] = cfg.workers;
    j["seed"] = cfg.seed;
    j["defaults"] = write_settings(cfg.defaults);

    json scenarios = json::array();
    for (const auto& d : cfg.scenarios) {
        json s{{"name", d.name},
               {"drift", write_drift(d.drift)},
               {"perturbation", write_perturbation(d.perturbation)},
               {"funnel", write_funnel(d.funnel)},
               {"eta", eta_int(d.eta)},
               {"x0", d.x0}};
        if (d.t_end) s["t_end"] = *d.t_end;
        scenarios.push_back(std::move(s));
    }
    j["scenarios"] = std::move(scenarios);

    if (cfg.sweep) {
        const auto& s = *cfg.sweep;
        json sw{{"name", s.name}, {"x0", s.x0}};
        sw["eta"] = json::array();
        for (auto e : s.eta) sw["eta"].push_back(eta_int(e));
        sw["drift"] = json::array();
        for (const auto& f : s.drift) sw["drift"].push_back(write_drift(f));
        sw["perturbation"] = json::array();
        for (const auto& p : s.perturbation) sw["perturbation"].push_back(write_perturbation(p));
        sw["funnel"] = json::array();
        for (const auto& f : s.funnel) sw["funnel"].push_back(write_funnel(f));
        j["sweep"] = std::move(sw);
    }

    json jobs = json::array();
    for (const auto& job : cfg.chi_jobs) {
        jobs.push_back({{"name", job.name},
                        {"box", {{"P", {job.box.P.lo, job.box.P.hi}}, {"K", {job.box.K.lo, job.box.K.hi}}}},
                        {"drift", write_drift(job.drift)},
                        {"eta", eta_int(job.eta)},
                        {"n_max", job.n_max},
                        {"grid",
                         {{"p_points", job.grid.p_points},
                          {"k_points", job.grid.k_points},
                          {"v_points_per_half", job.grid.v_points_per_half},
                          {"refinement_depth", job.grid.refinement_depth}}},
                        {"tolerance", job.tolerance}});
    }
    j["chi_jobs"] = std::move(jobs);
    return j;
}

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // Translate the byte offset into line:column.
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("config: syntax error at line " + std::to_string(line) + ", column " +
                          std::to_string(col) + ": " + e.what());
    }
    return config_from_json(j);
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

bool BatchReport::all_checks_pass() const {
    for (const auto& r : runs) {
        if (!r.report.funnel_contained) return false;
    }
    for (const auto& c : certificates) {
        if (c.certificate.entries.empty() || c.certificate.min_margin() < 0.0) return false;
    }
    return true;
}

BatchReport run_batch(const ExperimentConfig& config, const BatchOptions& options) {
    config.validate();
    BatchReport report;
    const fs::path out_dir(config.output_dir);
    const fs::path runs_dir = out_dir / "runs";
    const fs::path certs_dir = out_dir / "certificates";
    if (options.write_files) {
        fs::create_directories(out_dir);
        if (options.simulate) fs::create_directories(runs_dir);
        if (options.chi) fs::create_directories(certs_dir);
    }

    const auto scenarios = options.simulate ? config.expanded_scenarios() : std::vector<ScenarioDescriptor>{};
    report.runs.resize(scenarios.size());
    report.certificates.resize(options.chi ? config.chi_jobs.size() : 0);

    // One task per run and per chi job; each writes only its own slot and files.
    const std::size_t n_tasks = report.runs.size() + report.certificates.size();
    std::vector<std::exception_ptr> errors(n_tasks);
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (std::size_t i = next++; i < n_tasks; i = next++) {
            try {
                if (i < report.runs.size()) {
                    const auto& d = scenarios[i];
                    const auto spec = config.resolve(d);
                    const auto traj = integrate(spec);
                    RunRow& row = report.runs[i];
                    row.name = d.name;
                    row.scenario = d;
                    row.status = traj.status;
                    row.t_fail = traj.t_fail;
                    row.stats = traj.stats;
                    row.report =
                        check_invariants(traj, config.defaults.conv_threshold, config.defaults.conv_window);
                    if (options.write_files) {
                        const auto csv = runs_dir / (safe_filename(d.name) + ".csv");
                        std::ostringstream os;
                        write_trajectory_csv(os, traj);
                        write_file(csv, os.str());
                        std::optional<double> t_fail;
                        if (traj.status != TrajectoryStatus::CompletedHorizon) t_fail = traj.t_fail;
                        emit_plot_script(csv, d.funnel, runs_dir / (safe_filename(d.name) + ".gp"), t_fail);
                    }
                } else {
                    const auto& job = config.chi_jobs[i - report.runs.size()];
                    CertificateRow& row = report.certificates[i - report.runs.size()];
                    row.name = job.name;
                    row.certificate =
                        build_certificate(job.box, job.drift, job.eta, job.n_max, job.grid, job.tolerance);
                    if (options.write_files) {
                        std::ostringstream os;
                        write_certificate(os, row.certificate);
                        write_file(certs_dir / (safe_filename(job.name) + ".txt"), os.str());
                    }
                }
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    const auto n_threads = static_cast<std::size_t>(std::max(1, config.workers));
    if (n_threads == 1 || n_tasks <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(n_threads, n_tasks); ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    for (const auto& r : report.runs) {
        ++report.run_count;
        report.contained += r.report.funnel_contained;
        report.converged += r.report.converged;
        report.control_bounded += r.report.control_bounded;
        report.escaped += r.status != TrajectoryStatus::CompletedHorizon;
    }

    if (options.write_files) {
        if (config.report_format == ReportFormat::Csv) {
            if (options.simulate) {
                std::ostringstream os;
                os << "name,drift,perturbation,funnel,eta,x0,status,t_fail,max_w,epsilon,sup_abs_u,control_bound,"
                      "window_max_abs_x,max_k,contained,converged,control_bounded,global,accepted_steps,"
                      "rejected_steps\n";
                for (const auto& r : report.runs) {
                    const auto& d = r.scenario;
                    os << r.name << ',' << d.drift.describe() << ',' << describe(d.perturbation, config.seed)
                       << ',' << d.funnel.describe() << ',' << eta_int(d.eta) << ',' << fmt17(d.x0) << ','
                       << to_string(r.status) << ',' << fmt17(r.t_fail) << ',' << fmt17(r.report.max_w) << ','
                       << fmt17(r.report.epsilon) << ',' << fmt17(r.report.sup_abs_u) << ','
                       << fmt17(r.report.control_bound) << ',' << fmt17(r.report.window_max_abs_x) << ','
                       << fmt17(r.stats.max_k) << ',' << r.report.funnel_contained << ',' << r.report.converged
                       << ',' << r.report.control_bounded << ',' << r.report.global << ','
                       << r.stats.accepted_steps << ',' << r.stats.rejected_steps << '\n';
                }
                write_file(out_dir / "summary.csv", os.str());
            }
            if (options.chi) {
                std::ostringstream os;
                os << "name,eta,n,s_n,chi,bound,margin\n";
                for (const auto& c : report.certificates) {
                    for (const auto& e : c.certificate.entries) {
                        os << c.name << ',' << eta_int(c.certificate.eta) << ',' << e.n << ',' << fmt17(e.s) << ','
                           << fmt17(e.chi) << ',' << fmt17(e.bound) << ',' << fmt17(e.margin) << '\n';
                    }
                }
                write_file(out_dir / "certificates.csv", os.str());
            }
        } else {
            std::ostringstream os;
            write_text_summary(os, config, report);
            write_file(out_dir / "summary.txt", os.str());
        }
    }
    return report;
}

void write_text_summary(std::ostream& os, const ExperimentConfig& config, const BatchReport& report) {
    os << "experiment: " << config.name << '\n';
    if (!report.runs.empty()) {
        os << "note: the drift/perturbation/initial-state matrix is this tool's own choice; any continuous drift "
              "and bounded continuous perturbation are admissible plants.\n";
    }
    os << "runs: " << report.run_count << "  contained: " << report.contained
       << "  converged: " << report.converged << "  control-bounded: " << report.control_bounded
       << "  escaped: " << report.escaped << '\n';
    for (const auto& r : report.runs) {
        os << "run " << r.name << " eta=" << (eta_int(r.scenario.eta) > 0 ? "+1" : "-1")
           << " status=" << to_string(r.status) << " max_w=" << fmt17(r.report.max_w)
           << " sup|u|=" << fmt17(r.report.sup_abs_u) << " bound=" << fmt17(r.report.control_bound)
           << " window|x|=" << fmt17(r.report.window_max_abs_x)
           << " contained=" << (r.report.funnel_contained ? "yes" : "no")
           << " converged=" << (r.report.converged ? "yes" : "no") << '\n';
    }
    for (const auto& c : report.certificates) {
        os << "certificate " << c.name << " eta=" << (eta_int(c.certificate.eta) > 0 ? "+1" : "-1")
           << " c1=" << fmt17(c.certificate.c1) << " entries=" << c.certificate.entries.size()
           << " min_margin=" << fmt17(c.certificate.min_margin())
           << (c.certificate.min_margin() >= 0.0 ? " ok" : " VIOLATED") << '\n';
    }
    os << "verdict: " << (report.all_checks_pass() ? "PASS" : "FAIL") << '\n';
}

FunnelFunction funnel_from_string(const std::string& s) {
    if (s == "identity") return FunnelFunction::identity();
    const std::string prefix = "expm1:";
    if (s.rfind(prefix, 0) == 0) {
        try {
            std::size_t used = 0;
            const std::string rest = s.substr(prefix.size());
            const double rate = std::stod(rest, &used);
            if (used == rest.size()) return FunnelFunction::exp_minus_one(rate);
        } catch (const std::exception&) {
        }
    }
    throw std::invalid_argument("funnel must be 'identity' or 'expm1:<rate>', got '" + s + "'");
}

void emit_plot_script(const fs::path& traj_csv, const FunnelFunction& funnel, const fs::path& script_path,
                      std::optional<double> t_fail) {
    std::ifstream is(traj_csv, std::ios::binary);
    if (!is) throw std::runtime_error("plot: cannot open " + traj_csv.string());
    std::vector<TrajectorySample> rows;
    try {
        rows = read_trajectory_csv(is);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error("plot: " + traj_csv.string() + ": " + e.what());
    }
    if (rows.empty()) throw std::runtime_error("plot: " + traj_csv.string() + " has no samples");

    double t_max = rows.back().t;
    double x_max = 0.0;
    for (const auto& r : rows) x_max = std::max(x_max, std::fabs(r.x));
    const double y_max = x_max > 0.0 ? 1.25 * x_max : 1.0;
    const std::string data = script_path.has_parent_path() && script_path.parent_path() == traj_csv.parent_path()
                                 ? traj_csv.filename().string()
                                 : traj_csv.string();
    const std::string phi = funnel.kind() == FunnelFunction::Kind::Identity
                                ? "phi(t) = t"
                                : "phi(t) = exp(" + fmt17(funnel.rate()) + " * t) - 1";

    std::ostringstream os;
    os << "# funnel F = {(t, x) : phi(t)|x| < 1} with a trajectory inside it\n"
       << "# funnel: " << funnel.describe() << "\n"
       << "set datafile separator ','\n"
       << phi << "\n"
       << "t0 = 1e-3\n"
       << "set samples 2000\n"
       << "set xlabel 't'\n"
       << "set ylabel 'x(t)'\n"
       << "set xrange [0:" << fmt17(t_max) << "]\n"
       << "set yrange [" << fmt17(-y_max) << ":" << fmt17(y_max) << "]\n"
       << "set style fill transparent solid 0.15 noborder\n";
    if (t_fail) {
        os << "set arrow from " << fmt17(*t_fail) << ", graph 0 to " << fmt17(*t_fail)
           << ", graph 1 nohead dashtype 2 linecolor rgb 'red'\n"
           << "set label 't_fail' at " << fmt17(*t_fail) << ", graph 0.95 right offset -0.5,0 textcolor rgb 'red'\n";
    }
    os << "plot (x >= t0 ? 1/phi(x) : 1/0) with lines dashtype 2 linecolor rgb 'black' title '+1/phi(t)', \\\n"
       << "     (x >= t0 ? -1/phi(x) : 1/0) with lines dashtype 2 linecolor rgb 'black' title '-1/phi(t)', \\\n"
       << "     '" << data << "' using 1:2 skip 1 with lines linewidth 2 title 'x(t)'\n";
    write_file(script_path, os.str());
}

}  // namespace funnelsim
