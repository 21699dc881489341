// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "funnelsim/experiments.hpp"

using namespace funnelsim;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = FUNNELSIM_CONFIG_DIR;
const double kSinLn2 = std::sin(std::numbers::ln2);

struct Verdict {
    bool pass = true;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ExperimentConfig acceptance_sweep() {
    auto cfg = load_config(kConfigs / "acceptance.json");
    cfg.chi_jobs.clear();
    return cfg;
}

Verdict dichotomy() {
    auto cfg = acceptance_sweep();
    cfg.workers = 1;
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = run_batch(cfg, {.simulate = true, .chi = false, .write_files = false});
    const double secs = seconds_since(t0);

    int unconverged_identity = 0;
    double worst_window = 0.0;
    for (const auto& r : rep.runs) {
        if (!r.report.converged) {
            worst_window = std::max(worst_window, r.report.window_max_abs_x);
            unconverged_identity += r.scenario.funnel.kind() == FunnelFunction::Kind::Identity;
        }
    }
    Verdict v;
    v.pass = rep.run_count == 144 && rep.contained == 144 && rep.converged == 144 && rep.control_bounded == 144 &&
             secs < 60.0;
    v.detail = fmt("runs=%d contained=%d converged=%d (unconverged: %d identity-funnel, worst window |x|=%.3g) "
                   "control-bounded=%d time=%.1fs",
                   rep.run_count, rep.contained, rep.converged, rep.converged == 144 ? 0 : unconverged_identity,
                   worst_window, rep.control_bounded, secs);
    return v;
}

Verdict certificates() {
    const CompactBox box{{0.0, 0.0}, {-1.0, 1.0}};
    const auto t0 = std::chrono::steady_clock::now();
    const auto plus = build_certificate(box, DriftFunction::zero(), FeedbackSign::Negative, 4);
    const auto minus = build_certificate(box, DriftFunction::zero(), FeedbackSign::Positive, 3);
    const double secs = seconds_since(t0);

    double min_margin = std::min(plus.min_margin(), minus.min_margin());
    // Linear growth: chi(s_n) / s_n stays above a positive floor.
    double min_ratio = INFINITY;
    for (const auto* c : {&plus, &minus}) {
        for (const auto& e : c->entries) min_ratio = std::min(min_ratio, e.chi / e.s);
    }
    const bool indices = plus.entries.size() == 3 && plus.entries[2].n == 4 && minus.entries.size() == 2 &&
                         minus.entries[1].n == 3;
    Verdict v;
    v.pass = indices && min_margin >= -1e-6 && min_ratio >= 0.25 * kSinLn2 && secs < 10.0;
    v.detail = fmt("eta=+1 n={0,2,4} eta=-1 n={1,3} min margin=%.6g min chi/s_n=%.6g time=%.2fs", min_margin,
                   min_ratio, secs);
    return v;
}

Verdict identities() {
    double worst = 0.0;
    bool half_ok = true;
    for (int n = 0; n <= 10; ++n) {
        const double s = s_sequence(n);
        worst = std::max(worst, std::fabs(std::log1p(s) - ((n + 1) * std::numbers::pi - std::numbers::ln2)));
        half_ok = half_ok && std::log1p(0.5 * s) > n * std::numbers::pi + std::numbers::pi / 2;
    }
    return {worst < 1e-9 && half_ok, fmt("max |ln(1+s_n) - ((n+1)pi - ln2)|=%.3g, half-gain bound %s", worst,
                                         half_ok ? "holds" : "violated")};
}

Verdict sine_branches() {
    double even_min = INFINITY, odd_max = -INFINITY;
    for (int k = 0; k <= 2; ++k) even_min = std::min(even_min, sine_branch_extreme(2 * k, 10000));
    for (int k = 1; k <= 3; ++k) odd_max = std::max(odd_max, sine_branch_extreme(2 * k - 1, 10000));
    return {even_min >= kSinLn2 && odd_max <= -kSinLn2,
            fmt("even n=0,2,4 min=%.12g, odd n=1,3,5 max=%.12g, sin(ln 2)=%.12g", even_min, odd_max, kSinLn2)};
}

Verdict function_layer() {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> wide(-1e4, 1e4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int odd_bad = 0, env_bad = 0;
    for (int i = 0; i < 10000; ++i) {
        const double v = wide(rng) * std::pow(unit(rng), 4);
        odd_bad += g(-v) != -g(v);
        env_bad += std::fabs(g(v)) > std::fabs(v);
    }

    std::vector<double> s(10000);
    for (double& x : s) x = unit(rng) * (1.0 - 1e-12);
    std::sort(s.begin(), s.end());
    int mono_bad = 0;
    for (std::size_t i = 1; i < s.size(); ++i) mono_bad += s[i] > s[i - 1] && !(alpha(s[i]) > alpha(s[i - 1]));

    int sign_bad = 0;
    double growth = 0.0;
    for (const auto& phi : {FunnelFunction::identity(), FunnelFunction::exp_minus_one(0.5)}) {
        for (int i = 0; i < 10000; ++i) {
            const double t = 1e-6 + 50.0 * unit(rng);
            const double w = (2.0 * unit(rng) - 1.0) * (1.0 - 1e-9);
            const double xi = w / phi.value(t);
            if (xi == 0.0) continue;
            sign_bad += !(xi * h(phi, t, xi) > 0.0);
        }
        growth = std::max(growth, growth_violation(phi, 50.0, 10001));
    }
    return {odd_bad == 0 && env_bad == 0 && mono_bad == 0 && sign_bad == 0 && growth <= 1e-6,
            fmt("g odd violations=%d, |g(v)|>|v| violations=%d, alpha monotone violations=%d, xi*h<=0 "
                "violations=%d, growth excess=%.3g",
                odd_bad, env_bad, mono_bad, sign_bad, growth)};
}

Verdict nesting() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int nest_bad = 0;
    double worst_rel = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const DriftFunction f =
            trial % 2 == 0 ? DriftFunction::affine(2 * u(rng), 2 * u(rng)) : DriftFunction::quadratic(2 * u(rng));
        const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
        const CompactBox box{{std::min(a, b), std::max(a, b)}, {std::min(c, d) - 0.5, std::max(c, d) + 0.5}};
        const double s = 500.0 * u(rng);

        const ChiGrid base{16, 16, 8, 6};
        const auto coarse = chi_eval(box, f, s, base);
        const auto fine = chi_eval(box, f, s, base.doubled());
        nest_bad += fine.value > coarse.value;
        nest_bad += fine.coarse_value > coarse.coarse_value;

        const auto d6 = chi_eval(box, f, s, ChiGrid{64, 64, 32, 6});
        const auto d8 = chi_eval(box, f, s, ChiGrid{64, 64, 32, 8});
        worst_rel = std::max(worst_rel, std::fabs(d6.value - d8.value) / std::max(1.0, std::fabs(d8.value)));
    }
    return {nest_bad == 0 && worst_rel <= 1e-4,
            fmt("nested-grid increases=%d, max relative gap depth 6 vs 8=%.3g", nest_bad, worst_rel)};
}

Verdict consistency() {
    auto cfg = acceptance_sweep();
    const auto scenarios = cfg.expanded_scenarios();
    double worst = 0.0;
    int bad = 0;
    for (std::size_t i = 0; i < 10; ++i) {
        auto spec = cfg.resolve(scenarios[i]);
        const auto tol = spec.tolerances;
        const double xc = integrate(spec).samples.back().x;
        spec.tolerances = {tol.rel / 2, tol.abs / 2};
        const double xf = integrate(spec).samples.back().x;
        const double ratio = std::fabs(xc - xf) / (tol.abs + tol.rel * std::fabs(xc));
        worst = std::max(worst, ratio);
        bad += !(ratio < 10.0);
    }
    return {bad == 0, fmt("first 10 sweep runs, max |dx(t_end)| / (abs + rel|x|)=%.3g (limit 10)", worst)};
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Verdict determinism() {
    const fs::path root = fs::absolute("acceptance-determinism");
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string cli = FUNNELSIM_CLI;
    const std::string config = (kConfigs / "acceptance.json").string();
    int codes[2];
    for (int i = 0; i < 2; ++i) {
        const auto dir = root / ("run" + std::to_string(i));
        const std::string cmd = "\"" + cli + "\" verify \"" + config + "\" --workers 4 --out \"" + dir.string() +
                                "\" > \"" + (root / ("stdout" + std::to_string(i) + ".txt")).string() + "\"";
        codes[i] = std::system(cmd.c_str());
    }
    int files = 0, differ = 0;
    const auto a = root / "run0";
    const auto b = root / "run1";
    if (fs::exists(a)) {
        for (const auto& e : fs::recursive_directory_iterator(a)) {
            if (!e.is_regular_file()) continue;
            ++files;
            const auto rel = fs::relative(e.path(), a);
            differ += !fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel);
        }
    }
    const bool stdout_same = slurp(root / "stdout0.txt") == slurp(root / "stdout1.txt");
    return {codes[0] == 0 && codes[1] == 0 && files > 0 && differ == 0 && stdout_same,
            fmt("exit codes %d/%d, %d files compared, %d differ, stdout %s", codes[0], codes[1], files, differ,
                stdout_same ? "identical" : "differs")};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Verdict()>> criteria[] = {
        {"dichotomy sweep: 144 runs contained, converged, control bounded", dichotomy},
        {"chi unboundedness certificates", certificates},
        {"gain sequence identities", identities},
        {"sine branches on V", sine_branches},
        {"function-layer properties", function_layer},
        {"chi oracle nesting and refinement depth", nesting},
        {"integrator tolerance consistency", consistency},
        {"verify determinism", determinism},
    };
    int failed = 0;
    int index = 1;
    for (const auto& [name, run] : criteria) {
        Verdict v;
        try {
            v = run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += !v.pass;
        std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << index++ << ": " << name << " | " << v.detail
                  << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria pass" : std::to_string(failed) + " criterion(s) failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
