// funnelsim/experiments.hpp
//
// Batch front-end: JSON experiment configs, sweeps, chi certificate jobs and
// the files they produce.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "funnelsim/chi.hpp"
#include "funnelsim/simulate.hpp"

namespace funnelsim {

/// Config problems, with the JSON path (and line, for syntax errors) in what().
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Perturbation as written in a config. A noise spline without a seed takes
/// the config-wide seed when resolved.
struct PerturbationSpec {
    PerturbationSignal::Kind kind = PerturbationSignal::Kind::Constant;
    double value = 0.0;  ///< constant value, or sinusoid amplitude
    double omega = 1.0;
    double phase = 0.0;
    double bound = 1.0;
    double knot_spacing = 1.0;
    std::optional<std::uint64_t> seed;

    [[nodiscard]] PerturbationSignal resolve(std::uint64_t default_seed) const;
    bool operator==(const PerturbationSpec&) const = default;
};

struct RunSettings {
    double t_end = 50.0;
    Tolerances tolerances;
    double guard_margin = 1e-3;
    int report_points = 2000;
    StepMethod method = StepMethod::Sdirk4;
    double conv_threshold = kDefaultConvThreshold;
    double conv_window = kDefaultConvWindow;

    bool operator==(const RunSettings&) const = default;
};

struct ScenarioDescriptor {
    std::string name;
    DriftFunction drift;
    PerturbationSpec perturbation;
    FunnelFunction funnel = FunnelFunction::identity();
    FeedbackSign eta = FeedbackSign::Negative;
    double x0 = 0.0;
    std::optional<double> t_end;

    bool operator==(const ScenarioDescriptor&) const = default;
};

/// Cross product drift x perturbation x x0 x eta x funnel (funnel varies fastest).
struct SweepSpec {
    std::string name = "sweep";
    std::vector<double> x0;
    std::vector<FeedbackSign> eta;
    std::vector<DriftFunction> drift;
    std::vector<PerturbationSpec> perturbation;
    std::vector<FunnelFunction> funnel;

    bool operator==(const SweepSpec&) const = default;
};

struct ChiJob {
    std::string name;
    CompactBox box;
    DriftFunction drift;
    FeedbackSign eta = FeedbackSign::Negative;
    int n_max = 4;
    ChiGrid grid;
    double tolerance = 1e-6;

    bool operator==(const ChiJob&) const = default;
};

enum class ReportFormat { Csv, TextSummary };

struct ExperimentConfig {
    std::string name = "experiment";
    std::vector<ScenarioDescriptor> scenarios;
    std::optional<SweepSpec> sweep;
    std::vector<ChiJob> chi_jobs;
    std::string output_dir = "out";
    ReportFormat report_format = ReportFormat::Csv;
    int workers = 1;
    std::uint64_t seed = 0;
    RunSettings defaults;

    /// Scenarios followed by the expanded sweep, in execution order.
    [[nodiscard]] std::vector<ScenarioDescriptor> expanded_scenarios() const;
    /// Resolves a descriptor against `defaults` and `seed`.
    [[nodiscard]] ScenarioSpec resolve(const ScenarioDescriptor& d) const;
    /// Throws ConfigError on duplicate names, empty sweep axes, bad values.
    void validate() const;

    bool operator==(const ExperimentConfig&) const = default;
};

[[nodiscard]] ExperimentConfig config_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json config_to_json(const ExperimentConfig& cfg);
/// Parses text; syntax errors report line and column.
[[nodiscard]] ExperimentConfig parse_config(const std::string& text);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

struct RunRow {
    std::string name;
    ScenarioDescriptor scenario;
    TrajectoryStatus status = TrajectoryStatus::CompletedHorizon;
    double t_fail = 0.0;
    InvariantReport report;
    TrajectoryStats stats;
};

struct CertificateRow {
    std::string name;
    UnboundednessCertificate certificate;
};

struct BatchReport {
    std::vector<RunRow> runs;
    std::vector<CertificateRow> certificates;
    int run_count = 0;
    int contained = 0;
    int converged = 0;
    int control_bounded = 0;
    int escaped = 0;

    /// Every run contained and every certificate margin >= 0.
    [[nodiscard]] bool all_checks_pass() const;
};

struct BatchOptions {
    bool simulate = true;
    bool chi = true;
    /// Write CSVs, plot scripts, certificates and the summary under output_dir.
    bool write_files = true;
};

/// Executes the scenarios and/or chi jobs. Runs are spread over
/// config.workers threads; outputs are independent of the worker count.
[[nodiscard]] BatchReport run_batch(const ExperimentConfig& config, const BatchOptions& options = {});

/// Human-readable summary (also written as summary.txt for text-summary format).
void write_text_summary(std::ostream& os, const ExperimentConfig& config, const BatchReport& report);

/// Writes a gnuplot script drawing the +-1/phi(t) envelope and x(t) from the
/// trajectory CSV, marking t_fail when given. Throws std::runtime_error when
/// the CSV is missing or malformed.
void emit_plot_script(const std::filesystem::path& traj_csv, const FunnelFunction& funnel,
                      const std::filesystem::path& script_path, std::optional<double> t_fail = std::nullopt);

/// "identity" or "expm1:<rate>".
[[nodiscard]] FunnelFunction funnel_from_string(const std::string& s);

}  // namespace funnelsim
