#pragma once

#include <Eigen/Dense>

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hopgag/fixed_point.hpp"
#include "hopgag/hopfield.hpp"

namespace hopgag {

enum class ExperimentKind { noise_robustness, convergence_bench, guidance_sweep };
enum class PatternMode { gaussian, unit_sphere };

std::string to_string(ExperimentKind kind);
std::string to_string(PatternMode mode);

/// Declarative description of one experiment. Everything downstream is a
/// pure function of this record, seed included.
struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::noise_robustness;
    std::uint64_t seed = 0;
    Eigen::Index d = 32;
    Eigen::Index M = 8;
    PatternMode pattern_mode = PatternMode::unit_sphere;
    std::vector<double> alphas = {1.0, 1.5, 2.0};
    std::vector<double> sigmas = {0.0, 0.1, 0.2, 0.3, 0.5, 0.8};
    std::vector<double> lambdas = {0.0, 1.0, 5.0, 10.0, 12.0};
    int trials = 32;
    double tol = 1e-8;
    int max_iter = 500;
    std::optional<double> beta; // defaults to 1/sqrt(d)
    GuidanceParams guidance{};

    double effective_beta() const;
    void validate() const;

    /// Strict JSON round trip; unknown keys are rejected on parse.
    static ExperimentSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

using Cell = std::variant<std::int64_t, double, std::string>;

/// Flat result table plus metadata and per-grid-point summary statistics.
struct Report {
    nlohmann::json metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    nlohmann::json summary;

    bool operator==(const Report& other) const;
};

enum class ReportFormat { csv, json };

/// Deterministic pattern generation. gaussian draws i.i.d. standard normal
/// entries; unit_sphere additionally normalizes each column.
PatternMatrix gen_patterns(Eigen::Index d, Eigen::Index M, PatternMode mode,
                           std::uint64_t seed);

Report run_noise_robustness(const ExperimentSpec& spec);
Report run_convergence_bench(const ExperimentSpec& spec);
Report run_guidance_sweep(const ExperimentSpec& spec);

/// Dispatches on spec.kind.
Report run_experiment(const ExperimentSpec& spec);

/// CSV: header row plus one line per record, RFC-4180 quoting, floating
/// point with 17 significant digits. JSON: metadata + summary + rows;
/// parses back to a structurally equal report.
std::string report_to_csv(const Report& report);
nlohmann::json report_to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);

void write_report(const Report& report, const std::string& path, ReportFormat format);

/// Trace serialization: one row per state (k, residual, energy?, u?). The
/// final state of a converged run carries no residual entry.
std::string trace_to_csv(const IterationTrace& trace);

/// Retrieval dynamics as a fixed-point operator.
Operator make_retrieval_operator(const PatternMatrix& xi, const HopfieldConfig& cfg);

/// Seeded linear contraction x -> A x + b with spectral radius `rho`:
/// A = Q diag(linspace(0.84 rho, rho)) Q^T for a random orthogonal Q.
struct LinearTestbed {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd x0;

    Operator as_operator() const;
    /// Half-step blend (x + A x + b) / 2: same fixed point, slower map.
    Operator weak_operator() const;
    Eigen::VectorXd fixed_point() const;
};

LinearTestbed make_linear_contraction(Eigen::Index d, double rho, std::uint64_t seed);

/// Number of worker threads honoring HOPGAG_THREADS (0/unset = auto).
int thread_budget();

} // namespace hopgag
