#include "hopgag/experiment.hpp"

#include "hopgag/matrix_io.hpp"
#include "hopgag/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace hopgag {

namespace {

// Stream tags keeping the per-purpose RNG sub-streams disjoint.
enum Stream : std::uint64_t {
    kPatterns = 1,
    kNoise = 2,
    kLinear = 3,
    kBenchPatterns = 4,
    kBenchQuery = 5,
    kSweepPatterns = 6,
    kSweepQuery = 7,
    kSweepSynthetic = 8,
};

Eigen::VectorXd gaussian_vector(SplitMix64& rng, Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.next_gaussian();
    return v;
}

Eigen::MatrixXd gaussian_matrix(SplitMix64& rng, Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.next_gaussian();
    }
    return m;
}

void parallel_for(int jobs, const std::function<void(int)>& body) {
    const int workers = std::min(jobs, thread_budget());
    if (workers <= 1) {
        for (int i = 0; i < jobs; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < jobs; i = next.fetch_add(1)) {
                body(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += "\"\"";
        else out += ch;
    }
    out += '"';
    return out;
}

std::string cell_to_csv(const Cell& cell) {
    if (std::holds_alternative<std::int64_t>(cell)) {
        return std::to_string(std::get<std::int64_t>(cell));
    }
    if (std::holds_alternative<double>(cell)) {
        return format_double(std::get<double>(cell));
    }
    return csv_escape(std::get<std::string>(cell));
}

// Least-squares line fit R^2; degenerate spreads fall back to 1 when the
// residuals vanish too, else 0.
double linfit_r2(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    if (n < 2) return 1.0;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) { mx += xs[i]; my += ys[i]; }
    mx /= n; my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0) return syy == 0.0 ? 1.0 : 0.0;
    const double ss_res = syy - sxy * sxy / sxx;
    if (syy == 0.0) return 1.0;
    return 1.0 - ss_res / syy;
}

double safe_log(double v) { return std::log(std::max(v, 1e-300)); }

nlohmann::json guidance_to_json(const GuidanceParams& g) {
    nlohmann::json j;
    j["lambda"] = g.lambda;
    j["zeta"] = g.zeta;
    if (std::isinf(g.eta)) j["eta"] = "inf";
    else j["eta"] = g.eta;
    j["alpha"] = g.alpha.value();
    return j;
}

GuidanceParams guidance_from_json(const nlohmann::json& j) {
    GuidanceParams g;
    for (const auto& [key, value] : j.items()) {
        if (key == "lambda") g.lambda = value.get<double>();
        else if (key == "zeta") g.zeta = value.get<double>();
        else if (key == "eta") {
            if (value.is_string()) {
                const std::string s = value.get<std::string>();
                if (s != "inf" && s != "infinity") {
                    throw invalid_input("guidance.eta: expected a number or \"inf\"");
                }
                g.eta = GuidanceParams::unbounded_eta();
            } else {
                g.eta = value.get<double>();
            }
        } else if (key == "alpha") g.alpha = Alpha(value.get<double>());
        else throw invalid_input("guidance: unknown key '" + key + "'");
    }
    g.validate();
    return g;
}

} // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::noise_robustness: return "noise_robustness";
        case ExperimentKind::convergence_bench: return "convergence_bench";
        case ExperimentKind::guidance_sweep: return "guidance_sweep";
    }
    return "unknown";
}

std::string to_string(PatternMode mode) {
    return mode == PatternMode::gaussian ? "gaussian" : "unit_sphere";
}

double ExperimentSpec::effective_beta() const {
    return beta ? *beta : HopfieldConfig::default_beta(d);
}

void ExperimentSpec::validate() const {
    if (d < 1 || M < 1) throw invalid_input("spec: dims must be >= 1");
    if (trials < 1) throw invalid_input("spec: trials must be >= 1");
    if (!(tol > 0.0)) throw invalid_input("spec: tol must be positive");
    if (max_iter < 1) throw invalid_input("spec: max_iter must be >= 1");
    if (alphas.empty()) throw invalid_input("spec: alphas grid must be non-empty");
    for (double a : alphas) Alpha{a};
    if (kind == ExperimentKind::noise_robustness) {
        if (sigmas.empty()) throw invalid_input("spec: sigmas grid must be non-empty");
        for (double s : sigmas) {
            if (!(s >= 0.0) || !std::isfinite(s)) {
                throw invalid_input("spec: sigmas must be finite and >= 0");
            }
        }
    }
    if (kind == ExperimentKind::guidance_sweep) {
        if (lambdas.empty()) throw invalid_input("spec: lambdas grid must be non-empty");
        for (double l : lambdas) {
            if (!(l >= 0.0) || !std::isfinite(l)) {
                throw invalid_input("spec: lambdas must be finite and >= 0");
            }
        }
    }
    if (beta && (!(*beta > 0.0) || !std::isfinite(*beta))) {
        throw invalid_input("spec: beta must be positive");
    }
    guidance.validate();
}

ExperimentSpec ExperimentSpec::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw invalid_input("spec: expected a JSON object");
    ExperimentSpec spec;
    bool has_kind = false;
    for (const auto& [key, value] : j.items()) {
        if (key == "kind") {
            const std::string k = value.get<std::string>();
            if (k == "noise_robustness") spec.kind = ExperimentKind::noise_robustness;
            else if (k == "convergence_bench") spec.kind = ExperimentKind::convergence_bench;
            else if (k == "guidance_sweep") spec.kind = ExperimentKind::guidance_sweep;
            else throw invalid_input("spec: unknown kind '" + k + "'");
            has_kind = true;
        } else if (key == "seed") {
            spec.seed = value.get<std::uint64_t>();
        } else if (key == "dims") {
            for (const auto& [dk, dv] : value.items()) {
                if (dk == "d") spec.d = dv.get<Eigen::Index>();
                else if (dk == "M") spec.M = dv.get<Eigen::Index>();
                else throw invalid_input("spec.dims: unknown key '" + dk + "'");
            }
        } else if (key == "pattern_mode") {
            const std::string m = value.get<std::string>();
            if (m == "gaussian") spec.pattern_mode = PatternMode::gaussian;
            else if (m == "unit_sphere") spec.pattern_mode = PatternMode::unit_sphere;
            else throw invalid_input("spec: unknown pattern_mode '" + m + "'");
        } else if (key == "alphas") {
            spec.alphas = value.get<std::vector<double>>();
        } else if (key == "sigmas") {
            spec.sigmas = value.get<std::vector<double>>();
        } else if (key == "lambdas") {
            spec.lambdas = value.get<std::vector<double>>();
        } else if (key == "trials") {
            spec.trials = value.get<int>();
        } else if (key == "tol") {
            spec.tol = value.get<double>();
        } else if (key == "max_iter") {
            spec.max_iter = value.get<int>();
        } else if (key == "beta") {
            spec.beta = value.get<double>();
        } else if (key == "guidance") {
            spec.guidance = guidance_from_json(value);
        } else {
            throw invalid_input("spec: unknown key '" + key + "'");
        }
    }
    if (!has_kind) throw invalid_input("spec: missing required key 'kind'");
    spec.validate();
    return spec;
}

nlohmann::json ExperimentSpec::to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind);
    j["seed"] = seed;
    j["dims"] = {{"d", d}, {"M", M}};
    j["pattern_mode"] = to_string(pattern_mode);
    j["alphas"] = alphas;
    if (kind == ExperimentKind::noise_robustness) j["sigmas"] = sigmas;
    if (kind == ExperimentKind::guidance_sweep) j["lambdas"] = lambdas;
    j["trials"] = trials;
    j["tol"] = tol;
    j["max_iter"] = max_iter;
    if (beta) j["beta"] = *beta;
    j["guidance"] = guidance_to_json(guidance);
    return j;
}

bool Report::operator==(const Report& other) const {
    return metadata == other.metadata && columns == other.columns &&
           rows == other.rows && summary == other.summary;
}

PatternMatrix gen_patterns(Eigen::Index d, Eigen::Index M, PatternMode mode,
                           std::uint64_t seed) {
    if (d < 1 || M < 1) throw invalid_input("gen_patterns: dims must be >= 1");
    SplitMix64 rng(seed);
    Eigen::MatrixXd cols = gaussian_matrix(rng, d, M);
    if (mode == PatternMode::unit_sphere) {
        for (Eigen::Index c = 0; c < M; ++c) {
            const double n = cols.col(c).norm();
            if (n > 0.0) cols.col(c) /= n;
            else cols(0, c) = 1.0;
        }
    }
    return PatternMatrix(std::move(cols));
}

namespace {

nlohmann::json base_metadata(const ExperimentSpec& spec) {
    nlohmann::json meta;
    meta["artifact"] = "hopgag";
    meta["version"] = "1.0.0";
    meta["kind"] = to_string(spec.kind);
    meta["seed"] = spec.seed;
    meta["spec"] = spec.to_json();
    return meta;
}

} // namespace

Report run_noise_robustness(const ExperimentSpec& spec) {
    if (spec.kind != ExperimentKind::noise_robustness) {
        throw invalid_input("run_noise_robustness: spec.kind mismatch");
    }
    spec.validate();
    const double beta = spec.effective_beta();
    const PatternMatrix xi =
        gen_patterns(spec.d, spec.M, spec.pattern_mode, derive_seed(spec.seed, kPatterns));

    const int na = static_cast<int>(spec.alphas.size());
    const int ns = static_cast<int>(spec.sigmas.size());
    const int jobs = na * ns * spec.trials;
    std::vector<double> errors(jobs);

    parallel_for(jobs, [&](int idx) {
        const int t = idx % spec.trials;
        const int si = (idx / spec.trials) % ns;
        const int ai = idx / (spec.trials * ns);
        const Eigen::Index mu = t % spec.M;
        // Paired noise: the same draw serves every alpha at a given (sigma, trial).
        SplitMix64 rng(derive_seed(spec.seed, kNoise, si, t));
        const Eigen::VectorXd x =
            xi.pattern(mu) + spec.sigmas[si] * gaussian_vector(rng, spec.d);
        const HopfieldConfig cfg{Alpha(spec.alphas[ai]), beta};
        errors[idx] = (retrieve(x, xi, cfg) - xi.pattern(mu)).norm();
    });

    Report report;
    report.metadata = base_metadata(spec);
    report.columns = {"alpha", "sigma", "trial", "error"};
    report.rows.reserve(jobs);
    for (int idx = 0; idx < jobs; ++idx) {
        const int t = idx % spec.trials;
        const int si = (idx / spec.trials) % ns;
        const int ai = idx / (spec.trials * ns);
        report.rows.push_back({Cell{spec.alphas[ai]}, Cell{spec.sigmas[si]},
                               Cell{static_cast<std::int64_t>(t)}, Cell{errors[idx]}});
    }

    auto grid_summary = nlohmann::json::array();
    for (int ai = 0; ai < na; ++ai) {
        for (int si = 0; si < ns; ++si) {
            double mean = 0, mx = 0;
            for (int t = 0; t < spec.trials; ++t) {
                const double e = errors[(ai * ns + si) * spec.trials + t];
                mean += e;
                mx = std::max(mx, e);
            }
            mean /= spec.trials;
            grid_summary.push_back({{"alpha", spec.alphas[ai]},
                                    {"sigma", spec.sigmas[si]},
                                    {"mean_error", mean},
                                    {"max_error", mx}});
        }
    }
    // Growth-order diagnostic: R^2 of log(mean error) against sigma
    // (exponential candidate) and against log sigma (polynomial candidate).
    auto growth = nlohmann::json::array();
    for (int ai = 0; ai < na; ++ai) {
        std::vector<double> xs_lin, xs_log, ys;
        for (int si = 0; si < ns; ++si) {
            if (!(spec.sigmas[si] > 0.0)) continue;
            const double mean = grid_summary[ai * ns + si]["mean_error"].get<double>();
            xs_lin.push_back(spec.sigmas[si]);
            xs_log.push_back(safe_log(spec.sigmas[si]));
            ys.push_back(safe_log(mean));
        }
        growth.push_back({{"alpha", spec.alphas[ai]},
                          {"r2_exponential", linfit_r2(xs_lin, ys)},
                          {"r2_polynomial", linfit_r2(xs_log, ys)}});
    }
    report.summary = {{"grid", std::move(grid_summary)}, {"growth_fit", std::move(growth)}};
    return report;
}

namespace {

struct BenchRun {
    std::int64_t iterations = 0;
    std::int64_t converged = 0;
    double final_residual = 0.0;
};

BenchRun summarize(const IterationTrace& trace) {
    BenchRun r;
    r.iterations = trace.iterations_used;
    r.converged = trace.converged ? 1 : 0;
    r.final_residual = trace.residual_norms.empty() ? 0.0 : trace.residual_norms.back();
    return r;
}

const std::vector<std::string> kBenchMethods = {"picard", "km",      "aa1_fixed",
                                                "aa1_ls", "aa3_ls", "gag"};

} // namespace

Report run_convergence_bench(const ExperimentSpec& spec) {
    if (spec.kind != ExperimentKind::convergence_bench) {
        throw invalid_input("run_convergence_bench: spec.kind mismatch");
    }
    spec.validate();
    const double beta = spec.effective_beta();

    std::vector<std::string> testbeds = {"linear"};
    for (double a : spec.alphas) {
        testbeds.push_back("hopfield_a" + format_double(a));
    }
    const int nt = static_cast<int>(testbeds.size());
    const int nm = static_cast<int>(kBenchMethods.size());
    const int jobs = nt * nm * spec.trials;
    std::vector<BenchRun> runs(jobs);

    parallel_for(jobs, [&](int idx) {
        const int t = idx % spec.trials;
        const int mi = (idx / spec.trials) % nm;
        const int ti = idx / (spec.trials * nm);

        Operator strong, weak;
        Eigen::VectorXd x0;
        if (ti == 0) {
            const LinearTestbed bed =
                make_linear_contraction(spec.d, 0.95, derive_seed(spec.seed, kLinear, t));
            strong = bed.as_operator();
            weak = bed.weak_operator();
            x0 = bed.x0;
        } else {
            const Alpha alpha{spec.alphas[ti - 1]};
            const PatternMatrix xi = gen_patterns(
                spec.d, spec.M, spec.pattern_mode,
                derive_seed(spec.seed, kBenchPatterns, static_cast<std::uint64_t>(ti), t));
            SplitMix64 rng(derive_seed(spec.seed, kBenchQuery, static_cast<std::uint64_t>(ti), t));
            const Eigen::Index mu = t % spec.M;
            x0 = xi.pattern(mu) + 0.3 * gaussian_vector(rng, spec.d);
            strong = make_retrieval_operator(xi, HopfieldConfig{alpha, beta});
            weak = make_retrieval_operator(xi, HopfieldConfig{Alpha(1.0), beta});
        }

        const std::string& method = kBenchMethods[mi];
        IterationTrace trace;
        if (method == "picard") {
            trace = picard_iterate(strong, x0, spec.tol, spec.max_iter);
        } else if (method == "km") {
            trace = km_iterate(strong, x0, 0.5, spec.tol, spec.max_iter);
        } else if (method == "aa1_fixed") {
            trace = anderson_iterate(strong, x0, 1, 1.0, spec.tol, spec.max_iter);
        } else if (method == "aa1_ls") {
            trace = anderson_iterate(strong, x0, 1, std::nullopt, spec.tol, spec.max_iter);
        } else if (method == "aa3_ls") {
            trace = anderson_iterate(strong, x0, 3, std::nullopt, spec.tol, spec.max_iter);
        } else {
            GuidanceParams params = spec.guidance;
            try {
                trace = gag_iterate(strong, weak, x0, params, std::nullopt, spec.tol,
                                    spec.max_iter);
            } catch (const divergence_error& e) {
                trace = e.trace();
            }
        }
        runs[idx] = summarize(trace);
    });

    Report report;
    report.metadata = base_metadata(spec);
    report.columns = {"testbed", "method", "trial", "iterations", "converged",
                      "final_residual"};
    report.rows.reserve(jobs);
    for (int idx = 0; idx < jobs; ++idx) {
        const int t = idx % spec.trials;
        const int mi = (idx / spec.trials) % nm;
        const int ti = idx / (spec.trials * nm);
        report.rows.push_back({Cell{testbeds[ti]}, Cell{kBenchMethods[mi]},
                               Cell{static_cast<std::int64_t>(t)},
                               Cell{runs[idx].iterations}, Cell{runs[idx].converged},
                               Cell{runs[idx].final_residual}});
    }

    auto grid_summary = nlohmann::json::array();
    for (int ti = 0; ti < nt; ++ti) {
        for (int mi = 0; mi < nm; ++mi) {
            double mean_iters = 0;
            std::int64_t all_converged = 1;
            for (int t = 0; t < spec.trials; ++t) {
                const BenchRun& r = runs[(ti * nm + mi) * spec.trials + t];
                mean_iters += static_cast<double>(r.iterations);
                all_converged &= r.converged;
            }
            mean_iters /= spec.trials;
            grid_summary.push_back({{"testbed", testbeds[ti]},
                                    {"method", kBenchMethods[mi]},
                                    {"mean_iterations", mean_iters},
                                    {"all_converged", all_converged != 0}});
        }
    }
    report.summary = {{"grid", std::move(grid_summary)}};
    return report;
}

namespace {

struct SweepRun {
    double final_error = 0.0;
    std::int64_t u_monotone = 0;
    double max_guidance_norm = 0.0;
    std::int64_t converged = 0;
};

const std::vector<std::string> kSweepTestbeds = {"hopfield", "synthetic"};
const std::vector<double> kSweepZetas = {0.0, 1.0};

} // namespace

Report run_guidance_sweep(const ExperimentSpec& spec) {
    if (spec.kind != ExperimentKind::guidance_sweep) {
        throw invalid_input("run_guidance_sweep: spec.kind mismatch");
    }
    spec.validate();
    const double beta = spec.effective_beta();
    const int nl = static_cast<int>(spec.lambdas.size());
    const int nz = static_cast<int>(kSweepZetas.size());
    const int nt = static_cast<int>(kSweepTestbeds.size());
    const int jobs = nt * nl * nz * spec.trials;
    std::vector<SweepRun> runs(jobs);

    parallel_for(jobs, [&](int idx) {
        const int t = idx % spec.trials;
        const int zi = (idx / spec.trials) % nz;
        const int li = (idx / (spec.trials * nz)) % nl;
        const int ti = idx / (spec.trials * nz * nl);

        Operator strong, weak;
        Eigen::VectorXd x0, x_star;
        if (kSweepTestbeds[ti] == "synthetic") {
            SplitMix64 rng(derive_seed(spec.seed, kSweepSynthetic, t));
            Eigen::VectorXd g = gaussian_vector(rng, spec.d);
            g /= g.norm();
            Eigen::VectorXd w = gaussian_vector(rng, spec.d);
            w -= w.dot(g) * g;
            if (w.norm() == 0.0) w = 0.1 * g; // degenerate draw, measure zero
            else w *= 0.1 / w.norm();
            const SyntheticWeakContraction bed{0.9, 0.05, g, g, 1.0};
            strong = bed.sparse_operator();
            weak = bed.dense_operator();
            x_star = bed.fixed_point;
            x0 = x_star + w;
        } else {
            const PatternMatrix xi = gen_patterns(
                spec.d, spec.M, spec.pattern_mode,
                derive_seed(spec.seed, kSweepPatterns, t));
            SplitMix64 rng(derive_seed(spec.seed, kSweepQuery, t));
            const Eigen::Index mu = t % spec.M;
            strong = make_retrieval_operator(xi, HopfieldConfig{spec.guidance.alpha, beta});
            weak = make_retrieval_operator(xi, HopfieldConfig{Alpha(1.0), beta});
            // The sparse operator's own attractor serves as the reference point.
            const IterationTrace settle =
                picard_iterate(strong, xi.pattern(mu), 1e-12, 2000);
            x_star = settle.states.back();
            x0 = xi.pattern(mu) + 0.3 * gaussian_vector(rng, spec.d);
        }

        GuidanceParams params = spec.guidance;
        params.lambda = spec.lambdas[li];
        params.zeta = kSweepZetas[zi];
        IterationTrace trace;
        try {
            trace = gag_iterate(strong, weak, x0, params, x_star, spec.tol,
                                std::min(spec.max_iter, 400));
        } catch (const divergence_error& e) {
            trace = e.trace();
        }

        SweepRun r;
        r.converged = trace.converged ? 1 : 0;
        r.final_error = (trace.states.back() - x_star).norm();
        r.u_monotone = 1;
        for (std::size_t k = 0; k + 1 < trace.ortho_errors.size(); ++k) {
            if (trace.ortho_errors[k + 1] > trace.ortho_errors[k] + 1e-12) {
                r.u_monotone = 0;
                break;
            }
        }
        for (double gnorm : trace.guidance_norms) {
            r.max_guidance_norm = std::max(r.max_guidance_norm, gnorm);
        }
        runs[idx] = r;
    });

    Report report;
    report.metadata = base_metadata(spec);
    report.columns = {"testbed", "lambda",          "zeta",     "trial",
                      "final_error", "u_monotone", "max_guidance_norm", "converged"};
    report.rows.reserve(jobs);
    for (int idx = 0; idx < jobs; ++idx) {
        const int t = idx % spec.trials;
        const int zi = (idx / spec.trials) % nz;
        const int li = (idx / (spec.trials * nz)) % nl;
        const int ti = idx / (spec.trials * nz * nl);
        const SweepRun& r = runs[idx];
        report.rows.push_back({Cell{kSweepTestbeds[ti]}, Cell{spec.lambdas[li]},
                               Cell{kSweepZetas[zi]}, Cell{static_cast<std::int64_t>(t)},
                               Cell{r.final_error}, Cell{r.u_monotone},
                               Cell{r.max_guidance_norm}, Cell{r.converged}});
    }

    auto grid_summary = nlohmann::json::array();
    for (int ti = 0; ti < nt; ++ti) {
        for (int li = 0; li < nl; ++li) {
            for (int zi = 0; zi < nz; ++zi) {
                double mean_err = 0, max_gn = 0;
                std::int64_t all_mono = 1;
                for (int t = 0; t < spec.trials; ++t) {
                    const SweepRun& r = runs[((ti * nl + li) * nz + zi) * spec.trials + t];
                    mean_err += r.final_error;
                    max_gn = std::max(max_gn, r.max_guidance_norm);
                    all_mono &= r.u_monotone;
                }
                mean_err /= spec.trials;
                grid_summary.push_back({{"testbed", kSweepTestbeds[ti]},
                                        {"lambda", spec.lambdas[li]},
                                        {"zeta", kSweepZetas[zi]},
                                        {"mean_final_error", mean_err},
                                        {"max_guidance_norm", max_gn},
                                        {"all_u_monotone", all_mono != 0}});
            }
        }
    }
    report.summary = {{"grid", std::move(grid_summary)}};
    return report;
}

Report run_experiment(const ExperimentSpec& spec) {
    switch (spec.kind) {
        case ExperimentKind::noise_robustness: return run_noise_robustness(spec);
        case ExperimentKind::convergence_bench: return run_convergence_bench(spec);
        case ExperimentKind::guidance_sweep: return run_guidance_sweep(spec);
    }
    throw invalid_input("run_experiment: unknown kind");
}

std::string report_to_csv(const Report& report) {
    std::string out;
    for (std::size_t i = 0; i < report.columns.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(report.columns[i]);
    }
    out += '\n';
    for (const auto& row : report.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += cell_to_csv(row[i]);
        }
        out += '\n';
    }
    return out;
}

nlohmann::json report_to_json(const Report& report) {
    nlohmann::json j;
    j["metadata"] = report.metadata;
    j["columns"] = report.columns;
    j["summary"] = report.summary;
    auto rows = nlohmann::json::array();
    for (const auto& row : report.rows) {
        auto jr = nlohmann::json::array();
        for (const auto& cell : row) {
            if (std::holds_alternative<std::int64_t>(cell)) jr.push_back(std::get<std::int64_t>(cell));
            else if (std::holds_alternative<double>(cell)) jr.push_back(std::get<double>(cell));
            else jr.push_back(std::get<std::string>(cell));
        }
        rows.push_back(std::move(jr));
    }
    j["rows"] = std::move(rows);
    return j;
}

Report report_from_json(const nlohmann::json& j) {
    Report report;
    report.metadata = j.at("metadata");
    report.columns = j.at("columns").get<std::vector<std::string>>();
    report.summary = j.at("summary");
    for (const auto& jr : j.at("rows")) {
        std::vector<Cell> row;
        row.reserve(jr.size());
        for (const auto& cell : jr) {
            if (cell.is_number_integer()) row.emplace_back(cell.get<std::int64_t>());
            else if (cell.is_number_float()) row.emplace_back(cell.get<double>());
            else if (cell.is_string()) row.emplace_back(cell.get<std::string>());
            else throw invalid_input("report: unsupported cell type");
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

void write_report(const Report& report, const std::string& path, ReportFormat format) {
    try {
        if (format == ReportFormat::csv) {
            write_text_file(report_to_csv(report), path);
        } else {
            write_text_file(report_to_json(report).dump(2) + "\n", path);
        }
    } catch (const std::exception& e) {
        throw std::runtime_error("write_report to '" + path + "' failed: " + e.what());
    }
}

std::string trace_to_csv(const IterationTrace& trace) {
    const bool has_energy = !trace.energies.empty();
    const bool has_u = !trace.ortho_errors.empty();
    std::string out = "k,residual";
    if (has_energy) out += ",energy";
    if (has_u) out += ",u";
    out += '\n';
    for (std::size_t k = 0; k < trace.states.size(); ++k) {
        out += std::to_string(k);
        out += ',';
        if (k < trace.residual_norms.size()) out += format_double(trace.residual_norms[k]);
        if (has_energy) {
            out += ',';
            if (k < trace.energies.size()) out += format_double(trace.energies[k]);
        }
        if (has_u) {
            out += ',';
            if (k < trace.ortho_errors.size()) out += format_double(trace.ortho_errors[k]);
        }
        out += '\n';
    }
    return out;
}

Operator make_retrieval_operator(const PatternMatrix& xi, const HopfieldConfig& cfg) {
    return Operator{xi.dim(),
                    "hopfield_a" + format_double(cfg.alpha.value()),
                    [xi, cfg](const Eigen::VectorXd& x) { return retrieve(x, xi, cfg); }};
}

Operator LinearTestbed::as_operator() const {
    const Eigen::MatrixXd A_ = A;
    const Eigen::VectorXd b_ = b;
    return Operator{A.rows(), "linear",
                    [A_, b_](const Eigen::VectorXd& x) { return Eigen::VectorXd(A_ * x + b_); }};
}

Operator LinearTestbed::weak_operator() const {
    const Eigen::MatrixXd A_ = A;
    const Eigen::VectorXd b_ = b;
    return Operator{A.rows(), "linear_weak", [A_, b_](const Eigen::VectorXd& x) {
                        return Eigen::VectorXd(0.5 * x + 0.5 * (A_ * x + b_));
                    }};
}

Eigen::VectorXd LinearTestbed::fixed_point() const {
    return (Eigen::MatrixXd::Identity(A.rows(), A.cols()) - A).lu().solve(b);
}

LinearTestbed make_linear_contraction(Eigen::Index d, double rho, std::uint64_t seed) {
    if (d < 1) throw invalid_input("make_linear_contraction: d must be >= 1");
    if (!(rho > 0.0 && rho < 1.0)) {
        throw invalid_input("make_linear_contraction: rho must lie in (0, 1)");
    }
    SplitMix64 rng(seed);
    const Eigen::MatrixXd G = gaussian_matrix(rng, d, d);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    const Eigen::MatrixXd Q = qr.householderQ();

    Eigen::VectorXd spectrum(d);
    const double lo = 0.84 * rho;
    for (Eigen::Index i = 0; i < d; ++i) {
        spectrum[i] = (d == 1) ? rho
                               : lo + (rho - lo) * static_cast<double>(i) /
                                          static_cast<double>(d - 1);
    }
    LinearTestbed bed;
    bed.A = Q * spectrum.asDiagonal() * Q.transpose();
    bed.b = gaussian_vector(rng, d);
    bed.x0 = gaussian_vector(rng, d);
    return bed;
}

int thread_budget() {
    const char* env = std::getenv("HOPGAG_THREADS");
    if (env != nullptr && *env != '\0') {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

} // namespace hopgag
