#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "hopgag/attention.hpp"
#include "hopgag/experiment.hpp"
#include "hopgag/fixed_point.hpp"
#include "hopgag/hopfield.hpp"
#include "hopgag/matrix_io.hpp"
#include "hopgag/probability.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalidInput = 1;
constexpr int kExitNumerical = 2;

double parse_eta(const std::string& s) {
    if (s == "inf" || s == "infinity") {
        return hopgag::GuidanceParams::unbounded_eta();
    }
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw hopgag::invalid_input("--eta: expected a number or 'inf'");
    }
}

void print_vector(const Eigen::VectorXd& v) {
    std::cout << hopgag::vector_to_json(v).dump() << "\n";
}

hopgag::AttentionBatch read_batch(const std::string& path) {
    const nlohmann::json j = hopgag::read_json_file(path);
    if (!j.is_object() || !j.contains("Q") || !j.contains("K") || !j.contains("V")) {
        throw hopgag::invalid_input("batch file must contain matrices Q, K, V");
    }
    for (const auto& [key, value] : j.items()) {
        if (key != "Q" && key != "K" && key != "V") {
            throw hopgag::invalid_input("batch file: unknown key '" + key + "'");
        }
    }
    hopgag::AttentionBatch batch;
    batch.Q = hopgag::matrix_from_json(j.at("Q"));
    batch.K = hopgag::matrix_from_json(j.at("K"));
    batch.V = hopgag::matrix_from_json(j.at("V"));
    batch.validate();
    return batch;
}

struct IterateSpec {
    hopgag::Operator strong;
    hopgag::Operator weak; // gag only
    Eigen::VectorXd x0;
    double tol = 1e-8;
    int max_iter = 500;
    double relax = 0.5;
    int memory = 1;
    std::optional<double> omega;
    hopgag::GuidanceParams guidance;
    hopgag::EnergyFn energy_fn;
};

IterateSpec read_iterate_spec(const std::string& path) {
    const nlohmann::json j = hopgag::read_json_file(path);
    if (!j.is_object() || !j.contains("operator") || !j.contains("x0")) {
        throw hopgag::invalid_input("iterate spec: requires 'operator' and 'x0'");
    }
    IterateSpec spec;
    for (const auto& [key, value] : j.items()) {
        if (key == "operator" || key == "x0") continue;
        else if (key == "tol") spec.tol = value.get<double>();
        else if (key == "max_iter") spec.max_iter = value.get<int>();
        else if (key == "relax") spec.relax = value.get<double>();
        else if (key == "memory") spec.memory = value.get<int>();
        else if (key == "omega") spec.omega = value.get<double>();
        else if (key == "guidance") {
            // reuse the experiment-spec guidance parsing via a wrapper spec
            nlohmann::json wrapper = {{"kind", "guidance_sweep"}, {"guidance", value}};
            spec.guidance = hopgag::ExperimentSpec::from_json(wrapper).guidance;
        } else {
            throw hopgag::invalid_input("iterate spec: unknown key '" + key + "'");
        }
    }
    spec.x0 = hopgag::vector_from_json(j.at("x0"));

    const nlohmann::json& op = j.at("operator");
    const std::string type = op.value("type", "");
    if (type == "hopfield") {
        for (const auto& [key, value] : op.items()) {
            if (key != "type" && key != "patterns" && key != "alpha" &&
                key != "beta" && key != "dense_alpha") {
                throw hopgag::invalid_input("iterate spec operator: unknown key '" + key + "'");
            }
        }
        const hopgag::PatternMatrix xi(hopgag::matrix_from_json(op.at("patterns")));
        const hopgag::Alpha alpha(op.value("alpha", 2.0));
        const double beta = op.value("beta", hopgag::HopfieldConfig::default_beta(xi.dim()));
        const hopgag::HopfieldConfig cfg{alpha, beta};
        spec.strong = hopgag::make_retrieval_operator(xi, cfg);
        const hopgag::HopfieldConfig dense_cfg{hopgag::Alpha(op.value("dense_alpha", 1.0)), beta};
        spec.weak = hopgag::make_retrieval_operator(xi, dense_cfg);
        spec.energy_fn = [xi, cfg](const Eigen::VectorXd& x) {
            return hopgag::energy(x, xi, cfg);
        };
    } else if (type == "linear") {
        for (const auto& [key, value] : op.items()) {
            if (key != "type" && key != "A" && key != "b") {
                throw hopgag::invalid_input("iterate spec operator: unknown key '" + key + "'");
            }
        }
        const Eigen::MatrixXd A = hopgag::matrix_from_json(op.at("A"));
        const Eigen::VectorXd b = op.contains("b")
                                      ? hopgag::vector_from_json(op.at("b"))
                                      : Eigen::VectorXd::Zero(A.rows());
        if (A.rows() != A.cols() || b.size() != A.rows()) {
            throw hopgag::invalid_input("iterate spec: linear operator shape mismatch");
        }
        spec.strong = hopgag::Operator{
            A.rows(), "linear",
            [A, b](const Eigen::VectorXd& x) { return Eigen::VectorXd(A * x + b); }};
        spec.weak = hopgag::Operator{
            A.rows(), "linear_weak", [A, b](const Eigen::VectorXd& x) {
                return Eigen::VectorXd(0.5 * x + 0.5 * (A * x + b));
            }};
    } else {
        throw hopgag::invalid_input("iterate spec: operator type must be 'hopfield' or 'linear'");
    }
    if (spec.x0.size() != spec.strong.dim) {
        throw hopgag::invalid_input("iterate spec: x0 dimension mismatch");
    }
    return spec;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse Hopfield retrieval, fixed-point acceleration and "
                 "geometry-aware attention guidance"};
    app.require_subcommand(1);

    // entmax
    auto* entmax_cmd = app.add_subcommand("entmax", "Map logits to the simplex");
    double en_alpha = 1.5, en_beta = 1.0;
    std::string en_logits;
    entmax_cmd->add_option("--alpha", en_alpha, "Sparsity in [1,2]")->required();
    entmax_cmd->add_option("--beta", en_beta, "Inverse temperature (> 0)");
    entmax_cmd->add_option("--logits", en_logits, "JSON vector file")->required();

    // retrieve
    auto* retr_cmd = app.add_subcommand("retrieve", "One-step Hopfield retrieval");
    double rt_alpha = 2.0;
    std::string rt_patterns, rt_query, rt_beta_str = "";
    retr_cmd->add_option("--patterns", rt_patterns, "JSON matrix file (d x M)")->required();
    retr_cmd->add_option("--query", rt_query, "JSON vector file")->required();
    retr_cmd->add_option("--alpha", rt_alpha, "Sparsity in [1,2]")->required();
    retr_cmd->add_option("--beta", rt_beta_str, "Inverse temperature (default 1/sqrt(d))");

    // attend
    auto* att_cmd = app.add_subcommand("attend", "Batched attention");
    double at_alpha = 2.0, at_zeta = 0.0;
    std::string at_batch, at_eta = "15";
    std::optional<double> at_lambda;
    att_cmd->add_option("--batch", at_batch, "JSON file with matrices Q, K, V")->required();
    att_cmd->add_option("--alpha", at_alpha, "Sparsity in [1,2]")->required();
    att_cmd->add_option("--lambda", at_lambda, "Guidance scale; omit for plain attention");
    att_cmd->add_option("--zeta", at_zeta, "Orthogonal suppression in [0,1]");
    att_cmd->add_option("--eta", at_eta, "Guidance-norm ceiling, number or 'inf'");

    // iterate
    auto* it_cmd = app.add_subcommand("iterate", "Run a fixed-point driver");
    std::string it_method, it_spec;
    it_cmd->add_option("--method", it_method, "picard | km | aa | gag")
        ->required()
        ->check(CLI::IsMember({"picard", "km", "aa", "gag"}));
    it_cmd->add_option("--spec", it_spec, "JSON iteration spec file")->required();

    // experiment
    auto* ex_cmd = app.add_subcommand("experiment", "Run a reproducible experiment");
    std::string ex_spec, ex_out, ex_format = "csv";
    ex_cmd->add_option("--spec", ex_spec, "JSON experiment spec file")->required();
    ex_cmd->add_option("--out", ex_out, "Output path")->required();
    ex_cmd->add_option("--format", ex_format, "csv | json")
        ->check(CLI::IsMember({"csv", "json"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (entmax_cmd->parsed()) {
            const Eigen::VectorXd z = hopgag::read_vector_file(en_logits);
            const Eigen::VectorXd p = hopgag::alpha_entmax(z, hopgag::Alpha(en_alpha), en_beta);
            const hopgag::ThresholdReport rep =
                hopgag::threshold_and_support(z, hopgag::Alpha(en_alpha), en_beta);
            print_vector(p);
            std::cerr << "tau=" << rep.tau << " kappa=" << rep.kappa << "\n";
        } else if (retr_cmd->parsed()) {
            const hopgag::PatternMatrix xi(hopgag::read_matrix_file(rt_patterns));
            const Eigen::VectorXd x = hopgag::read_vector_file(rt_query);
            const double beta = rt_beta_str.empty()
                                    ? hopgag::HopfieldConfig::default_beta(xi.dim())
                                    : std::stod(rt_beta_str);
            const hopgag::HopfieldConfig cfg{hopgag::Alpha(rt_alpha), beta};
            print_vector(hopgag::retrieve(x, xi, cfg));
            std::cerr << "energy=" << hopgag::energy(x, xi, cfg) << "\n";
        } else if (att_cmd->parsed()) {
            const hopgag::AttentionBatch batch = read_batch(at_batch);
            hopgag::AttentionOutput out;
            if (at_lambda) {
                hopgag::GuidanceParams params;
                params.lambda = *at_lambda;
                params.zeta = at_zeta;
                params.eta = parse_eta(at_eta);
                params.alpha = hopgag::Alpha(at_alpha);
                out = hopgag::gag_attention(batch, params);
            } else {
                out = hopgag::attention(batch, hopgag::Alpha(at_alpha));
            }
            std::cout << hopgag::matrix_to_json(out.rows).dump() << "\n";
        } else if (it_cmd->parsed()) {
            const IterateSpec spec = read_iterate_spec(it_spec);
            hopgag::IterationTrace trace;
            if (it_method == "picard") {
                trace = hopgag::picard_iterate(spec.strong, spec.x0, spec.tol,
                                               spec.max_iter, spec.energy_fn);
            } else if (it_method == "km") {
                trace = hopgag::km_iterate(spec.strong, spec.x0, spec.relax, spec.tol,
                                           spec.max_iter, spec.energy_fn);
            } else if (it_method == "aa") {
                trace = hopgag::anderson_iterate(spec.strong, spec.x0, spec.memory,
                                                 spec.omega, spec.tol, spec.max_iter,
                                                 spec.energy_fn);
            } else {
                trace = hopgag::gag_iterate(spec.strong, spec.weak, spec.x0,
                                            spec.guidance, std::nullopt, spec.tol,
                                            spec.max_iter, spec.energy_fn);
            }
            std::cout << hopgag::trace_to_csv(trace);
            std::cerr << "converged=" << (trace.converged ? "true" : "false")
                      << " iterations=" << trace.iterations_used << "\n";
            if (!trace.converged) return kExitNumerical;
        } else if (ex_cmd->parsed()) {
            const hopgag::ExperimentSpec spec =
                hopgag::ExperimentSpec::from_json(hopgag::read_json_file(ex_spec));
            const hopgag::Report report = hopgag::run_experiment(spec);
            const hopgag::ReportFormat fmt =
                ex_format == "json" ? hopgag::ReportFormat::json : hopgag::ReportFormat::csv;
            hopgag::write_report(report, ex_out, fmt);
            std::cerr << "wrote " << report.rows.size() << " rows to " << ex_out << "\n";
        }
    } catch (const hopgag::divergence_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        std::cout << hopgag::trace_to_csv(e.trace());
        return kExitNumerical;
    } catch (const hopgag::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what()
                  << " (last width " << e.last_width() << ")\n";
        return kExitNumerical;
    } catch (const hopgag::invalid_input& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const std::domain_error& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const std::out_of_range& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidInput;
    }
    return kExitOk;
}
