#include "hopgag/fixed_point.hpp"

#include <cmath>
#include <deque>

namespace hopgag {

namespace {

void check_tol_iters(double tol, int max_iter, const char* what) {
    if (!(tol > 0.0)) {
        throw invalid_input(std::string(what) + ": tol must be positive");
    }
    if (max_iter < 1) {
        throw invalid_input(std::string(what) + ": max_iter must be >= 1");
    }
}

[[noreturn]] void diverged(const char* what, IterationTrace trace) {
    throw divergence_error(std::string(what) + ": non-finite state encountered",
                           std::move(trace));
}

} // namespace

Eigen::VectorXd Operator::operator()(const Eigen::VectorXd& x) const {
    if (x.size() != dim) {
        throw invalid_input("Operator '" + label + "': expected dimension " +
                            std::to_string(dim) + ", got " + std::to_string(x.size()));
    }
    return map(x);
}

void GuidanceParams::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw invalid_input("GuidanceParams: lambda must be finite and >= 0");
    }
    if (!(zeta >= 0.0 && zeta <= 1.0)) {
        throw invalid_input("GuidanceParams: zeta must lie in [0, 1]");
    }
    if (!(eta > 0.0)) {
        throw invalid_input("GuidanceParams: eta must be positive");
    }
}

IterationTrace picard_iterate(const Operator& F, const Eigen::VectorXd& x0,
                              double tol, int max_iter, const EnergyFn& energy_fn) {
    check_tol_iters(tol, max_iter, "picard_iterate");
    IterationTrace trace;
    Eigen::VectorXd x = x0;
    trace.states.push_back(x);
    for (int k = 0;; ++k) {
        if (energy_fn) trace.energies.push_back(energy_fn(x));
        Eigen::VectorXd fx = F(x);
        if (!fx.allFinite()) diverged("picard_iterate", std::move(trace));
        const double r = (fx - x).norm();
        trace.residual_norms.push_back(r);
        if (r <= tol) {
            trace.converged = true;
            if (r > 0.0) {
                trace.states.push_back(fx);
                if (energy_fn) trace.energies.push_back(energy_fn(fx));
                trace.iterations_used = k + 1;
            } else {
                trace.iterations_used = k;
            }
            return trace;
        }
        if (k == max_iter) {
            trace.iterations_used = k;
            return trace;
        }
        x = std::move(fx);
        trace.states.push_back(x);
    }
}

IterationTrace km_iterate(const Operator& F, const Eigen::VectorXd& x0,
                          double relax, double tol, int max_iter,
                          const EnergyFn& energy_fn) {
    check_tol_iters(tol, max_iter, "km_iterate");
    if (!(relax > 0.0 && relax <= 1.0)) {
        throw invalid_input("km_iterate: relax must lie in (0, 1]");
    }
    IterationTrace trace;
    Eigen::VectorXd x = x0;
    trace.states.push_back(x);
    for (int k = 0;; ++k) {
        if (energy_fn) trace.energies.push_back(energy_fn(x));
        Eigen::VectorXd fx = F(x);
        if (!fx.allFinite()) diverged("km_iterate", std::move(trace));
        const double r = (fx - x).norm();
        trace.residual_norms.push_back(r);
        if (r <= tol) {
            // The operator residual met the tolerance; finish with the plain
            // function output rather than a relaxed blend.
            trace.converged = true;
            if (r > 0.0) {
                trace.states.push_back(fx);
                if (energy_fn) trace.energies.push_back(energy_fn(fx));
                trace.iterations_used = k + 1;
            } else {
                trace.iterations_used = k;
            }
            return trace;
        }
        if (k == max_iter) {
            trace.iterations_used = k;
            return trace;
        }
        x = (1.0 - relax) * x + relax * fx;
        trace.states.push_back(x);
    }
}

namespace {

struct AndersonStep {
    Eigen::VectorXd next;
    Eigen::VectorXd weights;
    bool fallback = false;
};

// Constrained least squares min ||G w|| s.t. sum w = 1 via the KKT system of
// the damped normal equations. The damping is scaled by the mean residual
// magnitude in the window: an absolute 1e-10 I would swamp the system once
// residuals drop below ~1e-5 and stall the acceleration.
AndersonStep anderson_combine(const std::deque<Eigen::VectorXd>& outputs,
                              const std::deque<Eigen::VectorXd>& residuals) {
    const int n = static_cast<int>(outputs.size());
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            A(i, j) = A(j, i) = residuals[i].dot(residuals[j]);
        }
    }
    const double scale = A.diagonal().mean();
    if (!(scale > 0.0) || !A.allFinite()) {
        return {outputs.back(), Eigen::VectorXd::Ones(1), true};
    }
    A.diagonal().array() += 1e-10 * scale;

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + 1, n + 1);
    kkt.topLeftCorner(n, n) = A;
    kkt.topRightCorner(n, 1).setOnes();
    kkt.bottomLeftCorner(1, n).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs[n] = 1.0;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) {
        return {outputs.back(), Eigen::VectorXd::Ones(1), true};
    }
    Eigen::VectorXd sol = lu.solve(rhs);
    Eigen::VectorXd w = sol.head(n);
    if (!w.allFinite()) {
        return {outputs.back(), Eigen::VectorXd::Ones(1), true};
    }
    // Re-impose the constraint exactly against solver round-off.
    w[n - 1] += 1.0 - w.sum();

    Eigen::VectorXd next = Eigen::VectorXd::Zero(outputs.front().size());
    for (int i = 0; i < n; ++i) next += w[i] * outputs[i];
    return {std::move(next), std::move(w), false};
}

} // namespace

IterationTrace anderson_iterate(const Operator& F, const Eigen::VectorXd& x0,
                                int memory, std::optional<double> fixed_omega,
                                double tol, int max_iter, const EnergyFn& energy_fn) {
    check_tol_iters(tol, max_iter, "anderson_iterate");
    if (memory < 1) {
        throw invalid_input("anderson_iterate: memory must be >= 1");
    }
    if (fixed_omega && memory != 1) {
        throw invalid_input("anderson_iterate: fixed_omega requires memory = 1");
    }

    IterationTrace trace;
    Eigen::VectorXd x = x0;
    trace.states.push_back(x);
    std::deque<Eigen::VectorXd> outputs;   // F(x_i), oldest first
    std::deque<Eigen::VectorXd> residuals; // g(x_i) = F(x_i) - x_i

    for (int k = 0;; ++k) {
        if (energy_fn) trace.energies.push_back(energy_fn(x));
        Eigen::VectorXd fx = F(x);
        if (!fx.allFinite()) diverged("anderson_iterate", std::move(trace));
        Eigen::VectorXd g = fx - x;
        const double r = g.norm();
        trace.residual_norms.push_back(r);

        if (r <= tol) {
            // Converged: finish with the plain function output. An
            // extrapolated step at the fixed point would only overshoot.
            trace.converged = true;
            if (r > 0.0) {
                trace.states.push_back(fx);
                if (energy_fn) trace.energies.push_back(energy_fn(fx));
                trace.anderson_weights.push_back(Eigen::VectorXd::Ones(1));
                trace.anderson_fallback.push_back(0);
                trace.iterations_used = k + 1;
            } else {
                trace.iterations_used = k;
            }
            return trace;
        }

        outputs.push_back(fx);
        residuals.push_back(std::move(g));
        while (static_cast<int>(outputs.size()) > memory + 1) {
            outputs.pop_front();
            residuals.pop_front();
        }

        AndersonStep step;
        if (static_cast<int>(outputs.size()) < memory + 1) {
            step = {fx, Eigen::VectorXd::Ones(1), false}; // Picard seed
        } else if (fixed_omega) {
            const double w = *fixed_omega;
            step.next = outputs[1] + w * (outputs[1] - outputs[0]);
            step.weights = Eigen::VectorXd(2);
            step.weights << -w, 1.0 + w;
            step.fallback = false;
        } else {
            step = anderson_combine(outputs, residuals);
        }
        if (!step.next.allFinite()) diverged("anderson_iterate", std::move(trace));
        if (k == max_iter) {
            trace.iterations_used = k;
            return trace;
        }
        x = step.next;
        trace.states.push_back(x);
        trace.anderson_weights.push_back(std::move(step.weights));
        trace.anderson_fallback.push_back(step.fallback ? 1 : 0);
    }
}

std::pair<Eigen::VectorXd, Eigen::VectorXd>
decompose_residual(const Eigen::VectorXd& r, const Eigen::VectorXd& direction) {
    if (r.size() != direction.size()) {
        throw invalid_input("decompose_residual: dimension mismatch");
    }
    const double dn = direction.norm();
    if (dn < 1e-12) {
        return {Eigen::VectorXd::Zero(r.size()), r};
    }
    Eigen::VectorXd r_par = (r.dot(direction) / (dn * dn)) * direction;
    Eigen::VectorXd r_perp = r - r_par;
    return {std::move(r_par), std::move(r_perp)};
}

namespace {

struct GagStep {
    Eigen::VectorXd next;
    Eigen::VectorXd sparse_out;
    double guidance_norm = 0.0;
};

GagStep gag_step_detail(const Operator& T_sparse, const Operator& T_dense,
                        const Eigen::VectorXd& x, const GuidanceParams& params) {
    if (T_sparse.dim != T_dense.dim) {
        throw invalid_input("gag_step: operators disagree on dimension");
    }
    params.validate();
    GagStep out;
    out.sparse_out = T_sparse(x);
    const Eigen::VectorXd r = out.sparse_out - T_dense(x);
    auto [r_par, r_perp] = decompose_residual(r, out.sparse_out);
    // zeta = 1 keeps the whole residual; using r directly preserves the
    // identity with plain extrapolation bit for bit.
    Eigen::VectorXd rt = (params.zeta == 1.0) ? r : Eigen::VectorXd(r_par + params.zeta * r_perp);
    const double n = rt.norm();
    const double factor = (n == 0.0) ? 1.0 : std::min(1.0, params.eta / n);
    out.guidance_norm = params.lambda * factor * n;
    out.next = out.sparse_out + params.lambda * factor * rt;
    return out;
}

} // namespace

Eigen::VectorXd gag_step(const Operator& T_sparse, const Operator& T_dense,
                         const Eigen::VectorXd& x, const GuidanceParams& params) {
    return gag_step_detail(T_sparse, T_dense, x, params).next;
}

double orthogonal_error(const Eigen::VectorXd& x, const Eigen::VectorXd& x_star,
                        const Eigen::VectorXd& direction) {
    if (x.size() != x_star.size() || x.size() != direction.size()) {
        throw invalid_input("orthogonal_error: dimension mismatch");
    }
    const Eigen::VectorXd v = x - x_star;
    const double dn = direction.norm();
    if (dn < 1e-12) {
        return v.norm();
    }
    return (v - (v.dot(direction) / (dn * dn)) * direction).norm();
}

IterationTrace gag_iterate(const Operator& T_sparse, const Operator& T_dense,
                           const Eigen::VectorXd& x0, const GuidanceParams& params,
                           const std::optional<Eigen::VectorXd>& x_star,
                           double tol, int max_iter, const EnergyFn& energy_fn) {
    check_tol_iters(tol, max_iter, "gag_iterate");
    IterationTrace trace;
    Eigen::VectorXd x = x0;
    trace.states.push_back(x);
    for (int k = 0;; ++k) {
        if (energy_fn) trace.energies.push_back(energy_fn(x));
        GagStep step = gag_step_detail(T_sparse, T_dense, x, params);
        if (!step.next.allFinite()) diverged("gag_iterate", std::move(trace));
        if (x_star) {
            trace.ortho_errors.push_back(orthogonal_error(x, *x_star, step.sparse_out));
        }
        const double r = (step.next - x).norm();
        trace.residual_norms.push_back(r);
        if (r <= tol) {
            trace.converged = true;
            if (r > 0.0) {
                trace.states.push_back(step.next);
                if (energy_fn) trace.energies.push_back(energy_fn(step.next));
                if (x_star) {
                    trace.ortho_errors.push_back(
                        orthogonal_error(step.next, *x_star, T_sparse(step.next)));
                }
                trace.guidance_norms.push_back(step.guidance_norm);
                trace.iterations_used = k + 1;
            } else {
                trace.iterations_used = k;
            }
            return trace;
        }
        if (k == max_iter) {
            trace.iterations_used = k;
            return trace;
        }
        x = std::move(step.next);
        trace.states.push_back(x);
        trace.guidance_norms.push_back(step.guidance_norm);
    }
}

SyntheticWeakContraction::SyntheticWeakContraction(double c_, double phi_slope_,
                                                   Eigen::VectorXd fixed_point_,
                                                   Eigen::VectorXd guidance_direction_,
                                                   double dense_orth_factor_)
    : c(c_), phi_slope(phi_slope_), fixed_point(std::move(fixed_point_)),
      guidance_direction(std::move(guidance_direction_)),
      dense_orth_factor(dense_orth_factor_) {
    if (!(c >= 0.0 && c < 1.0)) {
        throw invalid_input("SyntheticWeakContraction: c must lie in [0, 1)");
    }
    if (!(phi_slope > 0.0) || !(c + phi_slope < 1.0)) {
        throw invalid_input("SyntheticWeakContraction: need phi_slope > 0 and c + phi_slope < 1");
    }
    if (fixed_point.size() != guidance_direction.size()) {
        throw invalid_input("SyntheticWeakContraction: dimension mismatch");
    }
    const double gn = guidance_direction.norm();
    if (!(gn > 0.0)) {
        throw invalid_input("SyntheticWeakContraction: zero guidance direction");
    }
    guidance_direction /= gn;
}

namespace {

Operator deviation_operator(const Eigen::VectorXd& x_star, const Eigen::VectorXd& g,
                            double orth_factor, std::string label) {
    return Operator{
        x_star.size(), std::move(label),
        [x_star, g, orth_factor](const Eigen::VectorXd& x) {
            const Eigen::VectorXd dev = x - x_star;
            const double along = dev.dot(g);
            return Eigen::VectorXd(x_star + along * g +
                                   orth_factor * (dev - along * g));
        }};
}

} // namespace

Operator SyntheticWeakContraction::sparse_operator() const {
    return deviation_operator(fixed_point, guidance_direction, c - phi_slope,
                              "synthetic-sparse");
}

Operator SyntheticWeakContraction::dense_operator() const {
    return deviation_operator(fixed_point, guidance_direction, dense_orth_factor,
                              "synthetic-dense");
}

} // namespace hopgag
