#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hopgag/errors.hpp"
#include "hopgag/probability.hpp"

namespace hopgag {

/// A deterministic self-map on R^d with a descriptive label.
struct Operator {
    Eigen::Index dim = 0;
    std::string label;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> map;

    Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
};

/// Parameters of the geometry-aware guidance update.
///   lambda: guidance scale (>= 0)
///   zeta:   orthogonal suppression in [0, 1] (0 keeps only the parallel part)
///   eta:    guidance-norm ceiling (> 0, +infinity disables rescaling)
///   alpha:  sparsity of the strong operator
struct GuidanceParams {
    double lambda = 10.0;
    double zeta = 0.0;
    double eta = 15.0;
    Alpha alpha{2.0};

    static constexpr double unbounded_eta() {
        return std::numeric_limits<double>::infinity();
    }

    void validate() const;
};

/// Record of a fixed-point run.
///
/// states[k] is the k-th iterate (states[0] = x0). residual_norms[k] is the
/// operator residual ||F(x_k) - x_k|| evaluated at states[k]. When a run
/// converges with a nonzero residual, one last update (the plain function
/// output, or the guidance map output for gag_iterate) is applied and
/// counted; that final state carries no residual entry. energies and
/// ortho_errors, when recorded, have one entry per state. Per-step records
/// (anderson weights, fallback flags, guidance norms) have one entry per
/// applied step.
struct IterationTrace {
    std::vector<Eigen::VectorXd> states;
    std::vector<double> residual_norms;
    std::vector<double> energies;
    std::vector<double> ortho_errors;
    std::vector<double> guidance_norms;
    std::vector<Eigen::VectorXd> anderson_weights;
    std::vector<std::uint8_t> anderson_fallback;
    bool converged = false;
    int iterations_used = 0;
};

/// Raised when an iteration produces a non-finite state. Carries the trace
/// accumulated up to the failure.
class divergence_error : public std::runtime_error {
public:
    divergence_error(const std::string& what, IterationTrace trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}

    const IterationTrace& trace() const noexcept { return trace_; }

private:
    IterationTrace trace_;
};

using EnergyFn = std::function<double(const Eigen::VectorXd&)>;

/// Picard iteration x_{k+1} = F(x_k) until ||F(x) - x|| <= tol or max_iter.
IterationTrace picard_iterate(const Operator& F, const Eigen::VectorXd& x0,
                              double tol, int max_iter,
                              const EnergyFn& energy_fn = {});

/// Krasnoselskii-Mann iteration x_{k+1} = (1-relax) x_k + relax F(x_k) with
/// relax in (0, 1]. relax = 1 reduces to Picard.
IterationTrace km_iterate(const Operator& F, const Eigen::VectorXd& x0,
                          double relax, double tol, int max_iter,
                          const EnergyFn& energy_fn = {});

/// Anderson acceleration with window m >= 1 on residuals g(x) = F(x) - x.
///
/// The first m steps are plain Picard to build history. If fixed_omega is
/// given and m = 1, applies x_{k+1} = F(x_k) + omega (F(x_k) - F(x_{k-1}))
/// verbatim; otherwise solves min || sum w_i g_i || s.t. sum w_i = 1 over the
/// last m+1 residuals (scale-relative Tikhonov damping on the normal
/// equations) and combines the function outputs with the same weights.
/// Singular or non-finite solves fall back to a Picard step, flagged in the
/// trace. Every step's combination weights are recorded (a plain Picard or
/// seed step has the trivial weight vector [1]).
IterationTrace anderson_iterate(const Operator& F, const Eigen::VectorXd& x0,
                                int memory, std::optional<double> fixed_omega,
                                double tol, int max_iter,
                                const EnergyFn& energy_fn = {});

/// Splits r into a component collinear with `direction` and its orthogonal
/// complement; r_par + r_perp == r exactly. A direction with norm < 1e-12 is
/// treated as zero: returns (0, r).
std::pair<Eigen::VectorXd, Eigen::VectorXd>
decompose_residual(const Eigen::VectorXd& r, const Eigen::VectorXd& direction);

/// One geometry-aware guidance step:
///   s = T_sparse(x),  r = s - T_dense(x)
///   r~ = r_par + zeta r_perp           (decomposed against s)
///   out = s + lambda * min(1, eta/||r~||) * r~
/// The added guidance term has norm <= lambda * eta.
Eigen::VectorXd gag_step(const Operator& T_sparse, const Operator& T_dense,
                         const Eigen::VectorXd& x, const GuidanceParams& params);

/// Norm of the component of (x - x_star) orthogonal to `direction`.
/// A zero direction yields ||x - x_star||.
double orthogonal_error(const Eigen::VectorXd& x, const Eigen::VectorXd& x_star,
                        const Eigen::VectorXd& direction);

/// Iterates gag_step. When x_star is given, records the orthogonal error
/// u_t of every state against direction T_sparse(x_t).
IterationTrace gag_iterate(const Operator& T_sparse, const Operator& T_dense,
                           const Eigen::VectorXd& x0, const GuidanceParams& params,
                           const std::optional<Eigen::VectorXd>& x_star,
                           double tol, int max_iter,
                           const EnergyFn& energy_fn = {});

/// Constructed operator pair satisfying the orthogonal weak-contraction
/// inequality u_{k+1} <= c u_k - phi(u_k), phi(u) = phi_slope * u, by design:
/// both operators share the fixed point, pass the deviation component along
/// guidance_direction through unchanged, and scale the orthogonal deviation
/// by (c - phi_slope) (sparse) respectively dense_orth_factor (dense).
/// dense_orth_factor > 1 injects an expanding orthogonal response, the
/// contrast case for zeta = 1.
struct SyntheticWeakContraction {
    double c = 0.9;
    double phi_slope = 0.05;
    Eigen::VectorXd fixed_point;
    Eigen::VectorXd guidance_direction;
    double dense_orth_factor = 1.0;

    SyntheticWeakContraction(double c_, double phi_slope_,
                             Eigen::VectorXd fixed_point_,
                             Eigen::VectorXd guidance_direction_,
                             double dense_orth_factor_ = 1.0);

    Operator sparse_operator() const;
    Operator dense_operator() const;
};

} // namespace hopgag
