#pragma once

#include <Eigen/Dense>

#include "hopgag/errors.hpp"

namespace hopgag {

/// Sparsity parameter of the entmax family. 1 = softmax, 2 = sparsemax.
class Alpha {
public:
    explicit Alpha(double value);

    double value() const noexcept { return value_; }
    bool is_softmax() const noexcept { return value_ == 1.0; }
    bool is_sparsemax() const noexcept { return value_ == 2.0; }

private:
    double value_;
};

/// Threshold tau and support size kappa of an entmax mapping.
///
/// tau lives on the transformed-score scale: the probabilities satisfy
///   p_i = [(alpha-1) * beta * z_i - tau]_+^(1/(alpha-1))        (alpha > 1)
/// For alpha = 1 the family degenerates to softmax; by the alpha -> 1 limit
/// convention the reconstruction is p_i = exp(beta * z_i - tau), i.e.
/// tau = log sum exp(beta * z), and the support is always full.
struct ThresholdReport {
    double tau = 0.0;
    int kappa = 0;
};

/// lse(beta, z) = log(sum_i exp(beta * z_i)) / beta, computed max-shifted.
double log_sum_exp(double beta, const Eigen::VectorXd& z);

/// Stable softmax of beta * z. Full support.
Eigen::VectorXd softmax(const Eigen::VectorXd& z, double beta);

/// alpha-entmax of beta * z: the maximizer of <p, beta*z> + H_alpha(p) over
/// the probability simplex, H_alpha being the Tsallis entropy.
///
/// Dispatch: alpha = 1 softmax; alpha = 2 exact sort-based sparsemax;
/// alpha = 1.5 exact sorted-segment solution; otherwise bisection on the
/// threshold to tolerance `tol`.
Eigen::VectorXd alpha_entmax(const Eigen::VectorXd& z, Alpha alpha, double beta,
                             double tol = 1e-10);

/// Generic iterative route for any alpha in (1, 2]: bisection on the
/// threshold. Exposed so exact closed forms can be cross-checked against it.
/// Throws numerical_error (carrying the last bracket width) if the bracket
/// does not shrink below `tol` within 200 iterations.
Eigen::VectorXd alpha_entmax_bisection(const Eigen::VectorXd& z, Alpha alpha,
                                       double beta, double tol = 1e-10);

/// Threshold and support-size diagnostics, consistent with alpha_entmax.
ThresholdReport threshold_and_support(const Eigen::VectorXd& z, Alpha alpha,
                                      double beta, double tol = 1e-10);

/// Tsallis entropy H_alpha(p).
///   alpha != 1:  sum_i (p_i - p_i^alpha) / (alpha * (alpha - 1))
///   alpha  = 1:  -sum_i p_i log p_i   (continuous limit; 0 log 0 := 0)
double tsallis_entropy(const Eigen::VectorXd& p, Alpha alpha);

/// Temperature-scaled convex conjugate of the Tsallis negentropy:
///   (1/beta) * [ <p*, beta*z> + H_alpha(p*) ],  p* = alpha_entmax(z).
/// Reduces to log_sum_exp(beta, z) at alpha = 1.
double tsallis_conjugate(const Eigen::VectorXd& z, Alpha alpha, double beta);

} // namespace hopgag
