#pragma once

#include <Eigen/Dense>

#include "hopgag/probability.hpp"

namespace hopgag {

/// Stored-pattern matrix: M pattern columns of dimension d. Immutable after
/// construction; the maximum pattern norm m = max_nu ||xi_nu|| is cached.
class PatternMatrix {
public:
    explicit PatternMatrix(Eigen::MatrixXd columns);

    const Eigen::MatrixXd& columns() const noexcept { return columns_; }
    Eigen::Index dim() const noexcept { return columns_.rows(); }
    Eigen::Index count() const noexcept { return columns_.cols(); }
    double max_pattern_norm() const noexcept { return max_norm_; }

    /// Pattern column mu (0-based). Throws std::out_of_range.
    Eigen::VectorXd pattern(Eigen::Index mu) const;

private:
    Eigen::MatrixXd columns_;
    double max_norm_;
};

/// Sparsity and inverse temperature of the retrieval dynamics.
struct HopfieldConfig {
    Alpha alpha{1.0};
    double beta = 1.0;

    /// 1/sqrt(d), the convention tying retrieval to scaled attention.
    static double default_beta(Eigen::Index d);

    static HopfieldConfig with_default_beta(Alpha alpha, Eigen::Index d);
};

/// One retrieval-error bound evaluation.
struct ErrorBoundReport {
    double bound = 0.0;
    double measured_error = 0.0;
    int kappa = 0;
    double separation = 0.0;
};

/// One-step retrieval: Xi * alpha_entmax(beta * Xi^T x). The output is a
/// convex combination of the pattern columns.
Eigen::VectorXd retrieve(const Eigen::VectorXd& x, const PatternMatrix& xi,
                         const HopfieldConfig& cfg);

/// Hopfield energy. alpha = 1 uses -lse(beta, Xi^T x) + ||x||^2 / 2; alpha > 1
/// replaces lse by the Tsallis conjugate.
double energy(const Eigen::VectorXd& x, const PatternMatrix& xi,
              const HopfieldConfig& cfg);

/// Inner-product gap <xi_mu, x> - max_{nu != mu} <xi_nu, x>. May be negative.
/// M = 1 returns +infinity (no competing pattern).
double pattern_separation(const Eigen::VectorXd& x, const PatternMatrix& xi,
                          Eigen::Index mu);

/// Retrieval-error bound for target pattern mu, with the measured one-step
/// error alongside. Cases:
///   alpha = 1:      2 m (M-1) exp(-beta * separation)
///   1 < alpha < 2:  m + m kappa [(alpha-1) beta (max_nu <xi_nu,x> - [Xi^T x]_(kappa+1))]^(1/(alpha-1))
///   alpha = 2:      m + m beta [kappa (max_nu <xi_nu,x> - [Xi^T x]_(kappa)) + 1/beta]
/// where [.]_(k) is the k-th largest score and kappa the entmax support size.
/// When the support is full the (kappa+1)-th score is extended by the
/// convention [beta Xi^T x]_(M+1) := [beta Xi^T x]_(M) - M^(1-alpha)/(alpha-1),
/// applied on the entmax input scale so the bound stays valid for all beta.
ErrorBoundReport retrieval_error_bound(const Eigen::VectorXd& x,
                                       const PatternMatrix& xi, Eigen::Index mu,
                                       const HopfieldConfig& cfg);

} // namespace hopgag
