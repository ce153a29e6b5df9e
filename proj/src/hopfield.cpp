#include "hopgag/hopfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace hopgag {

namespace {

void check_dims(const Eigen::VectorXd& x, const PatternMatrix& xi, const char* what) {
    if (x.size() != xi.dim()) {
        throw invalid_input(std::string(what) + ": query dimension " +
                            std::to_string(x.size()) + " does not match pattern dimension " +
                            std::to_string(xi.dim()));
    }
    if (!x.allFinite()) {
        throw invalid_input(std::string(what) + ": non-finite query");
    }
}

void check_cfg(const HopfieldConfig& cfg, const char* what) {
    if (!(cfg.beta > 0.0) || !std::isfinite(cfg.beta)) {
        throw invalid_input(std::string(what) + ": beta must be positive");
    }
}

} // namespace

PatternMatrix::PatternMatrix(Eigen::MatrixXd columns) : columns_(std::move(columns)) {
    if (columns_.rows() < 1 || columns_.cols() < 1) {
        throw invalid_input("PatternMatrix: need at least one pattern of dimension >= 1");
    }
    if (!columns_.allFinite()) {
        throw invalid_input("PatternMatrix: non-finite entry");
    }
    max_norm_ = columns_.colwise().norm().maxCoeff();
}

Eigen::VectorXd PatternMatrix::pattern(Eigen::Index mu) const {
    if (mu < 0 || mu >= count()) {
        throw std::out_of_range("PatternMatrix::pattern: index out of range");
    }
    return columns_.col(mu);
}

double HopfieldConfig::default_beta(Eigen::Index d) {
    return 1.0 / std::sqrt(static_cast<double>(d));
}

HopfieldConfig HopfieldConfig::with_default_beta(Alpha alpha, Eigen::Index d) {
    return HopfieldConfig{alpha, default_beta(d)};
}

Eigen::VectorXd retrieve(const Eigen::VectorXd& x, const PatternMatrix& xi,
                         const HopfieldConfig& cfg) {
    check_dims(x, xi, "retrieve");
    check_cfg(cfg, "retrieve");
    const Eigen::VectorXd scores = xi.columns().transpose() * x;
    const Eigen::VectorXd p = alpha_entmax(scores, cfg.alpha, cfg.beta);
    return xi.columns() * p;
}

double energy(const Eigen::VectorXd& x, const PatternMatrix& xi,
              const HopfieldConfig& cfg) {
    check_dims(x, xi, "energy");
    check_cfg(cfg, "energy");
    const Eigen::VectorXd scores = xi.columns().transpose() * x;
    const double conj = cfg.alpha.is_softmax()
                            ? log_sum_exp(cfg.beta, scores)
                            : tsallis_conjugate(scores, cfg.alpha, cfg.beta);
    return -conj + 0.5 * x.squaredNorm();
}

double pattern_separation(const Eigen::VectorXd& x, const PatternMatrix& xi,
                          Eigen::Index mu) {
    check_dims(x, xi, "pattern_separation");
    if (mu < 0 || mu >= xi.count()) {
        throw std::out_of_range("pattern_separation: index out of range");
    }
    if (xi.count() == 1) {
        return std::numeric_limits<double>::infinity();
    }
    const Eigen::VectorXd scores = xi.columns().transpose() * x;
    double best_other = -std::numeric_limits<double>::infinity();
    for (Eigen::Index nu = 0; nu < scores.size(); ++nu) {
        if (nu != mu) best_other = std::max(best_other, scores[nu]);
    }
    return scores[mu] - best_other;
}

ErrorBoundReport retrieval_error_bound(const Eigen::VectorXd& x,
                                       const PatternMatrix& xi, Eigen::Index mu,
                                       const HopfieldConfig& cfg) {
    check_dims(x, xi, "retrieval_error_bound");
    check_cfg(cfg, "retrieval_error_bound");
    if (mu < 0 || mu >= xi.count()) {
        throw std::out_of_range("retrieval_error_bound: index out of range");
    }

    const double m = xi.max_pattern_norm();
    const double M = static_cast<double>(xi.count());
    const double alpha = cfg.alpha.value();
    const double beta = cfg.beta;

    ErrorBoundReport rep;
    rep.separation = pattern_separation(x, xi, mu);
    rep.measured_error = (retrieve(x, xi, cfg) - xi.pattern(mu)).norm();
    rep.kappa = threshold_and_support(xi.columns().transpose() * x, cfg.alpha, beta).kappa;

    const Eigen::VectorXd scores = xi.columns().transpose() * x;
    std::vector<double> sorted(scores.data(), scores.data() + scores.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    const double top = sorted.front();

    if (cfg.alpha.is_softmax()) {
        rep.bound = 2.0 * m * (M - 1.0) * std::exp(-beta * rep.separation);
    } else if (cfg.alpha.is_sparsemax()) {
        rep.bound = m + m * beta *
                        (rep.kappa * (top - sorted[rep.kappa - 1]) + 1.0 / beta);
    } else {
        const double a = alpha - 1.0;
        double bracket;
        if (rep.kappa < xi.count()) {
            bracket = a * beta * (top - sorted[rep.kappa]);
        } else {
            // Full support: the (M+1)-th sorted score is extended by
            // [beta z]_(M+1) := [beta z]_(M) - M^(1-alpha)/(alpha-1) on the
            // entmax input scale.
            bracket = a * beta * (top - sorted[xi.count() - 1]) + std::pow(M, -a);
        }
        rep.bound = m + m * rep.kappa * std::pow(bracket, 1.0 / a);
    }
    return rep;
}

} // namespace hopgag
