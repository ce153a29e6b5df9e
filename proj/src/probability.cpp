#include "hopgag/probability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace hopgag {

namespace {

void require_finite(const Eigen::VectorXd& z, const char* what) {
    if (z.size() < 1) {
        throw invalid_input(std::string(what) + ": empty vector");
    }
    if (!z.allFinite()) {
        throw invalid_input(std::string(what) + ": non-finite entry");
    }
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw invalid_input(std::string(what) + ": must be positive and finite");
    }
}

struct EntmaxResult {
    Eigen::VectorXd p;
    double tau; // on the (alpha-1)*beta*z scale
};

// Exact sparsemax (alpha = 2) via descending sort.
EntmaxResult sparsemax_exact(const Eigen::VectorXd& s) {
    const Eigen::Index n = s.size();
    std::vector<double> sorted(s.data(), s.data() + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());

    double cumsum = 0.0;
    double tau = sorted[0] - 1.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        cumsum += sorted[k];
        const double cand = (cumsum - 1.0) / static_cast<double>(k + 1);
        if (sorted[k] > cand) {
            tau = cand;
        } else {
            break;
        }
    }
    Eigen::VectorXd p = (s.array() - tau).cwiseMax(0.0);
    return {p, tau};
}

// Exact 1.5-entmax: per-prefix quadratic on the transformed scores s/2.
EntmaxResult entmax_half_exact(const Eigen::VectorXd& s) {
    const Eigen::Index n = s.size();
    std::vector<double> t(n);
    for (Eigen::Index i = 0; i < n; ++i) t[i] = 0.5 * s[i];
    std::vector<double> sorted(t);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());

    // For support size k the threshold solves sum_{j<=k} (t_(j) - tau)^2 = 1,
    // whose admissible root is mean_k - sqrt((1 - ssq_k)/k) with ssq_k the
    // within-prefix sum of squared deviations. The largest k with
    // tau_k <= t_(k) identifies the true segment.
    double cumsum = 0.0, cumsq = 0.0;
    double tau = sorted[0] - 1.0;
    for (Eigen::Index k = 1; k <= n; ++k) {
        cumsum += sorted[k - 1];
        cumsq += sorted[k - 1] * sorted[k - 1];
        const double mean = cumsum / static_cast<double>(k);
        const double ssq = std::max(cumsq - cumsum * mean, 0.0);
        const double delta = (1.0 - ssq) / static_cast<double>(k);
        if (delta < 0.0) continue;
        const double cand = mean - std::sqrt(delta);
        if (cand <= sorted[k - 1]) {
            tau = cand;
        }
    }
    Eigen::VectorXd p(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = t[i] - tau;
        p[i] = d > 0.0 ? d * d : 0.0;
    }
    return {p, tau};
}

// Bisection on tau over [(alpha-1) max(s) - 1, (alpha-1) max(s)]. The sum of
// reconstructed probabilities is >= 1 at the lower end and 0 at the upper
// end, so the bracket always contains the root.
EntmaxResult entmax_bisect(const Eigen::VectorXd& s, double alpha, double tol) {
    const double a = alpha - 1.0;
    const double inv_a = 1.0 / a;
    const Eigen::VectorXd ts = a * s.array();
    const double top = ts.maxCoeff();

    const auto mass = [&](double tau) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < ts.size(); ++i) {
            const double d = ts[i] - tau;
            if (d > 0.0) sum += std::pow(d, inv_a);
        }
        return sum;
    };

    double lo = top - 1.0;
    double hi = top;
    constexpr int kMaxIter = 200;
    int it = 0;
    for (; it < kMaxIter && (hi - lo) > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mass(mid) >= 1.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if ((hi - lo) > tol) {
        throw numerical_error("alpha_entmax: bisection did not reach tolerance", hi - lo);
    }
    const double tau = 0.5 * (lo + hi);
    Eigen::VectorXd p(ts.size());
    for (Eigen::Index i = 0; i < ts.size(); ++i) {
        const double d = ts[i] - tau;
        p[i] = d > 0.0 ? std::pow(d, inv_a) : 0.0;
    }
    return {p, tau};
}

EntmaxResult entmax_dispatch(const Eigen::VectorXd& z, Alpha alpha, double beta,
                             double tol) {
    require_finite(z, "alpha_entmax");
    require_positive(beta, "alpha_entmax: beta");
    require_positive(tol, "alpha_entmax: tol");

    const Eigen::VectorXd s = beta * z.array();
    if (alpha.is_softmax()) {
        return {softmax(z, beta), log_sum_exp(1.0, s)};
    }
    EntmaxResult r;
    if (alpha.is_sparsemax()) {
        r = sparsemax_exact(s);
    } else if (alpha.value() == 1.5) {
        r = entmax_half_exact(s);
    } else {
        r = entmax_bisect(s, alpha.value(), tol);
    }
    r.p /= r.p.sum();
    return r;
}

} // namespace

Alpha::Alpha(double value) : value_(value) {
    if (!(value >= 1.0 && value <= 2.0)) {
        throw std::domain_error("Alpha: value must lie in [1, 2]");
    }
}

double log_sum_exp(double beta, const Eigen::VectorXd& z) {
    require_finite(z, "log_sum_exp");
    require_positive(beta, "log_sum_exp: beta");
    const double m = z.maxCoeff();
    const double sum = ((z.array() - m) * beta).exp().sum();
    return m + std::log(sum) / beta;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z, double beta) {
    require_finite(z, "softmax");
    require_positive(beta, "softmax: beta");
    const double m = z.maxCoeff();
    Eigen::VectorXd p = ((z.array() - m) * beta).exp();
    p /= p.sum();
    return p;
}

Eigen::VectorXd alpha_entmax(const Eigen::VectorXd& z, Alpha alpha, double beta,
                             double tol) {
    return entmax_dispatch(z, alpha, beta, tol).p;
}

Eigen::VectorXd alpha_entmax_bisection(const Eigen::VectorXd& z, Alpha alpha,
                                       double beta, double tol) {
    require_finite(z, "alpha_entmax_bisection");
    require_positive(beta, "alpha_entmax_bisection: beta");
    require_positive(tol, "alpha_entmax_bisection: tol");
    if (alpha.is_softmax()) {
        throw std::domain_error("alpha_entmax_bisection: alpha must be > 1");
    }
    EntmaxResult r = entmax_bisect(beta * z.array(), alpha.value(), tol);
    r.p /= r.p.sum();
    return r.p;
}

ThresholdReport threshold_and_support(const Eigen::VectorXd& z, Alpha alpha,
                                      double beta, double tol) {
    const EntmaxResult r = entmax_dispatch(z, alpha, beta, tol);
    ThresholdReport rep;
    rep.tau = r.tau;
    rep.kappa = static_cast<int>((r.p.array() > 0.0).count());
    return rep;
}

double tsallis_entropy(const Eigen::VectorXd& p, Alpha alpha) {
    require_finite(p, "tsallis_entropy");
    if ((p.array() < -1e-12).any() || std::abs(p.sum() - 1.0) > 1e-9) {
        throw invalid_input("tsallis_entropy: p is not on the simplex");
    }
    const double a = alpha.value();
    if (alpha.is_softmax()) {
        double h = 0.0;
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
        }
        return h;
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double pi = std::max(p[i], 0.0);
        acc += pi - std::pow(pi, a);
    }
    return acc / (a * (a - 1.0));
}

double tsallis_conjugate(const Eigen::VectorXd& z, Alpha alpha, double beta) {
    const Eigen::VectorXd p = alpha_entmax(z, alpha, beta);
    return p.dot(z) + tsallis_entropy(p, alpha) / beta;
}

} // namespace hopgag
