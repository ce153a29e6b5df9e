#include "hopgag/attention.hpp"

#include <cmath>

namespace hopgag {

void AttentionBatch::validate() const {
    if (Q.rows() < 1 || K.rows() < 1 || V.rows() < 1) {
        throw invalid_input("AttentionBatch: empty matrix");
    }
    if (Q.cols() != K.cols()) {
        throw invalid_input("AttentionBatch: Q and K must share the inner dimension");
    }
    if (K.rows() != V.rows()) {
        throw invalid_input("AttentionBatch: K and V must share the row count");
    }
    if (!Q.allFinite() || !K.allFinite() || !V.allFinite()) {
        throw invalid_input("AttentionBatch: non-finite entry");
    }
}

AttentionOutput attention(const AttentionBatch& batch, Alpha alpha) {
    batch.validate();
    const double scale = 1.0 / std::sqrt(static_cast<double>(batch.Q.cols()));
    const Eigen::MatrixXd scores = scale * (batch.Q * batch.K.transpose());

    AttentionOutput out;
    out.rows.resize(batch.Q.rows(), batch.V.cols());
    out.weights.reserve(batch.Q.rows());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::VectorXd p = alpha_entmax(scores.row(i).transpose(), alpha, 1.0);
        out.rows.row(i) = p.transpose() * batch.V;
        out.weights.push_back(std::move(p));
    }
    return out;
}

AttentionOutput pladis_extrapolate(const AttentionBatch& batch, Alpha alpha,
                                   double lambda) {
    if (!std::isfinite(lambda)) {
        throw invalid_input("pladis_extrapolate: lambda must be finite");
    }
    AttentionOutput sparse = attention(batch, alpha);
    const AttentionOutput dense = attention(batch, Alpha(1.0));
    sparse.rows = sparse.rows + lambda * (sparse.rows - dense.rows);
    return sparse;
}

AttentionOutput gag_attention(const AttentionBatch& batch,
                              const GuidanceParams& params) {
    params.validate();
    AttentionOutput sparse = attention(batch, params.alpha);
    const AttentionOutput dense = attention(batch, Alpha(1.0));
    for (Eigen::Index i = 0; i < sparse.rows.rows(); ++i) {
        const Eigen::VectorXd s = sparse.rows.row(i).transpose();
        const Eigen::VectorXd r = s - dense.rows.row(i).transpose();
        auto [r_par, r_perp] = decompose_residual(r, s);
        const Eigen::VectorXd rt =
            (params.zeta == 1.0) ? r : Eigen::VectorXd(r_par + params.zeta * r_perp);
        const double n = rt.norm();
        const double factor = (n == 0.0) ? 1.0 : std::min(1.0, params.eta / n);
        sparse.rows.row(i) = (s + params.lambda * factor * rt).transpose();
    }
    return sparse;
}

} // namespace hopgag
