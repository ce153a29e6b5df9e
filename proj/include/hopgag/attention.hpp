#pragma once

#include <Eigen/Dense>

#include <vector>

#include "hopgag/fixed_point.hpp"
#include "hopgag/probability.hpp"

namespace hopgag {

/// Multi-query attention batch. Q is N x d, K is M x d, V is M x d_v; rows of
/// Q are independent query states, rows of K/V the stored key/value pairs.
struct AttentionBatch {
    Eigen::MatrixXd Q;
    Eigen::MatrixXd K;
    Eigen::MatrixXd V;

    void validate() const;
    Eigen::Index queries() const noexcept { return Q.rows(); }
    Eigen::Index keys() const noexcept { return K.rows(); }
};

/// Attention result: output rows plus per-row attention weights.
/// For extrapolated or guided variants the weights are those of the sparse
/// (strong) kernel; the rows themselves need not be convex combinations.
struct AttentionOutput {
    Eigen::MatrixXd rows;                    // N x d_v
    std::vector<Eigen::VectorXd> weights;    // N simplex vectors
};

/// Scaled attention: row i = alpha_entmax(row_i(Q K^T) / sqrt(d)) * V.
/// alpha = 1 is softmax attention.
AttentionOutput attention(const AttentionBatch& batch, Alpha alpha);

/// Attention-space extrapolation contrasting the sparse (strong) kernel with
/// the dense one: sparse + lambda * (sparse - dense), row-wise.
AttentionOutput pladis_extrapolate(const AttentionBatch& batch, Alpha alpha,
                                   double lambda);

/// Row-wise geometry-aware guidance: each query row is treated as one state,
/// its sparse/dense residual decomposed against the sparse row, filtered by
/// zeta, capped by eta and scaled by lambda, exactly as gag_step.
AttentionOutput gag_attention(const AttentionBatch& batch,
                              const GuidanceParams& params);

} // namespace hopgag
