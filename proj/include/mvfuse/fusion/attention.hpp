#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "mvfuse/core/errors.hpp"

namespace mvfuse {

// Cross-attention summary for one view: one row per query point, one column
// per image patch. Rows are probability distributions.
template <typename Scalar>
struct AttentionMap {
    int view_id = 0;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> weights;  // n_points x n_patches

    Eigen::Index n_points() const { return weights.rows(); }
    Eigen::Index n_patches() const { return weights.cols(); }

    void validate() const {
        if (n_patches() < 2) throw ShapeMismatch("attention needs at least 2 patches");
        if ((weights.array() < Scalar(0)).any()) throw NonFinite("negative attention weight");
        for (Eigen::Index i = 0; i < weights.rows(); ++i) {
            if (std::abs(weights.row(i).sum() - Scalar(1)) > Scalar(1e-6)) {
                throw DegenerateRow("attention row " + std::to_string(i) + " not normalized");
            }
        }
    }
};

// Normalized Shannon entropy per query point, in [0, 1]. Rows are
// renormalized before the entropy is taken; 0 * log 0 counts as 0.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> attention_entropy(const AttentionMap<Scalar>& attn) {
    const auto& w = attn.weights;
    const Eigen::Index n = w.rows(), p = w.cols();
    if (p < 2) throw ShapeMismatch("attention needs at least 2 patches");
    const Scalar log_p = std::log(static_cast<Scalar>(p));
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> h(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar row_sum = w.row(i).sum();
        if (!(row_sum > Scalar(0))) throw DegenerateRow("attention row sums to zero");
        Scalar acc = Scalar(0);
        for (Eigen::Index j = 0; j < p; ++j) {
            const Scalar a = w(i, j) / row_sum;
            if (a > Scalar(0)) acc -= a * std::log(a);
        }
        h(i) = acc / log_p;
    }
    return h;
}

}  // namespace mvfuse
