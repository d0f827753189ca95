#pragma once

// Per-point convex fusion weights over views. Columns (one per latent point)
// sum to one. Entropy weights favor views whose attention is concentrated;
// visibility weights favor views with a clear line of sight; the combined
// form blends the two.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "mvfuse/core/errors.hpp"
#include "mvfuse/vis/visibility.hpp"

namespace mvfuse {

enum class WeightStrategy { Uniform, Entropy, Visibility, Combined };

template <typename Scalar>
struct FusionConfig {
    Scalar alpha = Scalar(30);  // entropy sharpness
    Scalar beta = Scalar(30);   // visibility sharpness
    Scalar gamma = Scalar(0.5); // blend toward visibility
    WeightStrategy strategy = WeightStrategy::Combined;
    bool stage1 = true;  // adaptive weighting enabled per stage
    bool stage2 = true;
};

template <typename Scalar>
struct FusionWeights {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> w;  // n_views x n_points

    Eigen::Index n_views() const { return w.rows(); }
    Eigen::Index n_points() const { return w.cols(); }

    void validate() const {
        if ((w.array() < Scalar(0)).any()) throw NonFinite("negative fusion weight");
        for (Eigen::Index l = 0; l < w.cols(); ++l) {
            if (std::abs(w.col(l).sum() - Scalar(1)) > Scalar(1e-9)) {
                throw DegenerateRow("fusion weights for point " + std::to_string(l) +
                                    " do not sum to 1");
            }
        }
    }
};

template <typename Scalar>
FusionWeights<Scalar> uniform_weights(Eigen::Index n_views, Eigen::Index n_points) {
    if (n_views < 1) throw NoViews("uniform_weights");
    FusionWeights<Scalar> out;
    out.w.setConstant(n_views, n_points, Scalar(1) / static_cast<Scalar>(n_views));
    return out;
}

// Softmax over views of -alpha * H, computed with a max shift per point.
// entropies is n_views x n_points.
template <typename Scalar>
FusionWeights<Scalar> entropy_weights(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& entropies, Scalar alpha) {
    if (entropies.rows() < 1) throw NoViews("entropy_weights");
    if (!entropies.allFinite()) throw NonFinite("entropy matrix");
    FusionWeights<Scalar> out;
    out.w.resize(entropies.rows(), entropies.cols());
    for (Eigen::Index l = 0; l < entropies.cols(); ++l) {
        const auto col = (-alpha * entropies.col(l)).array();
        const Scalar shift = col.maxCoeff();
        const auto e = (col - shift).exp();
        out.w.col(l) = (e / e.sum()).matrix();
    }
    return out;
}

// Softmax over views of beta * V with binary V.
template <typename Scalar>
FusionWeights<Scalar> visibility_weights(const VisibilityMatrix& vis, Scalar beta) {
    if (vis.n_views() < 1) throw NoViews("visibility_weights");
    FusionWeights<Scalar> out;
    out.w.resize(vis.n_views(), vis.n_points());
    for (Eigen::Index l = 0; l < vis.n_points(); ++l) {
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> logits(vis.n_views());
        for (Eigen::Index i = 0; i < vis.n_views(); ++i) {
            logits(i) = beta * static_cast<Scalar>(vis.seen(i, l));
        }
        const Scalar shift = logits.maxCoeff();
        const auto e = (logits.array() - shift).exp();
        out.w.col(l) = (e / e.sum()).matrix();
    }
    return out;
}

// (1 - gamma) * entropy + gamma * visibility, still convex per point.
template <typename Scalar>
FusionWeights<Scalar> combined_weights(const FusionWeights<Scalar>& entropy,
                                       const FusionWeights<Scalar>& visibility, Scalar gamma) {
    if (entropy.w.rows() != visibility.w.rows() || entropy.w.cols() != visibility.w.cols()) {
        throw ShapeMismatch("combined_weights operand shapes");
    }
    if (gamma < Scalar(0) || gamma > Scalar(1)) throw NonFinite("gamma outside [0, 1]");
    FusionWeights<Scalar> out;
    out.w = (Scalar(1) - gamma) * entropy.w + gamma * visibility.w;
    return out;
}

// Convex combination of per-view velocity tensors. velocities[i] is
// n_points x dim for view i; the result is n_points x dim.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> fuse_velocities(
    const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& velocities,
    const FusionWeights<Scalar>& weights) {
    if (velocities.empty()) throw NoViews("fuse_velocities");
    if (static_cast<Eigen::Index>(velocities.size()) != weights.n_views()) {
        throw ShapeMismatch("velocity count vs weight rows");
    }
    const Eigen::Index n = velocities[0].rows();
    const Eigen::Index d = velocities[0].cols();
    if (n != weights.n_points()) throw ShapeMismatch("velocity points vs weight columns");
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> fused =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, d);
    for (std::size_t i = 0; i < velocities.size(); ++i) {
        if (velocities[i].rows() != n || velocities[i].cols() != d) {
            throw ShapeMismatch("velocity tensor " + std::to_string(i));
        }
        fused.noalias() +=
            weights.w.row(static_cast<Eigen::Index>(i)).transpose().asDiagonal() * velocities[i];
    }
    return fused;
}

}  // namespace mvfuse
