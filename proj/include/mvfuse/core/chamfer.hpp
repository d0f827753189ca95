#pragma once

// Symmetric Chamfer distance between point clouds, unsquared form:
//   CD(A, B) = 0.5 * mean_a min_b |a - b| + 0.5 * mean_b min_a |a - b|

#include <Eigen/Dense>

#include "mvfuse/core/errors.hpp"
#include "mvfuse/core/kdtree.hpp"
#include "mvfuse/core/point_cloud.hpp"

namespace mvfuse {

template <typename Scalar>
Scalar mean_nearest_distance(const Eigen::Matrix<Scalar, Eigen::Dynamic, 3>& from,
                             const KdTree<Scalar>& to_tree) {
    Scalar sum = Scalar(0);
    for (Eigen::Index i = 0; i < from.rows(); ++i) {
        sum += to_tree.nearest(from.row(i).transpose()).distance;
    }
    return sum / Scalar(from.rows());
}

template <typename Scalar>
Scalar chamfer_distance(const PointCloud<Scalar>& a, const PointCloud<Scalar>& b) {
    if (a.size() == 0 || b.size() == 0) throw EmptyCloud("chamfer_distance");
    const KdTree<Scalar> tree_a(a.points);
    const KdTree<Scalar> tree_b(b.points);
    return Scalar(0.5) * mean_nearest_distance(a.points, tree_b) +
           Scalar(0.5) * mean_nearest_distance(b.points, tree_a);
}

}  // namespace mvfuse
