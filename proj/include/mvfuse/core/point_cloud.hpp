#pragma once

#include <Eigen/Dense>

#include "mvfuse/core/errors.hpp"
#include "mvfuse/core/similarity.hpp"

namespace mvfuse {

// Points are rows. Colors, when present, are RGB in [0, 1], one row per point.
template <typename Scalar>
struct PointCloud {
    using MatX3 = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;

    MatX3 points;
    MatX3 colors;  // 0 rows when absent

    Eigen::Index size() const { return points.rows(); }
    bool has_colors() const { return colors.rows() == points.rows() && points.rows() > 0; }

    void validate() const {
        if (!points.allFinite()) throw NonFinite("point cloud contains non-finite values");
        if (colors.rows() != 0 && colors.rows() != points.rows()) {
            throw ShapeMismatch("color rows do not match point rows");
        }
    }
};

template <typename Scalar>
PointCloud<Scalar> apply_transform(const SimilarityTransform<Scalar>& xf,
                                   const PointCloud<Scalar>& cloud) {
    PointCloud<Scalar> out;
    const auto r = xf.rotation_mat();
    out.points = (xf.scale * (cloud.points * r.transpose())).rowwise() + xf.translation.transpose();
    out.colors = cloud.colors;
    return out;
}

using PointCloudd = PointCloud<double>;

}  // namespace mvfuse
