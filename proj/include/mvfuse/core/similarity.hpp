#pragma once

// Similarity transform p -> scale * R(rotation) * p + translation.

#include <Eigen/Dense>
#include <cmath>

#include "mvfuse/core/errors.hpp"
#include "mvfuse/core/rotation.hpp"

namespace mvfuse {

template <typename Scalar>
struct SimilarityTransform {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

    Scalar scale = Scalar(1);
    Vec3 rotation = Vec3::Zero();  // axis-angle
    Vec3 translation = Vec3::Zero();

    SimilarityTransform() = default;
    SimilarityTransform(Scalar s, const Vec3& r, const Vec3& t)
        : scale(s), rotation(r), translation(t) {
        if (!(scale > Scalar(0))) throw NonFinite("similarity scale must be positive");
    }

    Mat3 rotation_mat() const { return rotation_matrix(rotation); }

    Vec3 apply(const Vec3& p) const { return scale * rotate(rotation, p) + translation; }

    void validate() const {
        if (!(scale > Scalar(0)) || !std::isfinite(scale)) throw NonFinite("similarity scale");
        if (!rotation.allFinite() || !translation.allFinite()) throw NonFinite("similarity params");
        if (rotation.norm() >= Scalar(2) * Scalar(EIGEN_PI)) throw NonFinite("rotation vector not reduced");
    }

    // Equivalent transform with the rotation angle wrapped into [0, pi].
    SimilarityTransform canonicalized() const {
        SimilarityTransform out = *this;
        const Scalar theta = rotation.norm();
        if (theta == Scalar(0)) return out;
        const Vec3 axis = rotation / theta;
        constexpr Scalar two_pi = Scalar(2) * Scalar(EIGEN_PI);
        Scalar wrapped = std::fmod(theta, two_pi);
        if (wrapped < Scalar(0)) wrapped += two_pi;
        if (wrapped > Scalar(EIGEN_PI)) {
            out.rotation = -axis * (two_pi - wrapped);
        } else {
            out.rotation = axis * wrapped;
        }
        return out;
    }

    SimilarityTransform inverse() const {
        SimilarityTransform inv;
        inv.scale = Scalar(1) / scale;
        inv.rotation = -rotation;
        inv.translation = -rotate<Scalar>(-rotation, translation) / scale;
        return inv;
    }

    // this after other: (this * other)(p) = this(other(p))
    SimilarityTransform compose(const SimilarityTransform& other) const {
        SimilarityTransform out;
        out.scale = scale * other.scale;
        out.rotation = rotation_log<Scalar>(rotation_mat() * other.rotation_mat());
        out.translation = apply(other.translation);
        return out;
    }

    // 7-vector layout (log_scale, rotation, translation) used by latent states.
    Eigen::Matrix<Scalar, 7, 1> to_params() const {
        Eigen::Matrix<Scalar, 7, 1> p;
        p(0) = std::log(scale);
        p.template segment<3>(1) = rotation;
        p.template segment<3>(4) = translation;
        return p;
    }

    static SimilarityTransform from_params(const Eigen::Matrix<Scalar, 7, 1>& p) {
        SimilarityTransform out;
        out.scale = std::exp(p(0));
        out.rotation = p.template segment<3>(1);
        out.translation = p.template segment<3>(4);
        return out;
    }
};

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> apply_transform(const SimilarityTransform<Scalar>& xf,
                                            const Eigen::Matrix<Scalar, 3, 1>& p) {
    return xf.apply(p);
}

using SimilarityTransformd = SimilarityTransform<double>;

}  // namespace mvfuse
