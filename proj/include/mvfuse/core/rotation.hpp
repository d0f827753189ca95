#pragma once

// Axis-angle rotation helpers. Rotations are stored as rotation vectors
// (axis * angle, radians); all maps below are safe at and near zero angle.

#include <Eigen/Dense>
#include <cmath>

namespace mvfuse {

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> skew(const Eigen::Matrix<Scalar, 3, 1>& v) {
    Eigen::Matrix<Scalar, 3, 3> m;
    m << Scalar(0), -v.z(), v.y(),
         v.z(), Scalar(0), -v.x(),
         -v.y(), v.x(), Scalar(0);
    return m;
}

// Rodrigues formula, Taylor fallback below 1e-8 radians.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> rotation_matrix(const Eigen::Matrix<Scalar, 3, 1>& rotvec) {
    using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
    const Scalar theta = rotvec.norm();
    const Mat3 k = skew(rotvec);
    if (theta < Scalar(1e-8)) {
        return Mat3::Identity() + k + Scalar(0.5) * k * k;
    }
    const Scalar a = std::sin(theta) / theta;
    const Scalar b = (Scalar(1) - std::cos(theta)) / (theta * theta);
    return Mat3::Identity() + a * k + b * k * k;
}

// Inverse of rotation_matrix; returns the rotation vector with angle in [0, pi].
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> rotation_log(const Eigen::Matrix<Scalar, 3, 3>& r) {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    const Scalar tr = r.trace();
    const Scalar cos_theta = std::clamp((tr - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
    const Scalar theta = std::acos(cos_theta);
    if (theta < Scalar(1e-8)) {
        return Vec3(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)) / Scalar(2);
    }
    if (theta > Scalar(M_PI) - Scalar(1e-6)) {
        // Near pi the antisymmetric part vanishes; recover the axis from the
        // symmetrized matrix, which cancels the sin(theta) K term exactly.
        const Eigen::Matrix<Scalar, 3, 3> s =
            (r + r.transpose()) / Scalar(2) -
            cos_theta * Eigen::Matrix<Scalar, 3, 3>::Identity();  // = (1 - cos) a a^T
        int major = 0;
        s.diagonal().maxCoeff(&major);
        Vec3 axis = s.col(major);
        axis.normalize();
        const Vec3 w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
        // acos of the trace resolves the angle no finer than sqrt(eps) here;
        // the antisymmetric part pins it to machine precision instead.
        const Scalar sin_theta = std::min(w.norm() / Scalar(2), Scalar(1));
        const Scalar refined = Scalar(M_PI) - std::asin(sin_theta);
        // Fix the sign using the antisymmetric part when it is not fully zero.
        if (w.dot(axis) < Scalar(0)) axis = -axis;
        return axis * refined;
    }
    const Vec3 w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
    return w * (theta / (Scalar(2) * std::sin(theta)));
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> rotate(const Eigen::Matrix<Scalar, 3, 1>& rotvec,
                                   const Eigen::Matrix<Scalar, 3, 1>& p) {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    const Scalar theta = rotvec.norm();
    if (theta < Scalar(1e-8)) {
        const Vec3 c = rotvec.cross(p);
        return p + c + Scalar(0.5) * rotvec.cross(c);
    }
    const Vec3 axis = rotvec / theta;
    const Scalar c = std::cos(theta), s = std::sin(theta);
    return p * c + axis.cross(p) * s + axis * (axis.dot(p) * (Scalar(1) - c));
}

// Jacobian of r -> R(r) v in exponential coordinates (Gallego & Yezzi form),
// with the first-order limit -[v]x at r = 0. Column i is d(R v)/d r_i.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> rotate_jacobian(const Eigen::Matrix<Scalar, 3, 1>& rotvec,
                                            const Eigen::Matrix<Scalar, 3, 1>& v) {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
    const Scalar theta2 = rotvec.squaredNorm();
    const Mat3 r = rotation_matrix(rotvec);
    if (theta2 < Scalar(1e-12)) {
        return -skew(Vec3(r * v));
    }
    const Vec3 rv = r * v;
    Mat3 jac;
    const Mat3 i_minus_r = Mat3::Identity() - r;
    for (int i = 0; i < 3; ++i) {
        const Vec3 e = Vec3::Unit(i);
        const Vec3 w = rotvec(i) * rotvec + rotvec.cross(i_minus_r * e);
        jac.col(i) = skew(w) * rv / theta2;
    }
    return jac;
}

}  // namespace mvfuse
