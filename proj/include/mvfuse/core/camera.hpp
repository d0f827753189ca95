#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "mvfuse/core/errors.hpp"

namespace mvfuse {

// Pinhole camera. world_from_cam is stored inverted: x_cam = R * x_world + t.
template <typename Scalar>
struct Camera {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
    Scalar fx = Scalar(1), fy = Scalar(1);
    Scalar cx = Scalar(0), cy = Scalar(0);
    int width = 0, height = 0;

    // R must be a proper rotation; tolerance 1e-9 on orthonormality.
    void validate() const {
        const Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
        if (err.template lpNorm<Eigen::Infinity>() > Scalar(1e-9) ||
            std::abs(rotation.determinant() - Scalar(1)) > Scalar(1e-9)) {
            throw NonFinite("camera rotation is not orthonormal");
        }
        if (!(fx > Scalar(0)) || !(fy > Scalar(0)) || width <= 0 || height <= 0) {
            throw NonFinite("camera intrinsics invalid");
        }
    }

    Vec3 center() const { return -(rotation.transpose() * translation); }

    Vec3 to_camera(const Vec3& p_world) const { return rotation * p_world + translation; }
};

// Projects to pixel coordinates; depth is the camera-frame z.
// Throws BehindCamera when depth <= 0.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> project_point(const Camera<Scalar>& cam,
                                          const Eigen::Matrix<Scalar, 3, 1>& p_world) {
    const Eigen::Matrix<Scalar, 3, 1> pc = cam.to_camera(p_world);
    if (!(pc.z() > Scalar(0))) throw BehindCamera("depth is not positive");
    return {cam.fx * pc.x() / pc.z() + cam.cx, cam.fy * pc.y() / pc.z() + cam.cy, pc.z()};
}

// Camera placed at `eye` looking at `target`. Camera frame: +z forward,
// +x right, +y down (image convention).
template <typename Scalar>
Camera<Scalar> look_at_camera(const Eigen::Matrix<Scalar, 3, 1>& eye,
                              const Eigen::Matrix<Scalar, 3, 1>& target,
                              Scalar focal_px, int width, int height) {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    Vec3 fwd = target - eye;
    if (fwd.norm() < Scalar(1e-12)) throw NonFinite("look_at: eye equals target");
    fwd.normalize();
    Vec3 up_hint(0, 0, 1);
    if (std::abs(fwd.dot(up_hint)) > Scalar(0.999)) up_hint = Vec3(0, 1, 0);
    const Vec3 right = fwd.cross(up_hint).normalized();
    const Vec3 down = fwd.cross(right).normalized();

    Camera<Scalar> cam;
    cam.rotation.row(0) = right.transpose();
    cam.rotation.row(1) = down.transpose();
    cam.rotation.row(2) = fwd.transpose();
    cam.translation = -(cam.rotation * eye);
    cam.fx = cam.fy = focal_px;
    cam.cx = Scalar(width) / Scalar(2);
    cam.cy = Scalar(height) / Scalar(2);
    cam.width = width;
    cam.height = height;
    cam.validate();
    return cam;
}

using Camerad = Camera<double>;

}  // namespace mvfuse
