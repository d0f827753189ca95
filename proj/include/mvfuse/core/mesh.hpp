#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "mvfuse/core/errors.hpp"
#include "mvfuse/core/point_cloud.hpp"
#include "mvfuse/core/rng.hpp"

namespace mvfuse {

// Triangle mesh. Construction drops degenerate triangles (area < 1e-12).
template <typename Scalar>
struct MeshSurface {
    using MatX3 = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

    MatX3 vertices;
    Eigen::Matrix<int, Eigen::Dynamic, 3> triangles;

    MeshSurface() = default;
    MeshSurface(const MatX3& verts, const Eigen::Matrix<int, Eigen::Dynamic, 3>& tris)
        : vertices(verts) {
        std::vector<int> keep;
        for (Eigen::Index t = 0; t < tris.rows(); ++t) {
            for (int k = 0; k < 3; ++k) {
                if (tris(t, k) < 0 || tris(t, k) >= verts.rows()) {
                    throw ShapeMismatch("triangle index out of range");
                }
            }
            if (triangle_area(verts, tris.row(t)) >= Scalar(1e-12)) {
                keep.push_back(static_cast<int>(t));
            }
        }
        triangles.resize(static_cast<Eigen::Index>(keep.size()), 3);
        for (std::size_t i = 0; i < keep.size(); ++i) triangles.row(static_cast<Eigen::Index>(i)) = tris.row(keep[i]);
    }

    static Scalar triangle_area(const MatX3& verts, const Eigen::Matrix<int, 1, 3>& tri) {
        const Vec3 a = verts.row(tri(0)).transpose();
        const Vec3 b = verts.row(tri(1)).transpose();
        const Vec3 c = verts.row(tri(2)).transpose();
        return Scalar(0.5) * (b - a).cross(c - a).norm();
    }

    Scalar total_area() const {
        Scalar area = Scalar(0);
        for (Eigen::Index t = 0; t < triangles.rows(); ++t) {
            area += triangle_area(vertices, triangles.row(t));
        }
        return area;
    }

    Vec3 min_corner() const { return vertices.colwise().minCoeff().transpose(); }
    Vec3 max_corner() const { return vertices.colwise().maxCoeff().transpose(); }
};

// Area-weighted uniform surface sampling, deterministic in the seed.
template <typename Scalar>
PointCloud<Scalar> sample_surface(const MeshSurface<Scalar>& mesh, Eigen::Index count,
                                  std::uint64_t seed) {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    if (mesh.triangles.rows() == 0) throw EmptyCloud("sample_surface on empty mesh");

    std::vector<Scalar> cumulative(static_cast<std::size_t>(mesh.triangles.rows()));
    Scalar acc = Scalar(0);
    for (Eigen::Index t = 0; t < mesh.triangles.rows(); ++t) {
        acc += MeshSurface<Scalar>::triangle_area(mesh.vertices, mesh.triangles.row(t));
        cumulative[static_cast<std::size_t>(t)] = acc;
    }

    Rng rng(seed);
    PointCloud<Scalar> cloud;
    cloud.points.resize(count, 3);
    for (Eigen::Index i = 0; i < count; ++i) {
        const Scalar pick = static_cast<Scalar>(rng.uniform()) * acc;
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), pick);
        const Eigen::Index t = static_cast<Eigen::Index>(it - cumulative.begin());
        const auto tri = mesh.triangles.row(std::min(t, mesh.triangles.rows() - 1));
        Scalar u = static_cast<Scalar>(rng.uniform());
        Scalar v = static_cast<Scalar>(rng.uniform());
        if (u + v > Scalar(1)) {
            u = Scalar(1) - u;
            v = Scalar(1) - v;
        }
        const Vec3 a = mesh.vertices.row(tri(0)).transpose();
        const Vec3 b = mesh.vertices.row(tri(1)).transpose();
        const Vec3 c = mesh.vertices.row(tri(2)).transpose();
        cloud.points.row(i) = (a + u * (b - a) + v * (c - a)).transpose();
    }
    return cloud;
}

}  // namespace mvfuse
