#pragma once

// Solid voxelization by parity ray casting. A voxel is occupied when its
// center lies inside the mesh, decided by counting ray crossings along
// several directions. Rays that graze edges or vertices are retried with
// jittered directions; voxels that stay ambiguous, or whose directions
// disagree on parity, count against the watertightness budget (0.1%).

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "mvfuse/core/errors.hpp"
#include "mvfuse/core/mesh.hpp"
#include "mvfuse/core/voxel_grid.hpp"

namespace mvfuse {

namespace detail {

enum class RayHit { Miss, Cross, Ambiguous };

// Moller-Trumbore with explicit ambiguity reporting near edges and t = 0.
template <typename Scalar>
RayHit ray_triangle(const Eigen::Matrix<Scalar, 3, 1>& orig,
                    const Eigen::Matrix<Scalar, 3, 1>& dir,
                    const Eigen::Matrix<Scalar, 3, 1>& a,
                    const Eigen::Matrix<Scalar, 3, 1>& b,
                    const Eigen::Matrix<Scalar, 3, 1>& c, Scalar scale) {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    constexpr Scalar kBary = Scalar(1e-9);
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 pvec = dir.cross(e2);
    const Scalar det = e1.dot(pvec);
    if (std::abs(det) <= Scalar(1e-12) * e1.norm() * e2.norm()) {
        // Parallel ray; it either misses cleanly or grazes the plane.
        const Vec3 n = e1.cross(e2);
        const Scalar dist = n.dot(orig - a);
        if (std::abs(dist) <= Scalar(1e-12) * n.norm() * scale) return RayHit::Ambiguous;
        return RayHit::Miss;
    }
    const Scalar inv_det = Scalar(1) / det;
    const Vec3 tvec = orig - a;
    const Scalar u = tvec.dot(pvec) * inv_det;
    if (u < -kBary || u > Scalar(1) + kBary) return RayHit::Miss;
    const Vec3 qvec = tvec.cross(e1);
    const Scalar v = dir.dot(qvec) * inv_det;
    if (v < -kBary || u + v > Scalar(1) + kBary) return RayHit::Miss;
    const Scalar t = e2.dot(qvec) * inv_det;
    const Scalar t_eps = Scalar(1e-9) * scale;
    if (t < -t_eps) return RayHit::Miss;
    if (u <= kBary || v <= kBary || u + v >= Scalar(1) - kBary || t <= t_eps) {
        return RayHit::Ambiguous;
    }
    return RayHit::Cross;
}

// Parity along one direction: 1 inside, 0 outside, -1 ambiguous.
template <typename Scalar>
int ray_parity(const MeshSurface<Scalar>& mesh, const Eigen::Matrix<Scalar, 3, 1>& orig,
               const Eigen::Matrix<Scalar, 3, 1>& dir, Scalar scale) {
    int crossings = 0;
    for (Eigen::Index t = 0; t < mesh.triangles.rows(); ++t) {
        const auto tri = mesh.triangles.row(t);
        const RayHit hit =
            ray_triangle<Scalar>(orig, dir, mesh.vertices.row(tri(0)).transpose(),
                                 mesh.vertices.row(tri(1)).transpose(),
                                 mesh.vertices.row(tri(2)).transpose(), scale);
        if (hit == RayHit::Ambiguous) return -1;
        if (hit == RayHit::Cross) ++crossings;
    }
    return crossings % 2;
}

}  // namespace detail

// Occupies voxels of a cubic grid over `bounds` whose centers fall inside the
// mesh. Cell size is max box extent / resolution; the grid origin is the box
// minimum. Throws NonWatertight when more than 0.1% of voxels are ambiguous.
template <typename Scalar>
VoxelGrid<Scalar> voxelize_mesh(const MeshSurface<Scalar>& mesh, int resolution,
                                const Eigen::Matrix<Scalar, 3, 1>& box_min,
                                const Eigen::Matrix<Scalar, 3, 1>& box_max) {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    if (((box_max - box_min).array() <= Scalar(0)).any()) throw NonFinite("voxelize bounds empty");

    const Scalar voxel_size = (box_max - box_min).maxCoeff() / Scalar(resolution);
    VoxelGrid<Scalar> grid(resolution, box_min, voxel_size);
    if (mesh.triangles.rows() == 0) return grid;  // nothing encloses anything
    const Scalar scale = (mesh.max_corner() - mesh.min_corner()).norm() + (box_max - box_min).norm();

    // Three independent base directions, each with jittered fallbacks.
    const std::array<Vec3, 3> base = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
    constexpr int kJitters = 6;

    Eigen::Index ambiguous = 0;
    for (Eigen::Index lin = 0; lin < grid.cell_count(); ++lin) {
        const Vec3 center = grid.center(lin);
        int vote = -2;  // -2 unset, -1 conflict/ambiguous
        bool voxel_ok = true;
        for (const Vec3& dir0 : base) {
            int parity = -1;
            for (int j = 0; j < kJitters && parity < 0; ++j) {
                Vec3 dir = dir0;
                if (j > 0) {
                    dir += Scalar(0.0137) * j * Vec3(Scalar(0.731), Scalar(0.413), Scalar(0.279));
                    dir += Scalar(0.0059) * j * j * Vec3(Scalar(-0.227), Scalar(0.591), Scalar(0.349));
                    dir.normalize();
                }
                parity = detail::ray_parity(mesh, center, dir, scale);
            }
            if (parity < 0) {
                voxel_ok = false;
                break;
            }
            if (vote == -2) {
                vote = parity;
            } else if (vote != parity) {
                voxel_ok = false;
                break;
            }
        }
        if (!voxel_ok) {
            ++ambiguous;
            continue;  // left unoccupied; within budget this is harmless
        }
        grid.occupancy(lin) = static_cast<Scalar>(vote);
    }

    if (static_cast<double>(ambiguous) > 0.001 * static_cast<double>(grid.cell_count())) {
        throw NonWatertight("parity ambiguous for " + std::to_string(ambiguous) + " of " +
                            std::to_string(grid.cell_count()) + " voxels");
    }
    return grid;
}

}  // namespace mvfuse
