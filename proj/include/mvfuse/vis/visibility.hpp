#pragma once

// Geometric visibility of voxel centers from pinhole cameras, computed with
// integer DDA traversal (Amanatides-Woo). A query voxel is visible from a
// camera when no voxel above the occupancy threshold is crossed strictly
// before entering the query's own voxel; the query voxel never occludes
// itself. Boundary ties step the smallest axis index first.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mvfuse/core/camera.hpp"
#include "mvfuse/core/errors.hpp"
#include "mvfuse/core/similarity.hpp"
#include "mvfuse/core/voxel_grid.hpp"

namespace mvfuse {

// Rows are views, columns are query points. point_voxels maps each column to
// its voxel linear index in the source grid.
struct VisibilityMatrix {
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> seen;  // n_views x n_points
    std::vector<Eigen::Index> point_voxels;

    Eigen::Index n_views() const { return seen.rows(); }
    Eigen::Index n_points() const { return seen.cols(); }
};

// Expresses a camera in the local frame of a grid posed by `object_pose`
// (local -> world). Projection is unchanged because pinhole coordinates are
// invariant to uniform scaling of camera-frame points; reported depths come
// out divided by the pose scale.
template <typename Scalar>
Camera<Scalar> world_to_grid_pose(const SimilarityTransform<Scalar>& object_pose,
                                  const Camera<Scalar>& cam) {
    Camera<Scalar> out = cam;
    const auto r_obj = object_pose.rotation_mat();
    out.rotation = cam.rotation * r_obj;
    const auto center_local = object_pose.inverse().apply(cam.center());
    out.translation = -(out.rotation * center_local);
    return out;
}

// Same, naming the grid whose local frame is meant. The mapping depends only
// on the pose; the grid is validated and otherwise just disambiguates intent.
template <typename Scalar>
Camera<Scalar> world_to_grid_pose(const VoxelGrid<Scalar>& grid,
                                  const SimilarityTransform<Scalar>& object_pose,
                                  const Camera<Scalar>& cam) {
    grid.validate();
    return world_to_grid_pose(object_pose, cam);
}

namespace detail {

// Walks the segment from `origin` to the center of `target`; returns true
// when some voxel with occupancy > threshold is crossed strictly before the
// target voxel. `origin` may lie outside the grid.
template <typename Scalar>
bool dda_occluded(const VoxelGrid<Scalar>& grid, const Eigen::Matrix<Scalar, 3, 1>& origin,
                  Eigen::Index target, Scalar threshold) {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    const Vec3 goal = grid.center(target);
    const Vec3 dir = goal - origin;
    const Scalar seg_len = dir.norm();
    if (seg_len < Scalar(1e-15)) return false;

    // Clip the segment to the grid box (slab test), then walk voxels.
    Scalar t0 = Scalar(0), t1 = Scalar(1);
    const Vec3 mn = grid.min_corner(), mx = grid.max_corner();
    for (int a = 0; a < 3; ++a) {
        if (std::abs(dir(a)) < Scalar(1e-300)) {
            if (origin(a) < mn(a) || origin(a) > mx(a)) return false;
            continue;
        }
        Scalar ta = (mn(a) - origin(a)) / dir(a);
        Scalar tb = (mx(a) - origin(a)) / dir(a);
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (t0 > t1) return false;

    const Vec3 entry = origin + t0 * dir;
    Eigen::Vector3i cell = grid.voxel_of(entry);
    cell = cell.cwiseMax(0).cwiseMin(grid.resolution - 1);

    Eigen::Vector3i step;
    Vec3 t_max, t_delta;
    for (int a = 0; a < 3; ++a) {
        if (dir(a) > Scalar(0)) {
            step(a) = 1;
            t_delta(a) = grid.voxel_size / dir(a);
            t_max(a) = ((grid.origin(a) + (cell(a) + 1) * grid.voxel_size) - origin(a)) / dir(a);
        } else if (dir(a) < Scalar(0)) {
            step(a) = -1;
            t_delta(a) = -grid.voxel_size / dir(a);
            t_max(a) = ((grid.origin(a) + cell(a) * grid.voxel_size) - origin(a)) / dir(a);
        } else {
            step(a) = 0;
            t_delta(a) = std::numeric_limits<Scalar>::infinity();
            t_max(a) = std::numeric_limits<Scalar>::infinity();
        }
    }

    const Eigen::Vector3i goal_cell = grid.coords(target);
    while (true) {
        if (cell == goal_cell) return false;
        const Eigen::Index lin = grid.linear_index(cell.x(), cell.y(), cell.z());
        if (grid.occupancy(lin) > threshold) return true;
        // Tie break: smallest axis index wins.
        int axis = 0;
        if (t_max(1) < t_max(axis)) axis = 1;
        if (t_max(2) < t_max(axis)) axis = 2;
        if (t_max(axis) > Scalar(1)) return false;  // segment ends inside this voxel
        cell(axis) += step(axis);
        if (cell(axis) < 0 || cell(axis) >= grid.resolution) return false;
        t_max(axis) += t_delta(axis);
    }
}

}  // namespace detail

// Visibility of explicit query voxels from each camera. Cameras sitting in
// an occupied voxel are rejected; cameras inside the grid box but in free
// space are fine.
template <typename Scalar>
VisibilityMatrix dda_visibility_points(const VoxelGrid<Scalar>& grid,
                                       const std::vector<Camera<Scalar>>& cameras,
                                       const std::vector<Eigen::Index>& query_voxels,
                                       Scalar occupancy_threshold = Scalar(0.5)) {
    VisibilityMatrix vis;
    vis.point_voxels = query_voxels;
    vis.seen.resize(static_cast<Eigen::Index>(cameras.size()),
                    static_cast<Eigen::Index>(query_voxels.size()));
    for (std::size_t ci = 0; ci < cameras.size(); ++ci) {
        const auto origin = cameras[ci].center();
        const Eigen::Vector3i cam_cell = grid.voxel_of(origin);
        if (grid.in_bounds(cam_cell) &&
            grid.occupancy(grid.linear_index(cam_cell.x(), cam_cell.y(), cam_cell.z())) >
                occupancy_threshold) {
            throw CameraInsideGrid("camera center in occupied voxel");
        }
        for (std::size_t pi = 0; pi < query_voxels.size(); ++pi) {
            const bool occluded =
                detail::dda_occluded(grid, origin, query_voxels[pi], occupancy_threshold);
            vis.seen(static_cast<Eigen::Index>(ci), static_cast<Eigen::Index>(pi)) =
                occluded ? 0 : 1;
        }
    }
    return vis;
}

// Standard form: query points are the centers of all occupied voxels.
template <typename Scalar>
VisibilityMatrix dda_visibility(const VoxelGrid<Scalar>& grid,
                                const std::vector<Camera<Scalar>>& cameras,
                                Scalar occupancy_threshold = Scalar(0.5)) {
    return dda_visibility_points(grid, cameras, grid.occupied_indices(occupancy_threshold),
                                 occupancy_threshold);
}

}  // namespace mvfuse
