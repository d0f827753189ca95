#pragma once

// Dense cubic voxel grid in its own local frame. Linear index order is
// x fastest, then y, then z. Occupancy lives in [0, 1]; optional per-voxel
// feature channels are stored dense (rows follow the linear index).

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mvfuse/core/errors.hpp"

namespace mvfuse {

template <typename Scalar>
struct VoxelGrid {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    using Vec3i = Eigen::Vector3i;
    using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using MatXX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    int resolution = 0;          // voxels per axis
    Vec3 origin = Vec3::Zero();  // min corner, local units
    Scalar voxel_size = Scalar(1);
    VecX occupancy;              // resolution^3 values in [0, 1]
    MatXX features;              // resolution^3 x F, or 0 x 0 when absent

    VoxelGrid() = default;
    VoxelGrid(int res, const Vec3& org, Scalar vs)
        : resolution(res), origin(org), voxel_size(vs) {
        if (res <= 0 || !(vs > Scalar(0))) throw NonFinite("voxel grid shape invalid");
        occupancy = VecX::Zero(cell_count());
    }

    Eigen::Index cell_count() const {
        return static_cast<Eigen::Index>(resolution) * resolution * resolution;
    }

    Eigen::Index linear_index(int ix, int iy, int iz) const {
        return static_cast<Eigen::Index>(ix) +
               static_cast<Eigen::Index>(resolution) * (iy + static_cast<Eigen::Index>(resolution) * iz);
    }

    Vec3i coords(Eigen::Index lin) const {
        const int r = resolution;
        return Vec3i(static_cast<int>(lin % r), static_cast<int>((lin / r) % r),
                     static_cast<int>(lin / (static_cast<Eigen::Index>(r) * r)));
    }

    bool in_bounds(const Vec3i& c) const {
        return (c.array() >= 0).all() && (c.array() < resolution).all();
    }

    Vec3 center(const Vec3i& c) const {
        return origin + voxel_size * (c.template cast<Scalar>() + Vec3::Constant(Scalar(0.5)));
    }

    Vec3 center(Eigen::Index lin) const { return center(coords(lin)); }

    // Voxel containing a local-frame point; may be out of bounds.
    Vec3i voxel_of(const Vec3& p) const {
        const Vec3 q = (p - origin) / voxel_size;
        return Vec3i(static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y())),
                     static_cast<int>(std::floor(q.z())));
    }

    Vec3 min_corner() const { return origin; }
    Vec3 max_corner() const { return origin + Vec3::Constant(voxel_size * resolution); }

    void validate() const {
        if (occupancy.size() != cell_count()) throw ShapeMismatch("occupancy size");
        if ((occupancy.array() < Scalar(0)).any() || (occupancy.array() > Scalar(1)).any()) {
            throw NonFinite("occupancy outside [0, 1]");
        }
        if (features.size() != 0 && features.rows() != cell_count()) {
            throw ShapeMismatch("feature rows");
        }
    }

    std::vector<Eigen::Index> occupied_indices(Scalar threshold = Scalar(0.5)) const {
        std::vector<Eigen::Index> out;
        for (Eigen::Index i = 0; i < occupancy.size(); ++i) {
            if (occupancy(i) > threshold) out.push_back(i);
        }
        return out;
    }
};

using VoxelGridd = VoxelGrid<double>;

}  // namespace mvfuse
