#pragma once

// Exact Euclidean distance transforms on the voxel-center lattice plus
// trilinear field sampling with analytic derivatives. The signed distance
// field is corrected by half a voxel so its zero crossing sits on voxel
// faces between occupied and free cells.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "mvfuse/core/voxel_grid.hpp"

namespace mvfuse {

namespace detail {

// Large finite stand-in for "no site": keeps the envelope arithmetic NaN-free
// (inf - inf would poison the vertex intersections). Small squared offsets
// are absorbed by rounding, so two absent sites compare exactly equal.
constexpr double kNoSite = 1e30;

// Felzenszwalb-Huttenlocher 1D lower envelope of parabolas, exact in O(n).
inline void squared_dt_1d(std::vector<double>& f, std::vector<double>& d,
                          std::vector<int>& v, std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        double s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
        while (s <= z[k]) {
            --k;
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double dq = q - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

}  // namespace detail

// Squared distance (voxel units) from every voxel center to the nearest
// voxel center where `mask` is true. Centers where no mask voxel exists at
// all come back as +infinity.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> squared_edt(const VoxelGrid<Scalar>& grid,
                                                     const std::vector<bool>& mask) {
    const int r = grid.resolution;
    std::vector<double> field(static_cast<std::size_t>(grid.cell_count()));
    for (Eigen::Index i = 0; i < grid.cell_count(); ++i) {
        field[static_cast<std::size_t>(i)] = mask[static_cast<std::size_t>(i)] ? 0.0 : detail::kNoSite;
    }

    std::vector<double> f(r), d(r), z(r + 1);
    std::vector<int> v(r);
    // x, then y, then z passes.
    for (int pass = 0; pass < 3; ++pass) {
        for (int a = 0; a < r; ++a) {
            for (int b = 0; b < r; ++b) {
                for (int i = 0; i < r; ++i) {
                    Eigen::Index lin;
                    if (pass == 0) lin = grid.linear_index(i, a, b);
                    else if (pass == 1) lin = grid.linear_index(a, i, b);
                    else lin = grid.linear_index(a, b, i);
                    f[i] = field[static_cast<std::size_t>(lin)];
                }
                detail::squared_dt_1d(f, d, v, z);
                for (int i = 0; i < r; ++i) {
                    Eigen::Index lin;
                    if (pass == 0) lin = grid.linear_index(i, a, b);
                    else if (pass == 1) lin = grid.linear_index(a, i, b);
                    else lin = grid.linear_index(a, b, i);
                    field[static_cast<std::size_t>(lin)] = d[i];
                }
            }
        }
    }

    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(grid.cell_count());
    for (Eigen::Index i = 0; i < grid.cell_count(); ++i) {
        const double d = field[static_cast<std::size_t>(i)];
        out(i) = d >= detail::kNoSite * 0.5 ? std::numeric_limits<Scalar>::infinity()
                                            : static_cast<Scalar>(d);
    }
    return out;
}

// Signed distance to the occupied/free interface in local units. Negative
// inside. Values are exact for axis-aligned faces: a free center adjacent to
// an occupied one reads +0.5 * voxel_size.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> signed_distance_field(const VoxelGrid<Scalar>& grid,
                                                               Scalar threshold = Scalar(0.5)) {
    std::vector<bool> occ(static_cast<std::size_t>(grid.cell_count()));
    std::vector<bool> free(static_cast<std::size_t>(grid.cell_count()));
    bool any_occ = false, any_free = false;
    for (Eigen::Index i = 0; i < grid.cell_count(); ++i) {
        const bool o = grid.occupancy(i) > threshold;
        occ[static_cast<std::size_t>(i)] = o;
        free[static_cast<std::size_t>(i)] = !o;
        any_occ |= o;
        any_free |= !o;
    }
    const Scalar big = Scalar(2) * grid.resolution;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(grid.cell_count());
    if (!any_occ || !any_free) {
        out.setConstant((any_occ ? -big : big) * grid.voxel_size);
        return out;
    }
    const auto d_occ = squared_edt(grid, occ);
    const auto d_free = squared_edt(grid, free);
    for (Eigen::Index i = 0; i < grid.cell_count(); ++i) {
        const Scalar s = std::sqrt(d_occ(i)) - std::sqrt(d_free(i));  // |s| >= 1 always
        const Scalar corrected = s - (s > Scalar(0) ? Scalar(0.5) : Scalar(-0.5));
        out(i) = corrected * grid.voxel_size;
    }
    return out;
}

enum class SamplePad { Zero, Clamp };

template <typename Scalar>
struct TrilinearSample {
    Scalar value = Scalar(0);
    Eigen::Matrix<Scalar, 3, 1> grad;  // d value / d local point
    std::array<Eigen::Index, 8> index;  // -1 where padded
    std::array<Scalar, 8> weight;
};

// Trilinear interpolation of a per-voxel field at a local-frame point.
// Values live at voxel centers. Zero padding reads 0 outside the lattice;
// clamp padding extends edge values.
template <typename Scalar>
TrilinearSample<Scalar> sample_trilinear(const VoxelGrid<Scalar>& grid,
                                         const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& field,
                                         const Eigen::Matrix<Scalar, 3, 1>& p_local,
                                         SamplePad pad) {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    const Vec3 u = (p_local - grid.origin) / grid.voxel_size - Vec3::Constant(Scalar(0.5));
    Eigen::Vector3i base;
    Vec3 frac;
    for (int a = 0; a < 3; ++a) {
        const Scalar fl = std::floor(u(a));
        base(a) = static_cast<int>(fl);
        frac(a) = u(a) - fl;
    }

    TrilinearSample<Scalar> out;
    out.grad.setZero();
    int slot = 0;
    for (int dz = 0; dz < 2; ++dz) {
        for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx, ++slot) {
                Eigen::Vector3i c(base.x() + dx, base.y() + dy, base.z() + dz);
                Scalar value;
                Eigen::Index idx = -1;
                if (grid.in_bounds(c)) {
                    idx = grid.linear_index(c.x(), c.y(), c.z());
                    value = field(idx);
                } else if (pad == SamplePad::Clamp) {
                    const Eigen::Vector3i cc = c.cwiseMax(0).cwiseMin(grid.resolution - 1);
                    idx = grid.linear_index(cc.x(), cc.y(), cc.z());
                    value = field(idx);
                } else {
                    value = Scalar(0);
                }
                const Scalar wx = dx ? frac.x() : Scalar(1) - frac.x();
                const Scalar wy = dy ? frac.y() : Scalar(1) - frac.y();
                const Scalar wz = dz ? frac.z() : Scalar(1) - frac.z();
                const Scalar w = wx * wy * wz;
                out.index[static_cast<std::size_t>(slot)] = idx;
                out.weight[static_cast<std::size_t>(slot)] = w;
                out.value += w * value;
                const Scalar sx = dx ? Scalar(1) : Scalar(-1);
                const Scalar sy = dy ? Scalar(1) : Scalar(-1);
                const Scalar sz = dz ? Scalar(1) : Scalar(-1);
                out.grad.x() += sx * wy * wz * value;
                out.grad.y() += wx * sy * wz * value;
                out.grad.z() += wx * wy * sz * value;
            }
        }
    }
    out.grad /= grid.voxel_size;
    return out;
}

}  // namespace mvfuse
