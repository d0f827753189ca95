#pragma once

// Differentiable inter-object penalties over soft voxel occupancies, and the
// guided flow step that subtracts their gradient from the integrator update
// on a fixed schedule. Neighbor objects are frozen (grid + pose + cached
// signed-distance field); only the generated object's logits and layout
// receive gradients.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "mvfuse/core/distance_field.hpp"
#include "mvfuse/core/errors.hpp"
#include "mvfuse/core/rotation.hpp"
#include "mvfuse/core/similarity.hpp"
#include "mvfuse/core/voxel_grid.hpp"
#include "mvfuse/flow/latent.hpp"

namespace mvfuse {

template <typename Scalar>
struct SoftOccupancy {
    VoxelGrid<Scalar> grid;            // occupancy holds soft values in [0, 1]
    SimilarityTransform<Scalar> pose;  // local -> world
};

template <typename Scalar>
struct FrozenNeighbor {
    int object_id = 0;
    VoxelGrid<Scalar> grid;
    SimilarityTransform<Scalar> pose;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sdf;  // local units, negative inside
};

template <typename Scalar>
struct PhysicsContext {
    int self_id = 0;
    VoxelGrid<Scalar> self_template;  // lattice the generated logits live on
    std::vector<FrozenNeighbor<Scalar>> neighbors;
    Scalar lambda_contact = Scalar(0.5);
    Scalar contact_band = Scalar(0);  // world units; 0 means one world voxel of self
    std::vector<std::pair<int, int>> interaction_pairs;

    void add_neighbor(int object_id, const VoxelGrid<Scalar>& grid,
                      const SimilarityTransform<Scalar>& pose) {
        neighbors.push_back({object_id, grid, pose, signed_distance_field(grid)});
    }

    bool interacts(int a, int b) const {
        for (const auto& [p, q] : interaction_pairs) {
            if ((p == a && q == b) || (p == b && q == a)) return true;
        }
        return false;
    }

    Scalar band_world(const SoftOccupancy<Scalar>& self) const {
        return contact_band > Scalar(0) ? contact_band
                                        : self.grid.voxel_size * self.pose.scale;
    }
};

template <typename Scalar>
struct PhysicsLossTerms {
    Scalar collision = Scalar(0);
    Scalar contact = Scalar(0);
    Scalar total = Scalar(0);
};

// Loss with its gradients: d_values is with respect to the soft occupancy
// entries of the queried object, d_pose with respect to its 7 pose params
// (log-scale, rotation vector, translation).
template <typename Scalar>
struct FieldGradient {
    Scalar value = Scalar(0);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d_values;
    Eigen::Matrix<Scalar, 7, 1> d_pose = Eigen::Matrix<Scalar, 7, 1>::Zero();
};

template <typename Scalar>
Scalar sigmoid_clamped(Scalar z) {
    const Scalar c = std::clamp(z, Scalar(-20), Scalar(20));
    return Scalar(1) / (Scalar(1) + std::exp(-c));
}

template <typename Scalar>
Scalar dsigmoid_clamped(Scalar z) {
    if (z <= Scalar(-20) || z >= Scalar(20)) return Scalar(0);
    const Scalar s = sigmoid_clamped(z);
    return s * (Scalar(1) - s);
}

// Places sigmoid(logits) on the template lattice under the layout pose.
template <typename Scalar>
SoftOccupancy<Scalar> decode_soft_occupancy(const LatentState<Scalar>& x,
                                            const SimilarityTransform<Scalar>& pose_from_layout,
                                            const VoxelGrid<Scalar>& lattice) {
    if (x.shape.size() != lattice.cell_count()) {
        throw LatticeMismatch("logit count != lattice cell count");
    }
    SoftOccupancy<Scalar> out;
    out.grid = lattice;
    out.grid.features.resize(0, 0);
    out.grid.occupancy = x.shape.unaryExpr([](Scalar z) { return sigmoid_clamped(z); });
    out.pose = pose_from_layout;
    return out;
}

namespace detail {

template <typename Scalar>
void posed_aabb(const VoxelGrid<Scalar>& grid, const SimilarityTransform<Scalar>& pose,
                Eigen::Matrix<Scalar, 3, 1>& lo, Eigen::Matrix<Scalar, 3, 1>& hi) {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    const Vec3 mn = grid.min_corner(), mx = grid.max_corner();
    lo = Vec3::Constant(std::numeric_limits<Scalar>::infinity());
    hi = -lo;
    for (int m = 0; m < 8; ++m) {
        const Vec3 corner(m & 1 ? mx.x() : mn.x(), m & 2 ? mx.y() : mn.y(),
                          m & 4 ? mx.z() : mn.z());
        const Vec3 w = pose.apply(corner);
        lo = lo.cwiseMin(w);
        hi = hi.cwiseMax(w);
    }
}

// d(local point)/d(pose params) for p = (1/s) R^T (y - t) at fixed world y.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 7> inverse_point_jacobian(const SimilarityTransform<Scalar>& pose,
                                                   const Eigen::Matrix<Scalar, 3, 1>& y,
                                                   const Eigen::Matrix<Scalar, 3, 1>& p_local) {
    Eigen::Matrix<Scalar, 3, 7> jac;
    const Eigen::Matrix<Scalar, 3, 1> u = y - pose.translation;
    jac.col(0) = -p_local;
    jac.template block<3, 3>(0, 1) =
        -rotate_jacobian<Scalar>(-pose.rotation, u) / pose.scale;
    jac.template block<3, 3>(0, 4) = -pose.rotation_mat().transpose() / pose.scale;
    return jac;
}

// d(world point)/d(pose params) for y = s R c + t at fixed local c.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 7> forward_point_jacobian(const SimilarityTransform<Scalar>& pose,
                                                   const Eigen::Matrix<Scalar, 3, 1>& c) {
    Eigen::Matrix<Scalar, 3, 7> jac;
    const Eigen::Matrix<Scalar, 3, 1> rc = rotate(pose.rotation, c);
    jac.col(0) = pose.scale * rc;
    jac.template block<3, 3>(0, 1) = pose.scale * rotate_jacobian(pose.rotation, c);
    jac.template block<3, 3>(0, 4).setIdentity();
    return jac;
}

}  // namespace detail

// Overlap integral against every neighbor: sum over a shared world lattice of
// self_soft * neighbor_occ * cell_volume. The lattice covers the AABB
// intersection at the finer of the two world voxel sizes, snapped to a
// world-anchored quantum so the two orderings of a pair integrate over the
// same cells.
template <typename Scalar>
FieldGradient<Scalar> collision_loss(const SoftOccupancy<Scalar>& self,
                                     const PhysicsContext<Scalar>& ctx) {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    if (self.grid.occupancy.size() != self.grid.cell_count()) {
        throw LatticeMismatch("soft occupancy size != lattice");
    }
    FieldGradient<Scalar> out;
    out.d_values = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(self.grid.cell_count());

    const SimilarityTransform<Scalar> self_inv = self.pose.inverse();
    Vec3 self_lo, self_hi;
    detail::posed_aabb(self.grid, self.pose, self_lo, self_hi);

    for (const auto& nb : ctx.neighbors) {
        Vec3 nb_lo, nb_hi;
        detail::posed_aabb(nb.grid, nb.pose, nb_lo, nb_hi);
        const Vec3 lo_raw = self_lo.cwiseMax(nb_lo);
        const Vec3 hi = self_hi.cwiseMin(nb_hi);
        if ((lo_raw.array() >= hi.array()).any()) continue;

        const Scalar h = std::min(self.grid.voxel_size * self.pose.scale,
                                  nb.grid.voxel_size * nb.pose.scale);
        Vec3 lo;
        Eigen::Vector3i n;
        for (int a = 0; a < 3; ++a) {
            lo(a) = std::floor(lo_raw(a) / h) * h;
            n(a) = static_cast<int>(std::ceil((hi(a) - lo(a)) / h));
        }
        const Scalar cell_vol = h * h * h;
        const SimilarityTransform<Scalar> nb_inv = nb.pose.inverse();

        for (int iz = 0; iz < n.z(); ++iz) {
            for (int iy = 0; iy < n.y(); ++iy) {
                for (int ix = 0; ix < n.x(); ++ix) {
                    const Vec3 y = lo + h * Vec3(Scalar(ix) + Scalar(0.5), Scalar(iy) + Scalar(0.5),
                                                 Scalar(iz) + Scalar(0.5));
                    const Vec3 q = nb_inv.apply(y);
                    const auto b = sample_trilinear(nb.grid, nb.grid.occupancy, q, SamplePad::Zero);
                    if (b.value == Scalar(0)) continue;
                    const Vec3 p = self_inv.apply(y);
                    const auto a = sample_trilinear(self.grid, self.grid.occupancy, p, SamplePad::Zero);

                    out.value += a.value * b.value * cell_vol;
                    const Scalar w = b.value * cell_vol;
                    for (int m = 0; m < 8; ++m) {
                        if (a.index[static_cast<std::size_t>(m)] >= 0) {
                            out.d_values(a.index[static_cast<std::size_t>(m)]) +=
                                w * a.weight[static_cast<std::size_t>(m)];
                        }
                    }
                    if (a.grad.squaredNorm() > Scalar(0)) {
                        out.d_pose += w * (a.grad.transpose() *
                                           detail::inverse_point_jacobian(self.pose, y, p))
                                              .transpose();
                    }
                }
            }
        }
    }
    return out;
}

// Squared hinge on the (soft) minimum surface gap against each neighbor in
// the interaction set, gated to a finite band so distant objects feel no
// attraction. Gap candidates are the boundary voxels of the thresholded self
// occupancy; the candidate set is held fixed through differentiation, so the
// occupancy-value gradient of this term is identically zero and the pose
// gradient flows through the neighbor's distance field.
template <typename Scalar>
FieldGradient<Scalar> contact_loss(const SoftOccupancy<Scalar>& self,
                                   const PhysicsContext<Scalar>& ctx) {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    if (self.grid.occupancy.size() != self.grid.cell_count()) {
        throw LatticeMismatch("soft occupancy size != lattice");
    }
    FieldGradient<Scalar> out;
    out.d_values = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(self.grid.cell_count());

    std::vector<Eigen::Index> boundary;
    const int r = self.grid.resolution;
    for (Eigen::Index lin = 0; lin < self.grid.cell_count(); ++lin) {
        if (self.grid.occupancy(lin) <= Scalar(0.5)) continue;
        const Eigen::Vector3i c = self.grid.coords(lin);
        bool edge = false;
        for (int a = 0; a < 3 && !edge; ++a) {
            for (int d = -1; d <= 1 && !edge; d += 2) {
                Eigen::Vector3i nbc = c;
                nbc(a) += d;
                if (nbc(a) < 0 || nbc(a) >= r ||
                    self.grid.occupancy(self.grid.linear_index(nbc.x(), nbc.y(), nbc.z())) <=
                        Scalar(0.5)) {
                    edge = true;
                }
            }
        }
        if (edge) boundary.push_back(lin);
    }
    if (boundary.empty()) return out;

    const Scalar band = ctx.band_world(self);
    const Scalar kappa = Scalar(20) / band;

    for (const auto& nb : ctx.neighbors) {
        if (!ctx.interacts(ctx.self_id, nb.object_id)) continue;
        const SimilarityTransform<Scalar> nb_inv = nb.pose.inverse();

        std::vector<Scalar> dist(boundary.size());
        Scalar d_min = std::numeric_limits<Scalar>::infinity();
        for (std::size_t i = 0; i < boundary.size(); ++i) {
            const Vec3 y = self.pose.apply(self.grid.center(boundary[i]));
            const auto s = sample_trilinear(nb.grid, nb.sdf, nb_inv.apply(y), SamplePad::Clamp);
            dist[i] = nb.pose.scale * s.value;
            d_min = std::min(d_min, dist[i]);
        }
        Scalar z = Scalar(0);
        for (const Scalar d : dist) z += std::exp(-kappa * (d - d_min));
        const Scalar gap = d_min - std::log(z) / kappa;
        if (gap > band || gap <= Scalar(0)) continue;

        out.value += gap * gap;
        const Scalar outer = Scalar(2) * gap;
        for (std::size_t i = 0; i < boundary.size(); ++i) {
            const Scalar w = std::exp(-kappa * (dist[i] - d_min)) / z;
            if (w < Scalar(1e-14)) continue;
            const Vec3 c = self.grid.center(boundary[i]);
            const Vec3 y = self.pose.apply(c);
            const auto s = sample_trilinear(nb.grid, nb.sdf, nb_inv.apply(y), SamplePad::Clamp);
            const Eigen::Matrix<Scalar, 1, 3> dd_dy =
                s.grad.transpose() * nb.pose.rotation_mat().transpose();
            out.d_pose += (outer * w) *
                          (dd_dy * detail::forward_point_jacobian(self.pose, c)).transpose();
        }
    }
    return out;
}

template <typename Scalar>
struct PhysicsGradient {
    PhysicsLossTerms<Scalar> terms;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d_logits;
    Eigen::Matrix<Scalar, 7, 1> d_layout = Eigen::Matrix<Scalar, 7, 1>::Zero();
};

// Full penalty and its gradient with respect to the latent: decodes the
// state, evaluates both terms, and chains the sigmoid back onto the logits.
template <typename Scalar>
PhysicsGradient<Scalar> physics_loss(const LatentState<Scalar>& x,
                                     const PhysicsContext<Scalar>& ctx) {
    if (!x.has_layout) throw LatticeMismatch("physics needs a structure-stage latent");
    const auto pose = SimilarityTransform<Scalar>::from_params(x.layout);
    const auto soft = decode_soft_occupancy(x, pose, ctx.self_template);

    const auto col = collision_loss(soft, ctx);
    const auto con = contact_loss(soft, ctx);

    PhysicsGradient<Scalar> out;
    out.terms.collision = col.value;
    out.terms.contact = con.value;
    out.terms.total = col.value + ctx.lambda_contact * con.value;

    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dsig =
        x.shape.unaryExpr([](Scalar z) { return dsigmoid_clamped(z); });
    out.d_logits =
        ((col.d_values + ctx.lambda_contact * con.d_values).array() * dsig.array()).matrix();
    out.d_layout = col.d_pose + ctx.lambda_contact * con.d_pose;
    return out;
}

// Euler update with the scheduled guidance kick subtracted afterwards:
// x' = x + v dt - eta * grad(penalty at x). Unguided steps are plain Euler.
template <typename Scalar>
LatentState<Scalar> guided_step(const LatentState<Scalar>& x, const LatentDelta<Scalar>& v,
                                const FlowSchedule<Scalar>& sched, const PhysicsContext<Scalar>& ctx,
                                int step_index) {
    if (step_index < 0 || step_index >= sched.n_steps) throw SpecInvalid("step index out of range");
    const Scalar dt = sched.dt_at(step_index);
    if (!sched.guided(step_index) || sched.guidance_strength == Scalar(0)) {
        return euler_step(x, v, dt);
    }
    const auto grad = physics_loss(x, ctx);
    LatentState<Scalar> out = euler_step(x, v, dt);
    Scalar eta = sched.guidance_strength;
    if (sched.normalize_guidance) {
        const Scalar sup = std::max(grad.d_logits.template lpNorm<Eigen::Infinity>(),
                                    grad.d_layout.template lpNorm<Eigen::Infinity>());
        if (sup > Scalar(1e-12)) eta /= sup;
    }
    out.shape -= eta * grad.d_logits;
    out.layout -= eta * grad.d_layout;
    return out;
}

using SoftOccupancyd = SoftOccupancy<double>;
using PhysicsContextd = PhysicsContext<double>;

}  // namespace mvfuse
