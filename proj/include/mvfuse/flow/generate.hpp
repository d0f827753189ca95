#pragma once

// Multi-view generation. Each Euler step queries every view's velocity field,
// blends them with per-point fusion weights, and advances the shared latent;
// the structure stage can additionally take scheduled physics-guidance kicks.
// Stage one produces occupancy plus a layout transform; stage two paints
// colors onto the decoded support.

#include <Eigen/Dense>
#include <cstdint>
#include <numeric>
#include <vector>

#include "mvfuse/core/errors.hpp"
#include "mvfuse/flow/attention_synth.hpp"
#include "mvfuse/flow/latent.hpp"
#include "mvfuse/flow/oracle.hpp"
#include "mvfuse/fusion/weights.hpp"
#include "mvfuse/phys/physics.hpp"
#include "mvfuse/vis/visibility.hpp"

namespace mvfuse {

enum class GenStage { structure, appearance };

template <typename Scalar>
struct StageResult {
    LatentState<Scalar> latent;
    VoxelGrid<Scalar> grid;
    SimilarityTransform<Scalar> layout;
    FusionWeights<Scalar> weights;
};

namespace detail {

// Frozen visibility rows come straight off the views' observed masks.
template <typename Scalar>
VisibilityMatrix stack_observed(const std::vector<ViewCondition<Scalar>>& views,
                                const std::vector<Eigen::Index>& points) {
    VisibilityMatrix vis;
    vis.point_voxels = points;
    vis.seen.resize(static_cast<Eigen::Index>(views.size()),
                    static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < views.size(); ++i) {
        for (std::size_t l = 0; l < points.size(); ++l) {
            vis.seen(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) =
                views[i].observed(points[l]);
        }
    }
    return vis;
}

}  // namespace detail

// Fusion weights for one stage. The attention synthesizer depends only on
// geometry, so the per-step weight recomputation folds into one evaluation.
template <typename Scalar>
FusionWeights<Scalar> stage_weights(const std::vector<ViewCondition<Scalar>>& views,
                                    const FusionConfig<Scalar>& cfg, GenStage stage,
                                    const VisibilityMatrix& vis, const VoxelGrid<Scalar>& lattice,
                                    std::uint64_t seed) {
    const Eigen::Index n_views = static_cast<Eigen::Index>(views.size());
    const Eigen::Index n_points = vis.n_points();
    const bool enabled = stage == GenStage::structure ? cfg.stage1 : cfg.stage2;
    const WeightStrategy strategy = enabled ? cfg.strategy : WeightStrategy::Uniform;

    if (strategy == WeightStrategy::Uniform) return uniform_weights<Scalar>(n_views, n_points);
    if (strategy == WeightStrategy::Visibility) return visibility_weights<Scalar>(vis, cfg.beta);

    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> entropies(n_views, n_points);
    for (std::size_t i = 0; i < views.size(); ++i) {
        const auto attn = synthesize_attention(views[i], lattice, vis, Scalar(0.5), 16, seed);
        entropies.row(static_cast<Eigen::Index>(i)) = attention_entropy(attn).transpose();
    }
    const auto w_ent = entropy_weights(entropies, cfg.alpha);
    if (strategy == WeightStrategy::Entropy) return w_ent;
    return combined_weights(w_ent, visibility_weights<Scalar>(vis, cfg.beta), cfg.gamma);
}

// Runs the full Euler sweep for one stage. `base_grid` supplies the lattice;
// for the appearance stage it must be the decoded structure grid and
// `support` its occupied voxels, and the result carries colors written into
// the feature channels on that support.
template <typename Scalar>
StageResult<Scalar> generate_stage(const std::vector<ViewCondition<Scalar>>& views,
                                   const FusionConfig<Scalar>& cfg, const FlowSchedule<Scalar>& sched,
                                   const PhysicsContext<Scalar>* physics, std::uint64_t seed,
                                   GenStage stage, const VoxelGrid<Scalar>& base_grid,
                                   const std::vector<Eigen::Index>& support = {}) {
    using MatXX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (views.empty()) throw NoViews("generation needs at least one view");
    sched.validate();
    for (const auto& v : views) {
        v.validate();
        if (v.target.resolution != base_grid.resolution ||
            v.target.voxel_size != base_grid.voxel_size) {
            throw LatticeMismatch("view target lattice != generation lattice");
        }
    }
    if (stage == GenStage::appearance && support.empty()) {
        throw SpecInvalid("appearance stage needs a non-empty support");
    }

    std::vector<Eigen::Index> points;
    if (stage == GenStage::structure) {
        points.resize(static_cast<std::size_t>(base_grid.cell_count()));
        std::iota(points.begin(), points.end(), Eigen::Index(0));
    } else {
        points = support;
    }
    const Eigen::Index n_points = static_cast<Eigen::Index>(points.size());
    const Eigen::Index dim = stage == GenStage::structure ? 1 : 3;

    const VisibilityMatrix vis = detail::stack_observed(views, points);
    const FusionWeights<Scalar> weights = stage_weights(views, cfg, stage, vis, base_grid, seed);

    LatentState<Scalar> x;
    x.has_layout = stage == GenStage::structure;
    x.shape.setZero(n_points * dim);

    std::vector<MatXX> vels(views.size(), MatXX(n_points, dim));
    for (int k = 0; k < sched.n_steps; ++k) {
        LatentDelta<Scalar> fused;
        fused.layout.setZero();
        for (std::size_t i = 0; i < views.size(); ++i) {
            const auto v = oracle_velocity(views[i], x, points);
            for (Eigen::Index l = 0; l < n_points; ++l) {
                for (Eigen::Index c = 0; c < dim; ++c) vels[i](l, c) = v.shape(l * dim + c);
            }
            if (x.has_layout) {
                fused.layout += weights.w.row(static_cast<Eigen::Index>(i)).mean() * v.layout;
            }
        }
        const MatXX fused_mat = fuse_velocities(vels, weights);
        fused.shape.resize(n_points * dim);
        for (Eigen::Index l = 0; l < n_points; ++l) {
            for (Eigen::Index c = 0; c < dim; ++c) fused.shape(l * dim + c) = fused_mat(l, c);
        }
        x = (physics != nullptr && stage == GenStage::structure)
                ? guided_step(x, fused, sched, *physics, k)
                : euler_step(x, fused, sched.dt_at(k));
    }

    StageResult<Scalar> out;
    out.latent = x;
    out.weights = weights;
    out.grid = base_grid;
    if (stage == GenStage::structure) {
        out.grid.features.resize(0, 0);
        for (Eigen::Index i = 0; i < n_points; ++i) {
            out.grid.occupancy(i) = x.shape(i) > Scalar(0) ? Scalar(1) : Scalar(0);
        }
        out.layout = SimilarityTransform<Scalar>::from_params(x.layout);
    } else {
        out.grid.features = MatXX::Zero(base_grid.cell_count(), 3);
        for (Eigen::Index l = 0; l < n_points; ++l) {
            out.grid.features.row(points[static_cast<std::size_t>(l)]) =
                x.shape.template segment<3>(3 * l).transpose();
        }
    }
    return out;
}

template <typename Scalar>
struct ObjectResult {
    VoxelGrid<Scalar> grid;  // decoded occupancy with colors on the support
    SimilarityTransform<Scalar> layout;
    FusionWeights<Scalar> structure_weights;
    FusionWeights<Scalar> appearance_weights;
    bool empty = false;  // structure stage decoded to nothing
};

// Structure pass, then colors on the frozen decoded support. Physics guidance
// only ever applies to the structure stage (the appearance latent carries no
// geometry). Separate fusion configs let the two stages weight views
// differently.
template <typename Scalar>
ObjectResult<Scalar> generate_object(const std::vector<ViewCondition<Scalar>>& views,
                                     const FusionConfig<Scalar>& structure_cfg,
                                     const FusionConfig<Scalar>& appearance_cfg,
                                     const FlowSchedule<Scalar>& sched,
                                     const PhysicsContext<Scalar>* physics, std::uint64_t seed) {
    if (views.empty()) throw NoViews("generation needs at least one view");
    VoxelGrid<Scalar> lattice = views.front().target;
    lattice.occupancy.setZero();
    lattice.features.resize(0, 0);

    const auto s1 = generate_stage(views, structure_cfg, sched, physics, seed,
                                   GenStage::structure, lattice);
    ObjectResult<Scalar> out;
    out.layout = s1.layout;
    out.structure_weights = s1.weights;

    const auto support = s1.grid.occupied_indices();
    if (support.empty()) {
        out.grid = s1.grid;
        out.empty = true;
        return out;
    }
    const auto s2 = generate_stage(views, appearance_cfg, sched, nullptr, seed,
                                   GenStage::appearance, s1.grid, support);
    out.grid = s2.grid;
    out.appearance_weights = s2.weights;
    return out;
}

template <typename Scalar>
ObjectResult<Scalar> generate_object(const std::vector<ViewCondition<Scalar>>& views,
                                     const FusionConfig<Scalar>& cfg, const FlowSchedule<Scalar>& sched,
                                     const PhysicsContext<Scalar>* physics, std::uint64_t seed) {
    return generate_object(views, cfg, cfg, sched, physics, seed);
}

}  // namespace mvfuse
