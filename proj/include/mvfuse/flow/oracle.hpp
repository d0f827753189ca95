#pragma once

// Per-view velocity fields. Each view carries a "target" it believes in:
// the reconstruction it would produce alone (reliable where it saw the
// object, guessed elsewhere). Its field is the conditional-OT pull
// v = (target - x) / (1 - t), which an Euler sweep integrates to the target
// exactly. Layout channels are pulled toward the view's pose estimate the
// same way.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mvfuse/core/camera.hpp"
#include "mvfuse/core/errors.hpp"
#include "mvfuse/core/voxel_grid.hpp"
#include "mvfuse/flow/latent.hpp"

namespace mvfuse {

template <typename Scalar>
struct ViewCondition {
    using Vec7 = Eigen::Matrix<Scalar, 7, 1>;
    using MaskVec = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>;

    int view_id = 0;
    Camera<Scalar> cam;          // expressed in the generation grid's frame
    VoxelGrid<Scalar> target;    // occupancy this view pulls toward, plus color features
    Vec7 pose_target = Vec7::Zero();
    MaskVec observed;            // per-voxel: 1 where this view saw the actual object
    Scalar logit_amplitude = Scalar(6);  // occupancy encoded as +/- this logit

    void validate() const {
        target.validate();
        if (observed.size() != target.cell_count()) throw ShapeMismatch("observed mask size");
        if (!(logit_amplitude > Scalar(0))) throw NonFinite("logit amplitude must be positive");
    }
};

// Logit encoding of the view's target occupancy (structure stage).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> target_logits(const ViewCondition<Scalar>& view) {
    return (view.target.occupancy.array() > Scalar(0.5))
        .select(Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Constant(view.target.cell_count(),
                                                                   view.logit_amplitude),
                -view.logit_amplitude);
}

// Target colors on an explicit support (appearance stage), flattened
// point-major: (r, g, b) per support voxel.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> target_colors(
    const ViewCondition<Scalar>& view, const std::vector<Eigen::Index>& support) {
    if (view.target.features.cols() < 3) throw ShapeMismatch("target grid has no color features");
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(3 * static_cast<Eigen::Index>(support.size()));
    for (std::size_t i = 0; i < support.size(); ++i) {
        out.template segment<3>(3 * static_cast<Eigen::Index>(i)) =
            view.target.features.row(support[i]).template head<3>().transpose();
    }
    return out;
}

// Conditional-OT field toward the view's target. `support` selects the
// appearance-stage voxel set and is ignored for structure-stage states
// (which are recognized by their layout channels).
template <typename Scalar>
LatentDelta<Scalar> oracle_velocity(const ViewCondition<Scalar>& view, const LatentState<Scalar>& x,
                                    const std::vector<Eigen::Index>& support = {}) {
    if (x.t >= Scalar(1) - Scalar(1e-9)) throw TimeAtOne("velocity query at t >= 1");
    const Scalar remaining = Scalar(1) - x.t;

    LatentDelta<Scalar> v;
    if (x.has_layout) {
        if (x.shape.size() != view.target.cell_count()) {
            throw ShapeMismatch("state size != grid cell count");
        }
        v.shape = (target_logits(view) - x.shape) / remaining;
        v.layout = (view.pose_target - x.layout) / remaining;
    } else {
        if (support.empty()) throw SpecInvalid("appearance stage needs a support set");
        if (x.shape.size() != 3 * static_cast<Eigen::Index>(support.size())) {
            throw ShapeMismatch("state size != 3 * support size");
        }
        v.shape = (target_colors(view, support) - x.shape) / remaining;
    }
    return v;
}

using ViewConditiond = ViewCondition<double>;

}  // namespace mvfuse
