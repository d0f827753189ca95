#pragma once

// Deterministic stand-in for transformer cross-attention. Points a view can
// see attend sharply to the image patch they project into (low entropy);
// points it cannot see (occluded or behind the camera) get a near-uniform
// row with a small seeded ripple (entropy > 0.98). Depends only on geometry,
// never on the evolving latent, so one map per view serves a whole stage.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

#include "mvfuse/core/camera.hpp"
#include "mvfuse/core/errors.hpp"
#include "mvfuse/core/rng.hpp"
#include "mvfuse/core/voxel_grid.hpp"
#include "mvfuse/flow/oracle.hpp"
#include "mvfuse/fusion/attention.hpp"
#include "mvfuse/vis/visibility.hpp"

namespace mvfuse {

template <typename Scalar>
AttentionMap<Scalar> synthesize_attention(const ViewCondition<Scalar>& view,
                                          const VoxelGrid<Scalar>& grid,
                                          const VisibilityMatrix& vis,
                                          Scalar sigma = Scalar(0.5),  // in patch widths
                                          int patch_grid = 16, std::uint64_t seed = 0) {
    if (patch_grid < 2) throw ShapeMismatch("patch grid needs at least 2 patches per side");
    if (!(sigma > Scalar(0))) throw NonFinite("sigma must be positive");
    if (view.view_id < 0 || view.view_id >= vis.n_views()) {
        throw ShapeMismatch("view id outside the visibility matrix");
    }

    const Eigen::Index n_points = vis.n_points();
    const Eigen::Index n_patches = static_cast<Eigen::Index>(patch_grid) * patch_grid;
    const Scalar patch_w = Scalar(view.cam.width) / Scalar(patch_grid);
    const Scalar patch_h = Scalar(view.cam.height) / Scalar(patch_grid);

    AttentionMap<Scalar> attn;
    attn.view_id = view.view_id;
    attn.weights.resize(n_points, n_patches);

    const std::uint64_t view_seed = derive_seed(seed, "attention", view.view_id);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> row(n_patches);
    for (Eigen::Index l = 0; l < n_points; ++l) {
        bool focused = vis.seen(view.view_id, l) != 0;
        Scalar u = 0, v = 0;
        if (focused) {
            try {
                const auto pix = project_point(view.cam, grid.center(vis.point_voxels[l]));
                u = pix(0) / patch_w;  // patch units
                v = pix(1) / patch_h;
            } catch (const BehindCamera&) {
                focused = false;
            }
        }
        if (focused) {
            for (int py = 0; py < patch_grid; ++py) {
                for (int px = 0; px < patch_grid; ++px) {
                    const Scalar du = u - (Scalar(px) + Scalar(0.5));
                    const Scalar dv = v - (Scalar(py) + Scalar(0.5));
                    row(static_cast<Eigen::Index>(py) * patch_grid + px) =
                        -(du * du + dv * dv) / (sigma * sigma);
                }
            }
            row = (row.array() - row.maxCoeff()).exp();
        } else {
            Rng rng(derive_seed(view_seed, "flat", static_cast<std::uint64_t>(l)));
            for (Eigen::Index p = 0; p < n_patches; ++p) {
                row(p) = Scalar(1) + Scalar(0.01) * Scalar(2 * rng.uniform() - 1);
            }
        }
        attn.weights.row(l) = row.transpose() / row.sum();
    }
    return attn;
}

}  // namespace mvfuse
