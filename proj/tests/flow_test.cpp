#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "mvfuse/core/camera.hpp"
#include "mvfuse/core/rng.hpp"
#include "mvfuse/flow/attention_synth.hpp"
#include "mvfuse/flow/generate.hpp"
#include "mvfuse/flow/latent.hpp"
#include "mvfuse/flow/oracle.hpp"

using namespace mvfuse;
using VecX = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
using Vec7 = Eigen::Matrix<double, 7, 1>;

namespace {

VoxelGridd block_grid(int res, int lo, int hi) {
    VoxelGridd g(res, Vec3::Constant(-0.5), 1.0 / res);
    for (int z = lo; z < hi; ++z) {
        for (int y = lo; y < hi; ++y) {
            for (int x = lo; x < hi; ++x) g.occupancy(g.linear_index(x, y, z)) = 1.0;
        }
    }
    return g;
}

ViewConditiond full_view(const VoxelGridd& target, int id, const Vec3& eye) {
    ViewConditiond v;
    v.view_id = id;
    v.cam = look_at_camera<double>(eye, Vec3(0, 0, 0), 24.0, 64, 64);
    v.target = target;
    v.pose_target = SimilarityTransformd(1.1, Vec3(0.1, -0.2, 0.05), Vec3(0.03, -0.1, 0.2)).to_params();
    v.observed.setOnes(target.cell_count());
    return v;
}

}  // namespace

TEST_CASE("flow schedule: exact time grid and the guidance gate") {
    FlowScheduled sched;
    sched.validate();
    CHECK(sched.time_at(sched.n_steps) == 1.0);
    double t = 0.0;
    for (int k = 0; k < sched.n_steps; ++k) t += sched.dt_at(k);
    CHECK(t == 1.0);

    std::vector<int> guided;
    for (int k = 0; k < sched.n_steps; ++k) {
        if (sched.guided(k)) guided.push_back(k);
    }
    CHECK(guided == std::vector<int>{15, 18, 21, 24});

    FlowScheduled bad;
    bad.n_steps = 0;
    CHECK_THROWS_AS(bad.validate(), SpecInvalid);
    bad = FlowScheduled{};
    bad.guidance_start = 26;
    CHECK_THROWS_AS(bad.validate(), SpecInvalid);
    bad = FlowScheduled{};
    bad.guidance_interval = 0;
    CHECK_THROWS_AS(bad.validate(), SpecInvalid);
}

TEST_CASE("euler step: identity on zero velocity, exact single jump, guards") {
    LatentStated x;
    x.shape = VecX::LinSpaced(5, -1.0, 1.0);
    x.layout = Vec7::Constant(0.25);

    LatentDeltad zero;
    zero.shape = VecX::Zero(5);
    const auto still = euler_step(x, zero, 0.2);
    CHECK((still.shape - x.shape).cwiseAbs().maxCoeff() == 0.0);
    CHECK(still.t == 0.2);

    LatentDeltad c;
    c.shape = VecX::Constant(5, 3.0);
    c.layout = Vec7::Ones();
    const auto jumped = euler_step(x, c, 1.0);
    CHECK((jumped.shape - (x.shape.array() + 3.0).matrix()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((jumped.layout - Vec7::Constant(1.25)).cwiseAbs().maxCoeff() == 0.0);

    LatentDeltad wrong;
    wrong.shape = VecX::Zero(4);
    CHECK_THROWS_AS(euler_step(x, wrong, 0.1), ShapeMismatch);
    x.t = 0.95;
    CHECK_THROWS_AS(euler_step(x, zero, 0.1), TimeAtOne);
}

TEST_CASE("euler step: target-seeking field telescopes onto the target") {
    Rng rng(71);
    for (const int n : {1, 2, 5, 25}) {
        VecX target(40);
        Vec7 ltarget;
        for (int i = 0; i < 40; ++i) target(i) = rng.uniform(-8.0, 8.0);
        for (int i = 0; i < 7; ++i) ltarget(i) = rng.uniform(-1.0, 1.0);

        LatentStated x;
        x.shape = VecX::Zero(40);
        for (int i = 0; i < 40; ++i) x.shape(i) = rng.uniform(-2.0, 2.0);
        FlowScheduled sched;
        sched.n_steps = n;
        for (int k = 0; k < n; ++k) {
            LatentDeltad v;
            v.shape = (target - x.shape) / (1.0 - x.t);
            v.layout = (ltarget - x.layout) / (1.0 - x.t);
            x = euler_step(x, v, sched.dt_at(k));
        }
        CHECK(x.t == 1.0);
        CHECK((x.shape - target).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((x.layout - ltarget).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("view velocity field: fixed point, origin pull, determinism") {
    const auto grid = block_grid(8, 2, 6);
    auto view = full_view(grid, 0, Vec3(2.5, 0.3, 0.2));

    LatentStated x;
    x.shape = target_logits(view);
    x.layout = view.pose_target;
    const auto v0 = oracle_velocity(view, x);
    CHECK(v0.shape.cwiseAbs().maxCoeff() == 0.0);
    CHECK(v0.layout.cwiseAbs().maxCoeff() == 0.0);

    LatentStated origin;
    origin.shape = VecX::Zero(grid.cell_count());
    const auto v1 = oracle_velocity(view, origin);
    CHECK((v1.shape - target_logits(view)).cwiseAbs().maxCoeff() == 0.0);

    auto twin = full_view(grid, 1, Vec3(2.5, 0.3, 0.2));
    twin.pose_target = view.pose_target;
    const auto v2 = oracle_velocity(twin, origin);
    CHECK((v2.shape - v1.shape).cwiseAbs().maxCoeff() == 0.0);

    origin.t = 1.0 - 1e-10;
    CHECK_THROWS_AS(oracle_velocity(view, origin), TimeAtOne);
    origin.t = 0.0;
    origin.shape = VecX::Zero(3);
    CHECK_THROWS_AS(oracle_velocity(view, origin), ShapeMismatch);
}

TEST_CASE("view velocity field: color stage pulls toward support colors") {
    auto grid = block_grid(4, 1, 3);
    grid.features = Eigen::MatrixXd::Zero(grid.cell_count(), 3);
    Rng rng(72);
    for (Eigen::Index i = 0; i < grid.cell_count(); ++i) {
        for (int c = 0; c < 3; ++c) grid.features(i, c) = rng.uniform();
    }
    auto view = full_view(grid, 0, Vec3(2, 1, 1));
    const auto support = grid.occupied_indices();
    REQUIRE(support.size() == 8);

    LatentStated x;
    x.has_layout = false;
    x.shape = VecX::Zero(3 * static_cast<Eigen::Index>(support.size()));
    const auto v = oracle_velocity(view, x, support);
    for (std::size_t l = 0; l < support.size(); ++l) {
        for (int c = 0; c < 3; ++c) {
            CHECK(v.shape(3 * static_cast<Eigen::Index>(l) + c) == grid.features(support[l], c));
        }
    }
    CHECK_THROWS_AS(oracle_velocity(view, x), ShapeMismatch);
    CHECK_THROWS_AS(oracle_velocity(view, x, {}), SpecInvalid);
}

TEST_CASE("attention synthesizer: sharp rows for seen points, flat rows for hidden ones") {
    // a camera staring straight down an axis, one voxel placed so it projects
    // exactly onto the center of patch (7, 7)
    Camerad cam;
    cam.fx = cam.fy = 64.0;
    cam.cx = cam.cy = 32.0;
    cam.width = cam.height = 64;
    const Vec3 p(-0.0625, -0.0625, 2.0);
    VoxelGridd g(1, p - Vec3::Constant(0.125), 0.25);
    g.occupancy(0) = 1.0;

    ViewConditiond view;
    view.view_id = 0;
    view.cam = cam;
    view.target = g;
    view.observed.setOnes(1);

    VisibilityMatrix vis;
    vis.point_voxels = {0};
    vis.seen.setOnes(1, 1);

    const auto sharp = synthesize_attention(view, g, vis, 0.25, 16, 9);
    sharp.validate();
    CHECK(attention_entropy(sharp)(0) < 0.05);
    const auto seen_default = synthesize_attention(view, g, vis, 0.5, 16, 9);
    CHECK(attention_entropy(seen_default)(0) < 0.5);

    vis.seen.setZero(1, 1);
    const auto flat = synthesize_attention(view, g, vis, 0.5, 16, 9);
    flat.validate();
    CHECK(attention_entropy(flat)(0) > 0.98);
    const auto flat_again = synthesize_attention(view, g, vis, 0.5, 16, 9);
    CHECK((flat_again.weights - flat.weights).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("attention synthesizer: points on one camera ray get identical rows") {
    Camerad cam;
    cam.fx = cam.fy = 64.0;
    cam.cx = cam.cy = 32.0;
    cam.width = cam.height = 64;

    VoxelGridd g(3, Vec3(-0.45, -0.45, 0.2), 0.3);
    const Eigen::Index near = g.linear_index(1, 1, 0);
    const Eigen::Index far = g.linear_index(1, 1, 2);
    g.occupancy(near) = g.occupancy(far) = 1.0;

    ViewConditiond view;
    view.cam = cam;
    view.target = g;
    view.observed.setOnes(g.cell_count());

    VisibilityMatrix vis;
    vis.point_voxels = {near, far};
    vis.seen.setOnes(1, 2);

    const auto attn = synthesize_attention(view, g, vis, 0.5, 16, 0);
    CHECK((attn.weights.row(0) - attn.weights.row(1)).cwiseAbs().maxCoeff() == 0.0);

    // a point behind the camera falls back to the flat branch
    VoxelGridd back(1, Vec3(-0.1, -0.1, -3.0), 0.2);
    back.occupancy(0) = 1.0;
    ViewConditiond bview;
    bview.cam = cam;
    bview.target = back;
    bview.observed.setOnes(1);
    VisibilityMatrix bvis;
    bvis.point_voxels = {0};
    bvis.seen.setOnes(1, 1);
    const auto battn = synthesize_attention(bview, back, bvis, 0.5, 16, 0);
    CHECK(attention_entropy(battn)(0) > 0.98);
}

TEST_CASE("single-view generation lands exactly on the view's target") {
    auto grid = block_grid(8, 2, 6);
    grid.features = Eigen::MatrixXd::Zero(grid.cell_count(), 3);
    Rng rng(73);
    for (Eigen::Index i = 0; i < grid.cell_count(); ++i) {
        for (int c = 0; c < 3; ++c) grid.features(i, c) = rng.uniform();
    }
    const std::vector<ViewConditiond> views{full_view(grid, 0, Vec3(2.5, 0.3, 0.2))};
    FusionConfig<double> cfg;  // combined strategy

    for (const int n : {1, 5, 25}) {
        FlowScheduled sched;
        sched.n_steps = n;
        sched.guidance_start = n;
        const auto out = generate_object(views, cfg, sched, nullptr, 11);
        REQUIRE(!out.empty);
        CHECK((out.grid.occupancy - grid.occupancy).cwiseAbs().maxCoeff() == 0.0);
        CHECK((out.layout.to_params() - views[0].pose_target).cwiseAbs().maxCoeff() <= 1e-12);
        const auto support = grid.occupied_indices();
        double color_err = 0.0;
        for (const auto idx : support) {
            color_err = std::max(color_err,
                                 (out.grid.features.row(idx) - grid.features.row(idx))
                                     .cwiseAbs()
                                     .maxCoeff());
        }
        CHECK(color_err <= 1e-12);
    }
}

TEST_CASE("views sharing one target generate the same object as one view alone") {
    const auto grid = block_grid(8, 3, 6);
    std::vector<ViewConditiond> views{full_view(grid, 0, Vec3(2.5, 0.3, 0.2)),
                                      full_view(grid, 1, Vec3(-2.0, 1.0, 0.8)),
                                      full_view(grid, 2, Vec3(0.4, 2.4, -0.7))};
    for (auto& v : views) v.pose_target = views[0].pose_target;
    FusionConfig<double> cfg;
    FlowScheduled sched;
    sched.guidance_start = sched.n_steps;

    const auto alone = generate_object({views[0]}, cfg, sched, nullptr, 5);
    const auto all = generate_object(views, cfg, sched, nullptr, 5);
    CHECK((all.grid.occupancy - alone.grid.occupancy).cwiseAbs().maxCoeff() == 0.0);
    CHECK((all.layout.to_params() - alone.layout.to_params()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("uniform fusion of two disagreeing views keeps only the agreed block") {
    const auto left = block_grid(8, 1, 4);
    const auto right = block_grid(8, 3, 6);
    std::vector<ViewConditiond> views{full_view(left, 0, Vec3(2.5, 0.3, 0.2)),
                                      full_view(right, 1, Vec3(-2.0, 1.0, 0.8))};
    views[1].pose_target = views[0].pose_target;
    FusionConfig<double> cfg;
    cfg.strategy = WeightStrategy::Uniform;
    FlowScheduled sched;
    sched.guidance_start = sched.n_steps;

    VoxelGridd lattice = left;
    lattice.occupancy.setZero();
    const auto s1 = generate_stage(views, cfg, sched, nullptr, 3, GenStage::structure, lattice);
    // disagreement averages the logit targets to exactly zero, which decodes
    // as empty; agreement keeps the full +/- amplitude
    for (Eigen::Index i = 0; i < lattice.cell_count(); ++i) {
        const bool both = left.occupancy(i) > 0.5 && right.occupancy(i) > 0.5;
        CHECK(s1.grid.occupancy(i) == (both ? 1.0 : 0.0));
    }
}

TEST_CASE("generation bookkeeping: errors and determinism") {
    const auto grid = block_grid(8, 2, 6);
    const std::vector<ViewConditiond> views{full_view(grid, 0, Vec3(2.5, 0.3, 0.2))};
    FusionConfig<double> cfg;
    FlowScheduled sched;
    sched.guidance_start = sched.n_steps;

    CHECK_THROWS_AS(generate_object(std::vector<ViewConditiond>{}, cfg, sched, nullptr, 1), NoViews);

    auto odd = views;
    odd[0].target = block_grid(16, 2, 6);
    odd[0].observed.setOnes(odd[0].target.cell_count());
    VoxelGridd lattice = grid;
    CHECK_THROWS_AS(generate_stage(odd, cfg, sched, nullptr, 1, GenStage::structure, lattice),
                    LatticeMismatch);
    CHECK_THROWS_AS(generate_stage(views, cfg, sched, nullptr, 1, GenStage::appearance, lattice),
                    SpecInvalid);

    // an all-empty target decodes to nothing and short-circuits the color pass
    VoxelGridd empty_target(8, Vec3::Constant(-0.5), 1.0 / 8);
    auto ev = full_view(empty_target, 0, Vec3(2.5, 0.3, 0.2));
    const auto nothing = generate_object({ev}, cfg, sched, nullptr, 1);
    CHECK(nothing.empty);
    CHECK(nothing.grid.occupancy.maxCoeff() == 0.0);

    const auto a = generate_object(views, cfg, sched, nullptr, 17);
    const auto b = generate_object(views, cfg, sched, nullptr, 17);
    CHECK((a.grid.occupancy - b.grid.occupancy).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.grid.features - b.grid.features).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.layout.to_params() - b.layout.to_params()).cwiseAbs().maxCoeff() == 0.0);
}
