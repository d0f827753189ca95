#pragma once

// Flow-matching sample state and the Euler integration schedule. The latent
// carries either occupancy logits (structure stage, with 7 layout params:
// log-scale, rotation vector, translation) or flattened per-voxel colors
// (appearance stage, no layout).

#include <Eigen/Dense>
#include <cmath>

#include "mvfuse/core/errors.hpp"

namespace mvfuse {

template <typename Scalar>
struct LatentState {
    using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Vec7 = Eigen::Matrix<Scalar, 7, 1>;

    Scalar t = Scalar(0);
    VecX shape;                    // logits or flattened colors
    Vec7 layout = Vec7::Zero();    // log s, rotation vector, translation
    bool has_layout = true;

    void validate() const {
        if (!(t >= Scalar(0)) || !(t <= Scalar(1) + Scalar(1e-9))) {
            throw NonFinite("latent time outside [0, 1]");
        }
        if (!shape.allFinite() || !layout.allFinite()) throw NonFinite("latent has non-finite values");
    }
};

template <typename Scalar>
struct LatentDelta {
    using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Vec7 = Eigen::Matrix<Scalar, 7, 1>;

    VecX shape;
    Vec7 layout = Vec7::Zero();
};

// Uniform time grid t_k = k / n_steps plus the guidance gate. The last step
// size comes out as 1 - t_{n-1} exactly, so an ODE whose field points at a
// fixed target lands on it with no leftover time.
template <typename Scalar>
struct FlowSchedule {
    int n_steps = 25;
    int guidance_start = 15;      // first guided step index
    int guidance_interval = 3;    // steps between guided updates
    Scalar guidance_strength = Scalar(0.1);
    bool normalize_guidance = false;  // scale the kick by 1/max|grad| instead of raw strength

    void validate() const {
        if (n_steps < 1) throw SpecInvalid("schedule needs at least one step");
        if (guidance_start < 0 || guidance_start > n_steps) {
            throw SpecInvalid("guidance start outside [0, n_steps]");
        }
        if (guidance_interval < 1) throw SpecInvalid("guidance interval must be >= 1");
        if (!(guidance_strength >= Scalar(0)) || !std::isfinite(double(guidance_strength))) {
            throw SpecInvalid("guidance strength must be finite and >= 0");
        }
    }

    Scalar time_at(int k) const { return Scalar(k) / Scalar(n_steps); }
    Scalar dt_at(int k) const { return time_at(k + 1) - time_at(k); }

    bool guided(int step_index) const {
        return step_index >= guidance_start &&
               (step_index - guidance_start) % guidance_interval == 0;
    }
};

// One explicit Euler update: x' = x + v dt, t' = t + dt.
template <typename Scalar>
LatentState<Scalar> euler_step(const LatentState<Scalar>& x, const LatentDelta<Scalar>& v,
                               Scalar dt) {
    if (v.shape.size() != x.shape.size()) throw ShapeMismatch("velocity size != state size");
    if (x.t + dt > Scalar(1) + Scalar(1e-9)) throw TimeAtOne("step overshoots t = 1");
    LatentState<Scalar> out = x;
    out.shape += dt * v.shape;
    if (x.has_layout) out.layout += dt * v.layout;
    out.t = x.t + dt;
    return out;
}

using LatentStated = LatentState<double>;
using LatentDeltad = LatentDelta<double>;
using FlowScheduled = FlowSchedule<double>;

}  // namespace mvfuse
