#pragma once

// Exact 3D nearest-neighbor search over a fixed point set. Median-split
// kd-tree built once at construction; queries never mutate state.

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "mvfuse/core/errors.hpp"

namespace mvfuse {

template <typename Scalar>
class KdTree {
public:
    using MatX3 = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

    explicit KdTree(const MatX3& points) : pts_(points) {
        if (pts_.rows() == 0) throw EmptyCloud("kd-tree over zero points");
        order_.resize(static_cast<std::size_t>(pts_.rows()));
        std::iota(order_.begin(), order_.end(), Eigen::Index(0));
        nodes_.reserve(order_.size() * 2);
        root_ = build(0, static_cast<Eigen::Index>(order_.size()));
    }

    struct Hit {
        Eigen::Index index = -1;
        Scalar distance = std::numeric_limits<Scalar>::infinity();
    };

    Hit nearest(const Vec3& q) const {
        Hit best;
        Scalar best_sq = std::numeric_limits<Scalar>::infinity();
        search(root_, q, best, best_sq);
        best.distance = std::sqrt(best_sq);
        return best;
    }

private:
    struct Node {
        Eigen::Index point = -1;
        int axis = 0;
        Eigen::Index left = -1, right = -1;
    };

    Eigen::Index build(Eigen::Index lo, Eigen::Index hi) {
        if (lo >= hi) return -1;
        // Split on the widest axis of this subset.
        Vec3 mn = Vec3::Constant(std::numeric_limits<Scalar>::infinity());
        Vec3 mx = -mn;
        for (Eigen::Index i = lo; i < hi; ++i) {
            const Vec3 p = pts_.row(order_[static_cast<std::size_t>(i)]).transpose();
            mn = mn.cwiseMin(p);
            mx = mx.cwiseMax(p);
        }
        int axis = 0;
        (mx - mn).maxCoeff(&axis);

        const Eigen::Index mid = lo + (hi - lo) / 2;
        std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                         [&](Eigen::Index a, Eigen::Index b) { return pts_(a, axis) < pts_(b, axis); });

        Node node;
        node.point = order_[static_cast<std::size_t>(mid)];
        node.axis = axis;
        const Eigen::Index self = static_cast<Eigen::Index>(nodes_.size());
        nodes_.push_back(node);
        const Eigen::Index left = build(lo, mid);
        const Eigen::Index right = build(mid + 1, hi);
        nodes_[static_cast<std::size_t>(self)].left = left;
        nodes_[static_cast<std::size_t>(self)].right = right;
        return self;
    }

    void search(Eigen::Index ni, const Vec3& q, Hit& best, Scalar& best_sq) const {
        if (ni < 0) return;
        const Node& node = nodes_[static_cast<std::size_t>(ni)];
        const Vec3 p = pts_.row(node.point).transpose();
        const Scalar d2 = (p - q).squaredNorm();
        if (d2 < best_sq || (d2 == best_sq && node.point < best.index)) {
            best_sq = d2;
            best.index = node.point;
        }
        const Scalar delta = q(node.axis) - p(node.axis);
        const Eigen::Index near = delta < Scalar(0) ? node.left : node.right;
        const Eigen::Index far = delta < Scalar(0) ? node.right : node.left;
        search(near, q, best, best_sq);
        if (delta * delta <= best_sq) search(far, q, best, best_sq);
    }

    MatX3 pts_;
    std::vector<Eigen::Index> order_;
    std::vector<Node> nodes_;
    Eigen::Index root_ = -1;
};

}  // namespace mvfuse
