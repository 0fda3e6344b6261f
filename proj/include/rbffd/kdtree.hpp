#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <utility>
#include <vector>

namespace rbffd {

/// Static 3-D k-d tree for k-nearest-neighbour queries.
///
/// Built once over a fixed point set: each internal node splits at the median
/// of the axis with the widest coordinate spread, leaves hold at most
/// `leaf_size` points. Queries are const and can run concurrently.
///
/// Neighbour ordering is by squared Euclidean distance, ties broken by the
/// lower point index, so results match a brute-force scan exactly.
class KdTree {
public:
    static constexpr std::size_t default_leaf_size = 16;

    explicit KdTree(std::span<const Eigen::Vector3d> points,
                    std::size_t leaf_size = default_leaf_size)
        : points_(points.begin(), points.end()), leaf_size_(std::max<std::size_t>(1, leaf_size))
    {
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), std::uint32_t{0});
        if (!points_.empty()) {
            nodes_.reserve(2 * points_.size() / leaf_size_ + 2);
            build(0, points_.size());
        }
    }

    std::size_t size() const noexcept { return points_.size(); }

    /// Indices of the k points nearest to `query`, nearest first.
    std::vector<std::size_t> knn(const Eigen::Vector3d& query, std::size_t k) const
    {
        k = std::min(k, points_.size());
        std::vector<std::size_t> out;
        if (k == 0) return out;

        Heap heap;
        search(0, query, k, heap);

        std::vector<Candidate> sorted;
        sorted.reserve(k);
        while (!heap.empty()) {
            sorted.push_back(heap.top());
            heap.pop();
        }
        std::reverse(sorted.begin(), sorted.end());
        out.reserve(k);
        for (const auto& c : sorted) out.push_back(c.index);
        return out;
    }

private:
    struct Node {
        std::size_t begin;
        std::size_t end;
        int axis; // -1 for a leaf
        double split;
        std::size_t left;
        std::size_t right;
    };

    struct Candidate {
        double d2;
        std::size_t index;
        bool operator<(const Candidate& o) const
        {
            return d2 < o.d2 || (d2 == o.d2 && index < o.index);
        }
    };
    // max-heap on (d2, index): top is the current worst kept neighbour
    using Heap = std::priority_queue<Candidate>;

    std::size_t build(std::size_t begin, std::size_t end)
    {
        const std::size_t id = nodes_.size();
        nodes_.push_back(Node{begin, end, -1, 0.0, 0, 0});
        if (end - begin <= leaf_size_) return id;

        Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
        Eigen::Vector3d hi = -lo;
        for (std::size_t i = begin; i < end; ++i) {
            lo = lo.cwiseMin(points_[order_[i]]);
            hi = hi.cwiseMax(points_[order_[i]]);
        }
        int axis = 0;
        (hi - lo).maxCoeff(&axis);

        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::uint32_t a, std::uint32_t b) {
                             return points_[a][axis] < points_[b][axis];
                         });
        const double split = points_[order_[mid]][axis];

        const std::size_t left = build(begin, mid);
        const std::size_t right = build(mid, end);
        nodes_[id].axis = axis;
        nodes_[id].split = split;
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    void consider(const Eigen::Vector3d& q, std::size_t idx, std::size_t k, Heap& heap) const
    {
        const Candidate c{(points_[idx] - q).squaredNorm(), idx};
        if (heap.size() < k) {
            heap.push(c);
        } else if (c < heap.top()) {
            heap.pop();
            heap.push(c);
        }
    }

    void search(std::size_t id, const Eigen::Vector3d& q, std::size_t k, Heap& heap) const
    {
        const Node& node = nodes_[id];
        if (node.axis < 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) consider(q, order_[i], k, heap);
            return;
        }
        // left holds coordinates <= split, right holds coordinates >= split
        const double diff = q[node.axis] - node.split;
        const std::size_t near = diff <= 0.0 ? node.left : node.right;
        const std::size_t far = diff <= 0.0 ? node.right : node.left;
        search(near, q, k, heap);
        // visit on equality too: an equidistant point with a lower index may live there
        if (heap.size() < k || diff * diff <= heap.top().d2) search(far, q, k, heap);
    }

    std::vector<Eigen::Vector3d> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::size_t leaf_size_;
};

} // namespace rbffd
