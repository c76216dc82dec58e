#pragma once

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mfg/measure.hpp"
#include "mfg/types.hpp"

namespace mfg {
namespace detail {

// Dense transportation simplex. Maintains a spanning-tree basis over the
// bipartite supply/demand graph; pivots with most-negative pricing (block
// scanned) and falls back to Bland's rule after a run of degenerate pivots.
class TransportSimplex {
public:
    TransportSimplex(Mat cost, Vec supply, Vec demand)
        : cost_(std::move(cost)), a_(std::move(supply)), b_(std::move(demand)) {
        m_ = static_cast<int>(a_.size());
        n_ = static_cast<int>(b_.size());
        if (m_ == 0 || n_ == 0) throw std::invalid_argument("transport: empty measure");
        double sa = a_.sum(), sb = b_.sum();
        if (sa <= 0.0 || sb <= 0.0) throw std::invalid_argument("transport: zero total mass");
        b_ *= sa / sb;  // balance exactly
        eps_ = 1e-12 * (1.0 + cost_.cwiseAbs().maxCoeff());
    }

    double solve() {
        northwest_corner();
        const long pivot_cap = 20000L * (m_ + n_) + 100000L;
        long degenerate_run = 0;
        for (long pivot = 0; pivot < pivot_cap; ++pivot) {
            compute_duals();
            bool bland = degenerate_run > 100 + 10L * (m_ + n_);
            int ei, ej;
            if (!find_entering(bland, ei, ej)) return objective();
            double theta = pivot_on(ei, ej);
            degenerate_run = theta > 0.0 ? 0 : degenerate_run + 1;
        }
        throw std::runtime_error("transport: pivot cap exceeded");
    }

    Mat plan() const {
        Mat p = Mat::Zero(m_, n_);
        for (int c = 0; c < static_cast<int>(row_.size()); ++c)
            if (alive_[c]) p(row_[c], col_[c]) = std::max(flow_[c], 0.0);
        return p;
    }

private:
    void add_cell(int i, int j, double f) {
        int c = static_cast<int>(row_.size());
        row_.push_back(i);
        col_.push_back(j);
        flow_.push_back(f);
        alive_.push_back(true);
        adj_row_[i].push_back(c);
        adj_col_[j].push_back(c);
    }

    void northwest_corner() {
        adj_row_.assign(m_, {});
        adj_col_.assign(n_, {});
        Vec ra = a_, rb = b_;
        int i = 0, j = 0;
        while (i < m_ && j < n_) {
            double f = std::min(ra[i], rb[j]);
            add_cell(i, j, f);
            ra[i] -= f;
            rb[j] -= f;
            bool last = (i == m_ - 1 && j == n_ - 1);
            if (last) break;
            // advance exactly one index so the basis stays a spanning tree
            if (ra[i] <= rb[j] && i < m_ - 1)
                ++i;
            else
                ++j;
        }
    }

    void compute_duals() {
        u_.assign(m_, 0.0);
        v_.assign(n_, 0.0);
        std::vector<char> seen_r(m_, 0), seen_c(n_, 0);
        std::deque<int> queue;  // nodes: rows [0,m), cols [m, m+n)
        seen_r[0] = 1;
        queue.push_back(0);
        while (!queue.empty()) {
            int node = queue.front();
            queue.pop_front();
            if (node < m_) {
                for (int c : adj_row_[node]) {
                    if (!alive_[c]) continue;
                    int j = col_[c];
                    if (!seen_c[j]) {
                        v_[j] = cost_(node, j) - u_[node];
                        seen_c[j] = 1;
                        queue.push_back(m_ + j);
                    }
                }
            } else {
                int j = node - m_;
                for (int c : adj_col_[j]) {
                    if (!alive_[c]) continue;
                    int i = row_[c];
                    if (!seen_r[i]) {
                        u_[i] = cost_(i, j) - v_[j];
                        seen_r[i] = 1;
                        queue.push_back(i);
                    }
                }
            }
        }
    }

    bool find_entering(bool bland, int& ei, int& ej) const {
        double best = -eps_;
        ei = ej = -1;
        for (int i = 0; i < m_; ++i) {
            for (int j = 0; j < n_; ++j) {
                double rc = cost_(i, j) - u_[i] - v_[j];
                if (rc < best) {
                    best = rc;
                    ei = i;
                    ej = j;
                    if (bland) return true;  // first improving cell in index order
                }
            }
        }
        return ei >= 0;
    }

    // Unique tree path between the entering cell's endpoints, as cell ids
    // ordered from the column end.
    std::vector<int> tree_path(int ei, int ej) const {
        std::vector<int> parent_edge(m_ + n_, -1);
        std::vector<char> seen(m_ + n_, 0);
        std::deque<int> queue;
        seen[ei] = 1;
        queue.push_back(ei);
        int target = m_ + ej;
        while (!queue.empty()) {
            int node = queue.front();
            queue.pop_front();
            if (node == target) break;
            const auto& edges = node < m_ ? adj_row_[node] : adj_col_[node - m_];
            for (int c : edges) {
                if (!alive_[c]) continue;
                int other = node < m_ ? m_ + col_[c] : row_[c];
                if (!seen[other]) {
                    seen[other] = 1;
                    parent_edge[other] = c;
                    queue.push_back(other);
                }
            }
        }
        std::vector<int> path;
        int node = target;
        while (node != ei) {
            int c = parent_edge[node];
            if (c < 0) throw std::runtime_error("transport: basis is not connected");
            path.push_back(c);
            node = (node >= m_) ? row_[c] : m_ + col_[c];
        }
        return path;
    }

    double pivot_on(int ei, int ej) {
        std::vector<int> path = tree_path(ei, ej);
        // Cells at even positions (from the column end) lose flow.
        double theta = std::numeric_limits<double>::infinity();
        int leaving = -1;
        for (std::size_t k = 0; k < path.size(); k += 2) {
            int c = path[k];
            if (flow_[c] < theta ||
                (flow_[c] == theta && leaving >= 0 &&
                 (row_[c] < row_[leaving] || (row_[c] == row_[leaving] && col_[c] < col_[leaving])))) {
                theta = flow_[c];
                leaving = c;
            }
        }
        for (std::size_t k = 0; k < path.size(); ++k)
            flow_[path[k]] += (k % 2 == 0) ? -theta : theta;
        remove_cell(leaving);
        add_cell(ei, ej, theta);
        return theta;
    }

    void remove_cell(int c) {
        alive_[c] = false;
        auto scrub = [c](std::vector<int>& v) {
            for (std::size_t k = 0; k < v.size(); ++k)
                if (v[k] == c) {
                    v[k] = v.back();
                    v.pop_back();
                    return;
                }
        };
        scrub(adj_row_[row_[c]]);
        scrub(adj_col_[col_[c]]);
    }

    double objective() const {
        double acc = 0.0;
        for (int c = 0; c < static_cast<int>(row_.size()); ++c)
            if (alive_[c] && flow_[c] > 0.0) acc += flow_[c] * cost_(row_[c], col_[c]);
        return acc;
    }

    Mat cost_;
    Vec a_, b_;
    int m_ = 0, n_ = 0;
    double eps_ = 1e-12;
    std::vector<int> row_, col_;
    std::vector<double> flow_;
    std::vector<char> alive_;
    std::vector<std::vector<int>> adj_row_, adj_col_;
    std::vector<double> u_, v_;
};

inline Mat pairwise_cost(const SpatialMeasure& m1, const SpatialMeasure& m2, int p) {
    Mat c(m1.size(), m2.size());
    for (int i = 0; i < m1.size(); ++i)
        for (int j = 0; j < m2.size(); ++j) {
            double d = (m1.points().col(i) - m2.points().col(j)).norm();
            c(i, j) = p == 1 ? d : d * d;
        }
    return c;
}

}  // namespace detail

// Exact Kantorovich-Rubinstein distance between finitely supported measures:
// optimal value of the transport linear program with cost |x - y|.
inline double kantorovich_d1(const SpatialMeasure& m1, const SpatialMeasure& m2) {
    if (m1.size() == 0 || m2.size() == 0)
        throw std::invalid_argument("kantorovich_d1: empty measure");
    if (m1.dim() != m2.dim())
        throw std::invalid_argument("kantorovich_d1: dimension mismatch");
    detail::TransportSimplex s(detail::pairwise_cost(m1, m2, 1), m1.weights(), m2.weights());
    return s.solve();
}

// p = 2 variant: the root of the squared-cost optimum.
inline double kantorovich_d2(const SpatialMeasure& m1, const SpatialMeasure& m2) {
    if (m1.size() == 0 || m2.size() == 0)
        throw std::invalid_argument("kantorovich_d2: empty measure");
    if (m1.dim() != m2.dim())
        throw std::invalid_argument("kantorovich_d2: dimension mismatch");
    detail::TransportSimplex s(detail::pairwise_cost(m1, m2, 2), m1.weights(), m2.weights());
    return std::sqrt(std::max(s.solve(), 0.0));
}

// Optimal coupling realizing d_p.
inline TransportPlan optimal_transport_plan(const SpatialMeasure& m1, const SpatialMeasure& m2,
                                            int p = 1) {
    detail::TransportSimplex s(detail::pairwise_cost(m1, m2, p), m1.weights(), m2.weights());
    s.solve();
    return TransportPlan(m1, m2, s.plan());
}

}  // namespace mfg
