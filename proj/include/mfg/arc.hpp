#pragma once

#include <cmath>
#include <stdexcept>

#include "mfg/errors.hpp"
#include "mfg/geometry.hpp"
#include "mfg/types.hpp"

namespace mfg {

// Uniform grid on [0, T].
struct TimeGrid {
    double horizon = 1.0;  // T
    int steps = 1;         // N_t

    TimeGrid() = default;
    TimeGrid(double T, int N) : horizon(T), steps(N) {
        if (!(T > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
        if (N < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
    }

    double dt() const { return horizon / steps; }
    int nodes() const { return steps + 1; }
    double node(int k) const { return k * horizon / steps; }

    bool operator==(const TimeGrid& o) const {
        return horizon == o.horizon && steps == o.steps;
    }
};

// Constrained trajectory, piecewise linear in time: column k of `nodes` is
// the position at t_k, and the velocity on (t_k, t_{k+1}) is the constant
// difference quotient. Immutable value type.
struct Arc {
    TimeGrid grid;
    Mat nodes;  // dim x (steps+1)

    Arc() = default;
    Arc(TimeGrid g, Mat node_matrix) : grid(g), nodes(std::move(node_matrix)) {
        if (nodes.cols() != grid.nodes())
            throw std::invalid_argument("Arc: node count does not match grid");
        if (!nodes.allFinite())
            throw std::invalid_argument("Arc: non-finite node coordinates");
    }

    static Arc constant(TimeGrid g, const Vec& x) {
        Mat m(x.size(), g.nodes());
        m.colwise() = x;
        return Arc(g, std::move(m));
    }

    static Arc line(TimeGrid g, const Vec& from, const Vec& to) {
        Mat m(from.size(), g.nodes());
        for (int k = 0; k < g.nodes(); ++k) {
            double s = static_cast<double>(k) / g.steps;
            m.col(k) = (1.0 - s) * from + s * to;
        }
        return Arc(g, std::move(m));
    }

    int dim() const { return static_cast<int>(nodes.rows()); }
    Vec start() const { return nodes.col(0); }
    Vec end() const { return nodes.col(grid.steps); }

    // Position at time t; exact at grid nodes, linear in between.
    Vec evaluate(double t) const {
        if (t < 0.0 || t > grid.horizon)
            throw OutOfHorizon("Arc::evaluate: t=" + std::to_string(t) +
                               " outside [0," + std::to_string(grid.horizon) + "]");
        int near = static_cast<int>(std::llround(t * grid.steps / grid.horizon));
        if (near >= 0 && near <= grid.steps && t == grid.node(near)) return nodes.col(near);
        double s = t / grid.dt();
        int k = static_cast<int>(std::floor(s));
        if (k >= grid.steps) return nodes.col(grid.steps);
        double w = s - k;
        return (1.0 - w) * nodes.col(k) + w * nodes.col(k + 1);
    }

    // L^2 norm of the piecewise-constant velocity, exact for this arc class:
    // (sum_k |node_{k+1}-node_k|^2 / dt)^{1/2}.
    double energy_norm() const {
        double acc = 0.0;
        double dt = grid.dt();
        for (int k = 0; k < grid.steps; ++k)
            acc += (nodes.col(k + 1) - nodes.col(k)).squaredNorm() / dt;
        return std::sqrt(acc);
    }

    // max over node pairs of |gamma(t_i)-gamma(t_j)| / |t_i-t_j|^{1/2}.
    // Bounded by energy_norm() via Cauchy-Schwarz.
    double holder_modulus() const {
        double dt = grid.dt();
        double worst = 0.0;
        for (int i = 0; i < grid.nodes(); ++i)
            for (int j = i + 1; j < grid.nodes(); ++j) {
                double ratio = (nodes.col(j) - nodes.col(i)).norm() / std::sqrt((j - i) * dt);
                worst = std::max(worst, ratio);
            }
        return worst;
    }

    double max_segment_speed() const {
        double dt = grid.dt();
        double worst = 0.0;
        for (int k = 0; k < grid.steps; ++k)
            worst = std::max(worst, (nodes.col(k + 1) - nodes.col(k)).norm() / dt);
        return worst;
    }

    // Largest b over the nodes; feasible iff <= tolerance.
    double max_signed_distance(const Domain& domain) const {
        double worst = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < grid.nodes(); ++k)
            worst = std::max(worst, domain.signed_distance(nodes.col(k)));
        return worst;
    }

    bool feasible(const Domain& domain, double tol) const {
        return max_signed_distance(domain) <= tol;
    }

    bool operator==(const Arc& o) const { return grid == o.grid && nodes == o.nodes; }
};

// Default feasibility tolerance for arcs in a domain.
inline double default_feasibility_tol(const Domain& domain) {
    return 1e-9 * domain.diameter();
}

// Moves an arc to a nearby start point: translate every node by
// (new_start - node_0) and project the translated nodes back onto the
// closure. The output starts at new_start, is feasible, and stays within
// 2 |new_start - node_0| of the input node-wise.
inline Arc project_arc(const Domain& domain, const Arc& arc, const Vec& new_start) {
    Vec shift = new_start - arc.start();
    double delta = shift.norm();
    if (delta >= domain.tube_radius())
        throw TubeExceeded("project_arc: |new_start - start| = " + std::to_string(delta) +
                           " >= tube radius");
    if (!domain.contains(new_start, default_feasibility_tol(domain)))
        throw InfeasibleStart("project_arc: new_start is outside the closure");
    Mat out(arc.dim(), arc.grid.nodes());
    for (int k = 0; k < arc.grid.nodes(); ++k) {
        Vec shifted = arc.nodes.col(k) + shift;
        double d = domain.distance(shifted);
        if (d >= domain.tube_radius())
            throw TubeExceeded("project_arc: translated node " + std::to_string(k) +
                               " leaves the tube");
        out.col(k) = domain.project_to_closure(shifted);
    }
    out.col(0) = new_start;
    return Arc(arc.grid, std::move(out));
}

}  // namespace mfg
