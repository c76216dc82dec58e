#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mfg/arc.hpp"
#include "mfg/costs.hpp"
#include "mfg/errors.hpp"
#include "mfg/geometry.hpp"
#include "mfg/measure.hpp"
#include "mfg/parallel.hpp"

namespace mfg {

struct BestResponseConfig {
    int multistart_count = 4;   // constant arc, sampled line, random perturbations
    int max_iters = 400;
    double gradient_tol = 1e-6;       // projected-gradient norm at the returned point
    double armijo_sigma = 1e-4;       // sufficient-decrease coefficient
    double backtrack_factor = 0.5;
    double initial_step = 1.0;
    int max_backtracks = 45;
    double perturbation_scale = 0.15;  // restart noise, relative to domain diameter
    double feasibility_tol = -1.0;     // < 0: use 1e-9 * diameter
    double tie_tol = 1e-6;             // minimizers within this of the best are ties

    void validate() const {
        if (multistart_count < 1 || max_iters < 1 || gradient_tol <= 0 || armijo_sigma <= 0 ||
            backtrack_factor <= 0 || backtrack_factor >= 1 || initial_step <= 0 ||
            perturbation_scale <= 0 || tie_tol <= 0)
            throw std::invalid_argument("BestResponseConfig: all parameters must be positive");
    }

    double feasibility(const Domain& domain) const {
        return feasibility_tol >= 0.0 ? feasibility_tol : default_feasibility_tol(domain);
    }
};

struct BestResponseResult {
    Arc arc;
    double value = 0.0;
    bool converged = false;
    double pg_norm = 0.0;   // projected-gradient norm at the returned point
    int iterations = 0;
    std::vector<Arc> ties;  // distinct minimizers within tie_tol of `value`
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Objective and gradient of the discretized trajectory cost over the free
// nodes (node 0 pinned). Nodes are a dim x (N+1) matrix.
class TrajectoryObjective {
public:
    TrajectoryObjective(const Domain& domain, const BoundFlow& flow, const Lagrangian& L)
        : domain_(domain), flow_(flow), L_(L), dt_(flow.grid.dt()), steps_(flow.grid.steps) {}

    double value(const Mat& nodes) const {
        double acc = 0.0;
        Vec vel(nodes.rows()), mid(nodes.rows());
        for (int k = 0; k < steps_; ++k) {
            vel = (nodes.col(k + 1) - nodes.col(k)) / dt_;
            mid = 0.5 * (nodes.col(k) + nodes.col(k + 1));
            acc += dt_ * L_.value(mid, vel);
        }
        for (int k = 0; k <= steps_; ++k)
            acc += node_weight(k) * flow_.running[k]->value(nodes.col(k));
        acc += flow_.terminal->value(nodes.col(steps_));
        return acc;
    }

    // Gradient with respect to nodes 1..N, laid out as dim x N.
    Mat gradient(const Mat& nodes) const {
        int dim = static_cast<int>(nodes.rows());
        Mat grad = Mat::Zero(dim, steps_);
        Vec vel(dim), mid(dim), gx(dim), gv(dim);
        for (int k = 0; k < steps_; ++k) {
            vel = (nodes.col(k + 1) - nodes.col(k)) / dt_;
            mid = 0.5 * (nodes.col(k) + nodes.col(k + 1));
            gx = (0.5 * dt_) * L_.grad_x(mid, vel);
            gv = L_.grad_v(mid, vel);
            // node k+1 side of segment k
            grad.col(k) += gx + gv;
            // node k side of segment k (skip the pinned start)
            if (k >= 1) grad.col(k - 1) += gx - gv;
        }
        for (int k = 1; k <= steps_; ++k)
            grad.col(k - 1) += node_weight(k) * flow_.running[k]->gradient(nodes.col(k));
        grad.col(steps_ - 1) += flow_.terminal->gradient(nodes.col(steps_));
        return grad;
    }

    // Node-wise metric projection of the free nodes; false if any node left
    // the tube where the projection formula is valid.
    bool project_free_nodes(Mat& nodes) const {
        for (int k = 1; k <= steps_; ++k) {
            double b = domain_.signed_distance(nodes.col(k));
            if (b >= domain_.tube_radius()) return false;
            if (b > 0.0) nodes.col(k) = nodes.col(k) - b * domain_.gradient(nodes.col(k));
        }
        return true;
    }

    double node_weight(int k) const { return (k == 0 || k == steps_) ? 0.5 * dt_ : dt_; }

private:
    const Domain& domain_;
    const BoundFlow& flow_;
    const Lagrangian& L_;
    double dt_;
    int steps_;
};

// ||X - P(X - s g)|| / s at a tube-safe probe step.
inline double stationarity_probe(const TrajectoryObjective& obj, const Mat& nodes, const Mat& grad,
                                 double probe) {
    Mat trial = nodes;
    trial.rightCols(grad.cols()) -= probe * grad;
    if (!obj.project_free_nodes(trial)) return std::numeric_limits<double>::infinity();
    return (trial - nodes).norm() / probe;
}

inline double stationarity(const TrajectoryObjective& obj, const Mat& nodes, const Mat& grad) {
    double gmax = grad.cwiseAbs().maxCoeff();
    double probe = gmax > 0 ? std::min(1.0, 1e-3 / gmax) : 1.0;
    return stationarity_probe(obj, nodes, grad, probe);
}

struct DescentOutcome {
    Mat nodes;
    double value = 0.0;
    double pg_norm = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Projected gradient descent with Barzilai-Borwein trial steps and a
// monotone backtracking safeguard; node-wise projection onto the closure
// after every trial step. The objective never increases across accepted
// steps.
inline DescentOutcome projected_descent(const TrajectoryObjective& obj, Mat start,
                                        const BestResponseConfig& cfg, double scale) {
    DescentOutcome out;
    out.nodes = std::move(start);
    out.value = obj.value(out.nodes);
    const double tol = cfg.gradient_tol * scale;
    const double step_max = cfg.initial_step * 1e3;
    const double step_min = cfg.initial_step * 1e-12;
    double step = cfg.initial_step;
    Mat prev_nodes, prev_grad;
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        out.iterations = iter + 1;
        Mat grad = obj.gradient(out.nodes);
        if (grad.norm() <= tol) {
            out.pg_norm = grad.norm();
            out.converged = true;
            return out;
        }
        if (iter > 0) {
            // spectral (BB1) trial step from the last curvature pair
            Mat sk = out.nodes.rightCols(grad.cols()) - prev_nodes.rightCols(grad.cols());
            Mat yk = grad - prev_grad;
            double sy = (sk.array() * yk.array()).sum();
            double ss = sk.squaredNorm();
            step = sy > 1e-30 ? std::clamp(ss / sy, step_min, step_max) : std::min(step * 2.0, step_max);
        }
        prev_nodes = out.nodes;
        prev_grad = grad;
        bool accepted = false;
        double s = step;
        for (int bt = 0; bt < cfg.max_backtracks; ++bt, s *= cfg.backtrack_factor) {
            Mat trial = out.nodes;
            trial.rightCols(grad.cols()) -= s * grad;
            if (!obj.project_free_nodes(trial)) continue;  // left the tube: shrink
            double trial_value = obj.value(trial);
            double moved = (trial - out.nodes).squaredNorm();
            if (trial_value <= out.value - cfg.armijo_sigma / s * moved) {
                out.pg_norm = std::sqrt(moved) / s;
                out.nodes = std::move(trial);
                out.value = trial_value;
                accepted = true;
                if (out.pg_norm <= tol) {
                    out.converged = true;
                    return out;
                }
                break;
            }
        }
        if (!accepted) {
            // no feasible decrease direction at line-search resolution
            out.pg_norm = stationarity(obj, out.nodes, grad);
            out.converged = out.pg_norm <= tol;
            return out;
        }
    }
    Mat grad = obj.gradient(out.nodes);
    out.pg_norm = stationarity(obj, out.nodes, grad);
    out.converged = out.pg_norm <= tol;
    return out;
}

}  // namespace detail

// Solves min J over arcs starting at x and staying in the closure, by
// projected gradient descent from several starts. The returned arc is the
// best found; ties within tie_tol are reported so callers may split mass.
inline BestResponseResult best_response(const Domain& domain, const Vec& x, const BoundFlow& flow,
                                        const Lagrangian& L, const BestResponseConfig& cfg,
                                        std::uint64_t seed = 0,
                                        const std::vector<Arc>* warm_starts = nullptr) {
    cfg.validate();
    double feas_tol = cfg.feasibility(domain);
    if (domain.signed_distance(x) > feas_tol)
        throw InfeasibleStart("best_response: b(x) = " + std::to_string(domain.signed_distance(x)));

    const TimeGrid& grid = flow.grid;
    detail::TrajectoryObjective obj(domain, flow, L);

    std::vector<Mat> starts;
    if (warm_starts)
        for (const Arc& w : *warm_starts)
            if (w.grid == grid && w.nodes.cols() == grid.nodes() &&
                (w.start() - x).norm() < 1e-14)
                starts.push_back(w.nodes);

    starts.push_back(Arc::constant(grid, x).nodes);
    std::mt19937_64 rng(detail::splitmix64(seed ^ 0x5bd1e9955bd1e995ull));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Box& box = domain.bounding_box();
    auto sample_feasible = [&] {
        for (int tries = 0; tries < 200; ++tries) {
            Vec z(domain.dim());
            for (int i = 0; i < domain.dim(); ++i)
                z[i] = box.lo[i] + unif(rng) * (box.hi[i] - box.lo[i]);
            if (domain.signed_distance(z) < -0.05 * domain.diameter()) return z;
        }
        return x;
    };
    if (cfg.multistart_count >= 2) starts.push_back(Arc::line(grid, x, sample_feasible()).nodes);
    std::normal_distribution<double> gauss;
    while (static_cast<int>(starts.size()) <
           cfg.multistart_count + (warm_starts ? static_cast<int>(warm_starts->size()) : 0)) {
        // random feasible perturbation: a projected random walk from x
        Mat nodes(domain.dim(), grid.nodes());
        nodes.col(0) = x;
        double sigma = cfg.perturbation_scale * domain.diameter() * std::sqrt(grid.dt());
        for (int k = 1; k < grid.nodes(); ++k) {
            Vec stepv(domain.dim());
            for (int i = 0; i < domain.dim(); ++i) stepv[i] = sigma * gauss(rng);
            Vec cand = nodes.col(k - 1) + stepv;
            if (domain.distance(cand) >= domain.tube_radius()) cand = nodes.col(k - 1);
            nodes.col(k) = domain.project_to_closure(cand);
        }
        starts.push_back(std::move(nodes));
    }

    double scale = std::max(1.0, 1.0 / domain.diameter());
    BestResponseResult best;
    best.value = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, Mat>> finishers;
    for (const Mat& s0 : starts) {
        auto outcome = detail::projected_descent(obj, s0, cfg, scale);
        finishers.emplace_back(outcome.value, outcome.nodes);
        if (outcome.value < best.value) {
            best.value = outcome.value;
            best.arc = Arc(grid, outcome.nodes);
            best.converged = outcome.converged;
            best.pg_norm = outcome.pg_norm;
            best.iterations = outcome.iterations;
        }
    }
    // distinct ties within tolerance of the best value
    double distinct_tol = 1e-6 * domain.diameter();
    for (auto& [val, nodes] : finishers) {
        if (val > best.value + cfg.tie_tol) continue;
        if ((nodes - best.arc.nodes).cwiseAbs().maxCoeff() <= distinct_tol) continue;
        bool dup = false;
        for (const Arc& t : best.ties)
            if ((nodes - t.nodes).cwiseAbs().maxCoeff() <= distinct_tol) {
                dup = true;
                break;
            }
        if (!dup) best.ties.emplace_back(grid, nodes);
    }
    return best;
}

// Convenience overload taking raw snapshots; binds the couplings first.
inline BestResponseResult best_response(const Domain& domain, const Vec& x,
                                        const std::vector<SpatialMeasure>& flow_snapshots,
                                        const TimeGrid& grid, const Lagrangian& L,
                                        const Coupling& F, const Coupling& G,
                                        const BestResponseConfig& cfg, std::uint64_t seed = 0) {
    auto flow = BoundFlow::bind(grid, flow_snapshots, F, G, 1e-5 * domain.diameter());
    return best_response(domain, x, flow, L, cfg, seed);
}

struct ExploitabilityResult {
    double value = 0.0;
    bool all_converged = true;
    // per distinct start point, in disintegration order
    std::vector<double> best_values;
    std::vector<BestResponseResult> responses;
};

// Weighted average gap between the cost of the support arcs and the best
// achievable cost from the same start points: zero exactly at equilibrium.
inline ExploitabilityResult exploitability(const Domain& domain, const ArcMeasure& eta,
                                           const Lagrangian& L, const Coupling& F,
                                           const Coupling& G, const BestResponseConfig& cfg,
                                           std::uint64_t seed = 0) {
    const TimeGrid& grid = eta.grid();
    std::vector<SpatialMeasure> snapshots;
    snapshots.reserve(grid.nodes());
    for (int k = 0; k < grid.nodes(); ++k) snapshots.push_back(pushforward(eta, grid.node(k)));
    auto flow = BoundFlow::bind(grid, std::move(snapshots), F, G, 1e-5 * domain.diameter());

    Disintegration groups = disintegrate(eta);
    std::vector<double> support_cost(eta.size());
    for (int i = 0; i < eta.size(); ++i) support_cost[i] = total_cost(eta.arc(i), flow, L);

    ExploitabilityResult out;
    out.responses.resize(groups.size());
    parallel_for(groups.size(), [&](std::size_t g) {
        // warm start from the cheapest support arc of this group
        const ArcMeasure& cond = groups.conditionals[g];
        const Arc* cheapest = &cond.arc(0);
        double cheapest_cost = std::numeric_limits<double>::infinity();
        for (int i = 0; i < cond.size(); ++i) {
            double c = total_cost(cond.arc(i), flow, L);
            if (c < cheapest_cost) {
                cheapest_cost = c;
                cheapest = &cond.arc(i);
            }
        }
        std::vector<Arc> warm{*cheapest};
        out.responses[g] = best_response(domain, groups.points[g], flow, L, cfg,
                                         detail::splitmix64(seed + 31 * g), &warm);
    });

    out.best_values.reserve(groups.size());
    double acc = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        out.best_values.push_back(out.responses[g].value);
        out.all_converged = out.all_converged && out.responses[g].converged;
        const ArcMeasure& cond = groups.conditionals[g];
        for (int i = 0; i < cond.size(); ++i) {
            double w = groups.marginal_weights[g] * cond.weight(i);
            acc += w * (total_cost(cond.arc(i), flow, L) - out.responses[g].value);
        }
    }
    out.value = acc;
    return out;
}

}  // namespace mfg
