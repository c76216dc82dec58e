#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfg/best_response.hpp"
#include "mfg/costs.hpp"
#include "mfg/measure.hpp"
#include "mfg/parallel.hpp"
#include "mfg/transport.hpp"

namespace mfg {

struct SolverConfig {
    int max_outer_iters = 200;
    double exploitability_tol = 1e-3;
    // damping: eta_{k+1} = (1 - alpha_k) eta_k + alpha_k beta_k with
    // alpha_k = 1/(k+1) (averaged fictitious play) or a fixed constant.
    bool harmonic_damping = true;
    double fixed_alpha = 0.5;
    bool atom_splitting = false;  // split mass across reported ties
    std::uint64_t seed = 0;
    double arc_merge_tol = -1.0;  // < 0: 1e-5 * diameter; merged arcs pool weight

    void validate() const {
        if (max_outer_iters < 1 || exploitability_tol <= 0)
            throw std::invalid_argument("SolverConfig: iterations and tolerance must be positive");
        if (!harmonic_damping && (fixed_alpha <= 0.0 || fixed_alpha > 1.0))
            throw std::invalid_argument("SolverConfig: fixed alpha must lie in (0, 1]");
    }

    double alpha(int iteration) const {
        return harmonic_damping ? 1.0 / (iteration + 1.0) : fixed_alpha;
    }

    double merge_tol(const Domain& domain) const {
        return arc_merge_tol >= 0.0 ? arc_merge_tol : 1e-5 * domain.diameter();
    }
};

struct IterationRecord {
    int iteration = 0;
    double exploitability = 0.0;
    double max_energy = 0.0;
    double wall_time_s = 0.0;
};

// All certificate entries are recomputed from the returned measure, never
// trusted from solver state.
struct EquilibriumCertificate {
    bool converged = false;
    double exploitability = 0.0;
    double exploitability_tol = 0.0;
    double holder_K = 0.0;            // energy bound from the cost data
    double max_energy = 0.0;          // max ||gamma'||_2 over the support
    bool energy_ok = false;           // max_energy <= K + 1e-6
    double worst_holder_slack = 0.0;  // min over grid pairs of K sqrt(dt) - d1
    bool holder_ok = false;
    bool marginal_ok = false;         // e_0 # eta = m0, atom by atom
    bool all_responses_converged = true;
    std::vector<IterationRecord> trace;
};

// Problem data for the solver; the scenario loader in the CLI builds this.
struct Problem {
    DomainPtr domain;
    LagrangianPtr lagrangian;
    CouplingPtr running;   // F
    CouplingPtr terminal;  // G
    SpatialMeasure m0;
    TimeGrid grid;
    BestResponseConfig br;
};

namespace detail {

inline std::vector<SpatialMeasure> flow_snapshots(const ArcMeasure& eta) {
    std::vector<SpatialMeasure> snaps;
    snaps.reserve(eta.grid().nodes());
    for (int k = 0; k < eta.grid().nodes(); ++k) snaps.push_back(pushforward(eta, eta.grid().node(k)));
    return snaps;
}

// Support bookkeeping for fictitious play: arcs tagged by their m0 atom,
// with per-atom conditional weights kept normalized so the initial marginal
// is preserved exactly under mixing.
struct SupportState {
    const SpatialMeasure* m0 = nullptr;
    std::vector<Arc> arcs;
    std::vector<int> atom;          // owning m0 atom index
    std::vector<double> cond;      // conditional weight within the atom group

    void renormalize_groups() {
        std::vector<double> mass(m0->size(), 0.0);
        for (std::size_t i = 0; i < arcs.size(); ++i) mass[atom[i]] += cond[i];
        for (std::size_t i = 0; i < arcs.size(); ++i) cond[i] /= mass[atom[i]];
    }

    // (1 - alpha) * existing + alpha * dirac(new arc for this atom), with
    // near-identical arcs pooled.
    void mix_in(int atom_idx, const std::vector<std::pair<Arc, double>>& additions, double alpha,
                double merge_tol) {
        for (std::size_t i = 0; i < arcs.size(); ++i)
            if (atom[i] == atom_idx) cond[i] *= (1.0 - alpha);
        for (const auto& [arc, share] : additions) {
            int found = -1;
            for (std::size_t i = 0; i < arcs.size(); ++i)
                if (atom[i] == atom_idx &&
                    (arcs[i].nodes - arc.nodes).cwiseAbs().maxCoeff() <= merge_tol) {
                    found = static_cast<int>(i);
                    break;
                }
            if (found >= 0) {
                cond[found] += alpha * share;
            } else {
                arcs.push_back(arc);
                atom.push_back(atom_idx);
                cond.push_back(alpha * share);
            }
        }
        // drop numerically dead atoms, keeping group mass exact
        std::vector<Arc> karcs;
        std::vector<int> katom;
        std::vector<double> kcond;
        for (std::size_t i = 0; i < arcs.size(); ++i) {
            if (cond[i] > 1e-15) {
                karcs.push_back(std::move(arcs[i]));
                katom.push_back(atom[i]);
                kcond.push_back(cond[i]);
            }
        }
        arcs = std::move(karcs);
        atom = std::move(katom);
        cond = std::move(kcond);
    }

    ArcMeasure measure() const {
        std::vector<double> mass(m0->size(), 0.0);
        for (std::size_t i = 0; i < arcs.size(); ++i) mass[atom[i]] += cond[i];
        Vec w(arcs.size());
        for (std::size_t i = 0; i < arcs.size(); ++i)
            w[static_cast<int>(i)] = m0->weight(atom[i]) * cond[i] / mass[atom[i]];
        return ArcMeasure::unchecked(arcs, std::move(w), *m0);
    }
};

}  // namespace detail

struct SolveResult {
    ArcMeasure equilibrium;
    EquilibriumCertificate certificate;
};

// Recomputes every certificate entry from scratch for a candidate measure:
// exploitability, the energy bound over the support, the flow Hoelder bound
// on all grid pairs, and the initial-marginal constraint.
inline EquilibriumCertificate verify(const Problem& problem, const ArcMeasure& eta,
                                     const std::vector<IterationRecord>& trace = {},
                                     std::uint64_t verify_seed = 0x5eedULL) {
    EquilibriumCertificate cert;
    cert.trace = trace;
    cert.exploitability_tol = -1.0;  // unset; solve() fills it

    auto expl = exploitability(*problem.domain, eta, *problem.lagrangian, *problem.running,
                               *problem.terminal, problem.br, verify_seed);
    cert.exploitability = expl.value;
    cert.all_responses_converged = expl.all_converged;

    cert.holder_K = holder_constant(*problem.lagrangian, *problem.running, *problem.terminal,
                                    problem.grid.horizon, *problem.domain);
    cert.max_energy = eta.max_energy_norm();
    cert.energy_ok = cert.max_energy <= cert.holder_K + 1e-6;

    auto snaps = detail::flow_snapshots(eta);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < problem.grid.nodes(); ++i)
        for (int j = i + 1; j < problem.grid.nodes(); ++j) {
            double bound = cert.holder_K * std::sqrt(problem.grid.node(j) - problem.grid.node(i));
            double slack = bound - kantorovich_d1(snaps[i], snaps[j]);
            worst = std::min(worst, slack);
        }
    cert.worst_holder_slack = worst;
    cert.holder_ok = worst >= -1e-9;

    cert.marginal_ok = true;
    SpatialMeasure start = pushforward(eta, 0.0);
    if (start.size() != eta.initial_marginal().size()) cert.marginal_ok = false;
    if (cert.marginal_ok) {
        for (int g = 0; g < start.size(); ++g) {
            bool hit = false;
            for (int j = 0; j < eta.initial_marginal().size(); ++j)
                if (start.point(g) == eta.initial_marginal().point(j) &&
                    std::abs(start.weight(g) - eta.initial_marginal().weight(j)) <= kWeightSumTol) {
                    hit = true;
                    break;
                }
            if (!hit) {
                cert.marginal_ok = false;
                break;
            }
        }
    }
    // weight-sum sanity on the candidate itself
    if (std::abs(eta.weights().sum() - 1.0) > kWeightSumTol) cert.marginal_ok = false;
    return cert;
}

// Damped fictitious play on the best-response map: at each step the flow of
// the current measure is frozen, one best response per m0 atom is computed
// against it (a measurable selection from the optimal sets), and the next
// iterate is the convex combination of the two measures. Stops when the
// exploitability of the current iterate meets the tolerance.
inline SolveResult solve(const Problem& problem, const SolverConfig& cfg) {
    cfg.validate();
    problem.br.validate();
    const Domain& domain = *problem.domain;
    const TimeGrid& grid = problem.grid;

    auto assumptions = check_assumptions(*problem.lagrangian, domain);
    if (!assumptions.ok())
        throw AssumptionViolation("solve: Lagrangian fails its declared assumption checks");
    for (int j = 0; j < problem.m0.size(); ++j)
        if (domain.signed_distance(problem.m0.point(j)) > problem.br.feasibility(domain))
            throw InfeasibleStart("solve: m0 atom " + std::to_string(j) + " is infeasible");

    double merge_tol = cfg.merge_tol(domain);
    detail::SupportState state;
    state.m0 = &problem.m0;
    for (int j = 0; j < problem.m0.size(); ++j) {
        state.arcs.push_back(Arc::constant(grid, problem.m0.point(j)));
        state.atom.push_back(j);
        state.cond.push_back(1.0);
    }

    std::vector<IterationRecord> trace;
    std::vector<Arc> previous_br(problem.m0.size(), Arc());
    bool have_previous = false;

    ArcMeasure best_eta = state.measure();
    double best_expl = std::numeric_limits<double>::infinity();
    bool converged = false;
    bool responses_converged = true;
    auto t0 = std::chrono::steady_clock::now();

    for (int iter = 0; iter < cfg.max_outer_iters; ++iter) {
        ArcMeasure eta = state.measure();
        auto flow = BoundFlow::bind(grid, detail::flow_snapshots(eta), *problem.running,
                                    *problem.terminal, 1e-5 * domain.diameter());

        // one best response per m0 atom against the frozen flow
        std::vector<BestResponseResult> responses(problem.m0.size());
        parallel_for(problem.m0.size(), [&](std::size_t j) {
            std::vector<Arc> warm;
            if (have_previous) warm.push_back(previous_br[j]);
            // cheapest current support arc of this atom keeps the gap nonnegative
            double best_cost = std::numeric_limits<double>::infinity();
            int best_idx = -1;
            for (std::size_t i = 0; i < state.arcs.size(); ++i)
                if (state.atom[i] == static_cast<int>(j)) {
                    double c = total_cost(state.arcs[i], flow, *problem.lagrangian);
                    if (c < best_cost) {
                        best_cost = c;
                        best_idx = static_cast<int>(i);
                    }
                }
            if (best_idx >= 0) warm.push_back(state.arcs[best_idx]);
            responses[j] =
                best_response(domain, problem.m0.point(j), flow, *problem.lagrangian, problem.br,
                              detail::splitmix64(cfg.seed ^ (0x9e37ull * (iter + 1) + j)), &warm);
        });

        // exploitability of the current iterate against its own flow
        double expl = 0.0;
        bool all_conv = true;
        for (std::size_t i = 0; i < state.arcs.size(); ++i) {
            double w = problem.m0.weight(state.atom[i]) * state.cond[i];
            expl += w * (total_cost(state.arcs[i], flow, *problem.lagrangian) -
                         responses[state.atom[i]].value);
        }
        // conditional weights are normalized per group up to roundoff
        for (const auto& r : responses) all_conv = all_conv && r.converged;

        IterationRecord rec;
        rec.iteration = iter;
        rec.exploitability = expl;
        rec.max_energy = eta.max_energy_norm();
        rec.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        trace.push_back(rec);

        if (expl < best_expl) {
            best_expl = expl;
            best_eta = eta;
            responses_converged = all_conv;
        }
        if (expl <= cfg.exploitability_tol) {
            converged = true;
            break;
        }

        // mix the best-response measure in and renormalize the groups
        double alpha = cfg.alpha(iter);
        for (int j = 0; j < problem.m0.size(); ++j) {
            std::vector<std::pair<Arc, double>> additions;
            if (cfg.atom_splitting && !responses[j].ties.empty()) {
                double share = 1.0 / (1.0 + responses[j].ties.size());
                additions.emplace_back(responses[j].arc, share);
                for (const Arc& t : responses[j].ties) additions.emplace_back(t, share);
            } else {
                additions.emplace_back(responses[j].arc, 1.0);
            }
            state.mix_in(j, additions, alpha, merge_tol);
        }
        state.renormalize_groups();
        previous_br.assign(responses.size(), Arc());
        for (std::size_t j = 0; j < responses.size(); ++j) previous_br[j] = responses[j].arc;
        have_previous = true;
    }

    SolveResult result{best_eta, EquilibriumCertificate{}};
    result.certificate = verify(problem, best_eta, trace);
    result.certificate.converged = converged && result.certificate.exploitability <=
                                                    cfg.exploitability_tol + 1e-12;
    result.certificate.exploitability_tol = cfg.exploitability_tol;
    result.certificate.all_responses_converged =
        result.certificate.all_responses_converged && responses_converged;
    return result;
}

}  // namespace mfg
