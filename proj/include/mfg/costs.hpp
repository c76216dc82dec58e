#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mfg/arc.hpp"
#include "mfg/errors.hpp"
#include "mfg/geometry.hpp"
#include "mfg/measure.hpp"
#include "mfg/types.hpp"

namespace mfg {

// ---- Lagrangian --------------------------------------------------------

// Running cost L(x, v) with declared growth constant C and coercivity
// constants c1, c0 (L(x,v) >= c1|v|^2 - c0). Gradients default to central
// differences; implementations with exact gradients override and flag it so
// consistency tests know what to expect.
class Lagrangian {
public:
    Lagrangian(double growth_C, double c1, double c0)
        : growth_C_(growth_C), c1_(c1), c0_(c0) {
        if (c1_ <= 0.0) throw std::invalid_argument("Lagrangian: c1 must be positive");
        if (c0_ < 0.0) throw std::invalid_argument("Lagrangian: c0 must be nonnegative");
        if (growth_C_ <= 0.0) throw std::invalid_argument("Lagrangian: C must be positive");
    }
    virtual ~Lagrangian() = default;

    virtual double value(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& v) const = 0;

    virtual Vec grad_x(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& v) const {
        return fd_grad([&](const Vec& p) { return value(p, v); }, x);
    }

    virtual Vec grad_v(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& v) const {
        return fd_grad([&](const Vec& w) { return value(x, w); }, v);
    }

    virtual bool has_analytic_gradients() const { return false; }

    double growth_constant() const { return growth_C_; }    // C in (L1)
    double coercivity_quadratic() const { return c1_; }     // c1 in (L2)
    double coercivity_offset() const { return c0_; }        // c0 in (L2)

protected:
    static Vec fd_grad(const std::function<double(const Vec&)>& f, const Eigen::Ref<const Vec>& at,
                       double h = 1e-6) {
        Vec g(at.size()), e = at;
        for (int i = 0; i < at.size(); ++i) {
            e[i] = at[i] + h;
            double fp = f(e);
            e[i] = at[i] - h;
            double fm = f(e);
            e[i] = at[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        return g;
    }

private:
    double growth_C_, c1_, c0_;
};

using LagrangianPtr = std::shared_ptr<const Lagrangian>;

// L(x, v) = a |v|^2.
class KineticLagrangian final : public Lagrangian {
public:
    explicit KineticLagrangian(double a = 0.5) : Lagrangian(2.0 * a, a, 0.0), a_(a) {
        if (a <= 0.0) throw std::invalid_argument("KineticLagrangian: coefficient must be positive");
    }

    double value(const Eigen::Ref<const Vec>& /*x*/, const Eigen::Ref<const Vec>& v) const override {
        return a_ * v.squaredNorm();
    }
    Vec grad_x(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>&) const override {
        return Vec::Zero(x.size());
    }
    Vec grad_v(const Eigen::Ref<const Vec>&, const Eigen::Ref<const Vec>& v) const override {
        return 2.0 * a_ * v;
    }
    bool has_analytic_gradients() const override { return true; }

    double coefficient() const { return a_; }

private:
    double a_;
};

// ---- Couplings ---------------------------------------------------------

// A mean-field cost bound to one fixed population snapshot: x -> F(x, m).
class CouplingField {
public:
    virtual ~CouplingField() = default;
    virtual double value(const Eigen::Ref<const Vec>& x) const = 0;

    virtual Vec gradient(const Eigen::Ref<const Vec>& x) const {
        return fd_gradient(x, 1e-6);
    }
    virtual bool has_analytic_gradient() const { return false; }

    Vec fd_gradient(const Eigen::Ref<const Vec>& x, double h) const {
        Vec g(x.size()), e = x;
        for (int i = 0; i < x.size(); ++i) {
            e[i] = x[i] + h;
            double fp = value(e);
            e[i] = x[i] - h;
            double fm = value(e);
            e[i] = x[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        return g;
    }
};

using FieldPtr = std::shared_ptr<const CouplingField>;

// Wraps a field that lacks an analytic gradient with central differences at
// a caller-chosen step (1e-5 * domain diameter in the solvers).
class FDGradientField final : public CouplingField {
public:
    FDGradientField(FieldPtr inner, double step) : inner_(std::move(inner)), step_(step) {}
    double value(const Eigen::Ref<const Vec>& x) const override { return inner_->value(x); }
    Vec gradient(const Eigen::Ref<const Vec>& x) const override {
        return inner_->fd_gradient(x, step_);
    }
    bool has_analytic_gradient() const override { return true; }

private:
    FieldPtr inner_;
    double step_;
};

// Mean-field coupling F(x, m). `bind` freezes the measure argument and may
// precompute; per-point evaluation then goes through the returned field.
class Coupling {
public:
    virtual ~Coupling() = default;
    virtual FieldPtr bind(const SpatialMeasure& m) const = 0;

    virtual double value(const Eigen::Ref<const Vec>& x, const SpatialMeasure& m) const {
        return bind(m)->value(x);
    }

    // Declared structural properties, verified by sampling where needed.
    virtual bool monotone() const { return false; }
    virtual bool strictly_monotone() const { return false; }
};

using CouplingPtr = std::shared_ptr<const Coupling>;

class ZeroCoupling final : public Coupling {
    struct Field final : CouplingField {
        double value(const Eigen::Ref<const Vec>&) const override { return 0.0; }
        Vec gradient(const Eigen::Ref<const Vec>& x) const override { return Vec::Zero(x.size()); }
        bool has_analytic_gradient() const override { return true; }
    };

public:
    FieldPtr bind(const SpatialMeasure&) const override { return std::make_shared<Field>(); }
    double value(const Eigen::Ref<const Vec>&, const SpatialMeasure&) const override { return 0.0; }
    bool monotone() const override { return true; }
    bool strictly_monotone() const override { return false; }
};

// Coupling defined by an arbitrary callable; used for custom couplings
// registered programmatically and in tests.
class FunctionCoupling final : public Coupling {
public:
    using Fn = std::function<double(const Vec&, const SpatialMeasure&)>;

    FunctionCoupling(Fn fn, bool monotone = false, bool strictly = false)
        : fn_(std::move(fn)), monotone_(monotone), strictly_(strictly) {}

    FieldPtr bind(const SpatialMeasure& m) const override {
        struct Field final : CouplingField {
            Fn fn;
            SpatialMeasure m;
            double value(const Eigen::Ref<const Vec>& x) const override { return fn(x, m); }
        };
        auto f = std::make_shared<Field>();
        f->fn = fn_;
        f->m = m;
        return f;
    }

    double value(const Eigen::Ref<const Vec>& x, const SpatialMeasure& m) const override {
        return fn_(x, m);
    }
    bool monotone() const override { return monotone_; }
    bool strictly_monotone() const override { return strictly_; }

private:
    Fn fn_;
    bool monotone_, strictly_;
};

// Terminal cost G(y, m) = scale * |y - target|^2, independent of m.
class QuadraticTargetCoupling final : public Coupling {
    struct Field final : CouplingField {
        Vec target;
        double scale;
        double value(const Eigen::Ref<const Vec>& x) const override {
            return scale * (x - target).squaredNorm();
        }
        Vec gradient(const Eigen::Ref<const Vec>& x) const override {
            return 2.0 * scale * (x - target);
        }
        bool has_analytic_gradient() const override { return true; }
    };

public:
    QuadraticTargetCoupling(Vec target, double scale = 1.0)
        : target_(std::move(target)), scale_(scale) {}

    FieldPtr bind(const SpatialMeasure&) const override {
        auto f = std::make_shared<Field>();
        f->target = target_;
        f->scale = scale_;
        return f;
    }
    bool monotone() const override { return true; }   // gap is identically zero
    bool strictly_monotone() const override { return false; }

    const Vec& target() const { return target_; }
    double scale() const { return scale_; }

private:
    Vec target_;
    double scale_;
};

// Wendland bump: phi(u) = c (1-r)^4 (4r+1), r = |u|/R <= 1. Smooth (C^2),
// even, compactly supported, normalized to unit integral over R^n.
class WendlandKernel {
public:
    WendlandKernel(int dim, double radius) : dim_(dim), radius_(radius) {
        if (radius <= 0.0) throw std::invalid_argument("WendlandKernel: radius must be positive");
        // integral of (1-s)^4 (4s+1) s^{n-1} over [0,1] via beta functions
        auto beta = [](double p, double q) {
            return std::tgamma(p) * std::tgamma(q) / std::tgamma(p + q);
        };
        double radial = 4.0 * beta(dim_ + 1, 5) + beta(dim_, 5);
        double sphere = 2.0 * std::pow(M_PI, dim_ / 2.0) / std::tgamma(dim_ / 2.0);
        norm_ = 1.0 / (sphere * std::pow(radius_, dim_) * radial);
    }

    double radius() const { return radius_; }
    double peak() const { return norm_; }

    // shape (1-r)^4 (4r+1) from the squared distance, without the overall
    // normalization; returns 0 outside the support
    double shape_from_r2(double r2) const {
        if (r2 >= radius_ * radius_) return 0.0;
        double r = std::sqrt(r2) / radius_;
        double omr = 1.0 - r;
        double omr2 = omr * omr;
        return omr2 * omr2 * (4.0 * r + 1.0);
    }

    // radial factor of the gradient: grad phi(u) = shape_grad_from_r2(|u|^2) u
    double shape_grad_from_r2(double r2) const {
        if (r2 >= radius_ * radius_) return 0.0;
        double omr = 1.0 - std::sqrt(r2) / radius_;
        return -20.0 * omr * omr * omr / (radius_ * radius_);
    }

    double operator()(const Eigen::Ref<const Vec>& u) const {
        return norm_ * shape_from_r2(u.squaredNorm());
    }

    Vec gradient(const Eigen::Ref<const Vec>& u) const {
        return (norm_ * shape_grad_from_r2(u.squaredNorm())) * u;
    }

private:
    int dim_;
    double radius_;
    double norm_;
};

// The convolution-type coupling F(x,m) = integral of f(y, (phi*m)(y)) phi(x-y) dy
// over the domain, with phi a smooth even compactly supported kernel and
// z -> f(y,z) strictly increasing. Strictly monotone. The integral is a
// midpoint rule on a uniform grid clipped to the closure; phi*m is an exact
// finite sum since m is atomic.
class ConvolutionCoupling final : public Coupling {
public:
    // Profile f(y, z) = a z + b z^3 with a > 0, b >= 0.
    ConvolutionCoupling(DomainPtr domain, double kernel_radius, double linear = 1.0,
                        double cubic = 0.0, int quad_per_dim = 33)
        : domain_(std::move(domain)),
          kernel_(domain_->dim(), kernel_radius),
          linear_(linear),
          cubic_(cubic) {
        if (linear_ <= 0.0)
            throw std::invalid_argument("ConvolutionCoupling: linear profile coefficient must be positive");
        if (cubic_ < 0.0)
            throw std::invalid_argument("ConvolutionCoupling: cubic profile coefficient must be nonnegative");
        build_quadrature(quad_per_dim);
    }

    double profile(double z) const { return linear_ * z + cubic_ * z * z * z; }

    FieldPtr bind(const SpatialMeasure& m) const override {
        auto field = std::make_shared<Field>();
        field->kernel = kernel_;
        field->points = quad_;
        field->coeff.resize(quad_.cols());
        const int dim = static_cast<int>(quad_.rows());
        const double R = kernel_.radius();
        const double R2 = R * R;
        const double peak = kernel_.peak();
        const double* qs = quad_.data();
        const double* as = m.points().data();
        for (int q = 0; q < quad_.cols(); ++q) {
            const double* yq = qs + static_cast<std::ptrdiff_t>(q) * dim;
            double conv = 0.0;
            for (int a = 0; a < m.size(); ++a) {
                const double* xa = as + static_cast<std::ptrdiff_t>(a) * dim;
                double r2 = 0.0;
                bool near = true;
                for (int i = 0; i < dim; ++i) {
                    double d = yq[i] - xa[i];
                    if (std::abs(d) >= R) {
                        near = false;
                        break;
                    }
                    r2 += d * d;
                }
                if (near && r2 < R2) conv += m.weight(a) * peak * kernel_.shape_from_r2(r2);
            }
            field->coeff[q] = profile(conv) * cell_weight_;
        }
        return field;
    }

    bool monotone() const override { return true; }
    bool strictly_monotone() const override { return true; }

    const Mat& quadrature_points() const { return quad_; }
    double quadrature_weight() const { return cell_weight_; }
    const WendlandKernel& kernel() const { return kernel_; }

private:
    struct Field final : CouplingField {
        WendlandKernel kernel{2, 1.0};
        Mat points;  // dim x Q
        Vec coeff;   // f(y_q, (phi*m)(y_q)) * cell weight

        double value(const Eigen::Ref<const Vec>& x) const override {
            const int dim = static_cast<int>(points.rows());
            const double R = kernel.radius();
            const double R2 = R * R;
            const double* qs = points.data();
            double acc = 0.0;
            for (int q = 0; q < points.cols(); ++q) {
                const double* yq = qs + static_cast<std::ptrdiff_t>(q) * dim;
                double r2 = 0.0;
                bool near = true;
                for (int i = 0; i < dim; ++i) {
                    double d = x[i] - yq[i];
                    if (std::abs(d) >= R) {
                        near = false;
                        break;
                    }
                    r2 += d * d;
                }
                if (near && r2 < R2) acc += coeff[q] * kernel.shape_from_r2(r2);
            }
            return kernel.peak() * acc;
        }

        Vec gradient(const Eigen::Ref<const Vec>& x) const override {
            const int dim = static_cast<int>(points.rows());
            const double R = kernel.radius();
            const double R2 = R * R;
            const double* qs = points.data();
            Vec g = Vec::Zero(dim);
            for (int q = 0; q < points.cols(); ++q) {
                const double* yq = qs + static_cast<std::ptrdiff_t>(q) * dim;
                double r2 = 0.0;
                bool near = true;
                for (int i = 0; i < dim; ++i) {
                    double d = x[i] - yq[i];
                    if (std::abs(d) >= R) {
                        near = false;
                        break;
                    }
                    r2 += d * d;
                }
                if (!near || r2 >= R2) continue;
                double radial = coeff[q] * kernel.shape_grad_from_r2(r2);
                for (int i = 0; i < dim; ++i) g[i] += radial * (x[i] - yq[i]);
            }
            return kernel.peak() * g;
        }
        bool has_analytic_gradient() const override { return true; }
    };

    void build_quadrature(int per_dim) {
        if (per_dim < 2) throw std::invalid_argument("ConvolutionCoupling: quad_per_dim too small");
        const Box& box = domain_->bounding_box();
        int dim = domain_->dim();
        Vec h = (box.hi - box.lo) / per_dim;
        cell_weight_ = h.prod();
        std::vector<Vec> kept;
        std::vector<int> idx(dim, 0);
        std::function<void(int)> rec = [&](int d) {
            if (d == dim) {
                Vec y(dim);
                for (int i = 0; i < dim; ++i) y[i] = box.lo[i] + (idx[i] + 0.5) * h[i];
                if (domain_->contains(y)) kept.push_back(y);
                return;
            }
            for (idx[d] = 0; idx[d] < per_dim; ++idx[d]) rec(d + 1);
        };
        rec(0);
        if (kept.empty()) throw std::invalid_argument("ConvolutionCoupling: quadrature grid missed the domain");
        quad_.resize(dim, kept.size());
        for (std::size_t q = 0; q < kept.size(); ++q) quad_.col(q) = kept[q];
    }

    DomainPtr domain_;
    WendlandKernel kernel_;
    double linear_, cubic_;
    Mat quad_;
    double cell_weight_ = 0.0;
};

// ---- Flow binding ------------------------------------------------------

// A flow of snapshots with the couplings bound per node: everything a
// trajectory cost evaluation needs, precomputed once.
struct BoundFlow {
    TimeGrid grid;
    std::vector<SpatialMeasure> snapshots;  // one per node
    std::vector<FieldPtr> running;          // F(., m(t_k)) per node
    FieldPtr terminal;                      // G(., m(T))

    static BoundFlow bind(const TimeGrid& grid, std::vector<SpatialMeasure> snapshots,
                          const Coupling& F, const Coupling& G, double fd_step) {
        if (static_cast<int>(snapshots.size()) != grid.nodes())
            throw GridMismatch("BoundFlow: need one snapshot per grid node");
        BoundFlow flow;
        flow.grid = grid;
        flow.snapshots = std::move(snapshots);
        flow.running.reserve(flow.snapshots.size());
        for (const auto& m : flow.snapshots) flow.running.push_back(with_gradient(F.bind(m), fd_step));
        flow.terminal = with_gradient(G.bind(flow.snapshots.back()), fd_step);
        return flow;
    }

    // The flow restricted to [t_k, T], re-indexed from zero.
    BoundFlow suffix(int k) const {
        if (k < 0 || k >= grid.steps) throw std::out_of_range("BoundFlow::suffix");
        BoundFlow flow;
        flow.grid = TimeGrid(grid.horizon - grid.node(k), grid.steps - k);
        flow.snapshots.assign(snapshots.begin() + k, snapshots.end());
        flow.running.assign(running.begin() + k, running.end());
        flow.terminal = terminal;
        return flow;
    }

    static FieldPtr with_gradient(FieldPtr field, double fd_step) {
        if (field->has_analytic_gradient()) return field;
        return std::make_shared<FDGradientField>(std::move(field), fd_step);
    }
};

// ---- Cost functional ---------------------------------------------------

// Discretization of the trajectory cost: exact per-segment integration of the
// velocity term (midpoint in x, constant velocity), trapezoidal rule for the
// mean-field term over grid nodes, plus the terminal cost.
inline double total_cost(const Arc& arc, const BoundFlow& flow, const Lagrangian& L) {
    if (!(arc.grid == flow.grid)) throw GridMismatch("total_cost: arc and flow grids differ");
    double dt = arc.grid.dt();
    double acc = 0.0;
    Vec mid(arc.dim()), vel(arc.dim());
    for (int k = 0; k < arc.grid.steps; ++k) {
        vel = (arc.nodes.col(k + 1) - arc.nodes.col(k)) / dt;
        mid = 0.5 * (arc.nodes.col(k) + arc.nodes.col(k + 1));
        acc += dt * L.value(mid, vel);
    }
    for (int k = 0; k <= arc.grid.steps; ++k) {
        double w = (k == 0 || k == arc.grid.steps) ? 0.5 * dt : dt;
        acc += w * flow.running[k]->value(arc.nodes.col(k));
    }
    acc += flow.terminal->value(arc.nodes.col(arc.grid.steps));
    return acc;
}

inline double total_cost(const Arc& arc, const std::vector<SpatialMeasure>& flow,
                         const Lagrangian& L, const Coupling& F, const Coupling& G) {
    if (static_cast<int>(flow.size()) != arc.grid.nodes())
        throw GridMismatch("total_cost: flow has " + std::to_string(flow.size()) +
                           " snapshots for " + std::to_string(arc.grid.nodes()) + " nodes");
    return total_cost(arc, BoundFlow::bind(arc.grid, flow, F, G, 1e-6), L);
}

// ---- Energy bound constant ----------------------------------------------

// Ingredients of the energy certificate: sup norms estimated on a dense grid
// (and sampled atomic measures for the couplings), inflated by 5% since the
// constant is used as an upper bound.
struct HolderConstantParts {
    double max_L0 = 0.0;   // max over the closure of L(x, 0)
    double max_abs_F = 0.0;
    double max_abs_G = 0.0;
    double c1 = 1.0;
    double c0 = 0.0;
    double horizon = 1.0;

    // K = (1/sqrt(c1)) [T max L(.,0) + 2T max|F| + 2 max|G| + T c0]^{1/2}
    double constant() const {
        double inner = horizon * max_L0 + 2.0 * horizon * max_abs_F + 2.0 * max_abs_G +
                       horizon * c0;
        return std::sqrt(std::max(inner, 0.0)) / std::sqrt(c1);
    }
};

namespace detail {

inline std::vector<Vec> feasible_grid(const Domain& domain, int per_dim) {
    const Box& box = domain.bounding_box();
    int dim = domain.dim();
    Vec h = (box.hi - box.lo) / (per_dim - 1);
    std::vector<Vec> pts;
    std::vector<int> idx(dim, 0);
    std::function<void(int)> rec = [&](int d) {
        if (d == dim) {
            Vec y(dim);
            for (int i = 0; i < dim; ++i) y[i] = box.lo[i] + idx[i] * h[i];
            if (domain.contains(y)) pts.push_back(y);
            return;
        }
        for (idx[d] = 0; idx[d] < per_dim; ++idx[d]) rec(d + 1);
    };
    rec(0);
    return pts;
}

// Random finitely supported probability measures on the closure, plus diracs
// at extreme grid points; used to probe sup norms over the measure argument.
inline std::vector<SpatialMeasure> probe_measures(const Domain& domain,
                                                  const std::vector<Vec>& grid_pts, int count,
                                                  unsigned seed) {
    std::vector<SpatialMeasure> probes;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> natoms(1, 8);
    std::uniform_int_distribution<std::size_t> pick(0, grid_pts.empty() ? 0 : grid_pts.size() - 1);
    std::exponential_distribution<double> expo(1.0);
    for (int s = 0; s < count && !grid_pts.empty(); ++s) {
        int k = natoms(rng);
        Mat pts(domain.dim(), k);
        Vec w(k);
        for (int i = 0; i < k; ++i) {
            pts.col(i) = grid_pts[pick(rng)];
            w[i] = expo(rng) + 1e-12;
        }
        w /= w.sum();
        probes.push_back(SpatialMeasure::unchecked(std::move(pts), std::move(w)));
    }
    // concentrated extremes
    for (std::size_t i = 0; i < grid_pts.size(); i += std::max<std::size_t>(1, grid_pts.size() / 16))
        probes.push_back(SpatialMeasure::dirac(grid_pts[i]));
    return probes;
}

inline double inflate(double v) { return v >= 0.0 ? 1.05 * v : v; }

}  // namespace detail

inline HolderConstantParts holder_constant_parts(const Lagrangian& L, const Coupling& F,
                                                 const Coupling& G, double horizon,
                                                 const Domain& domain, int grid_per_dim = 64,
                                                 int measure_probes = 24, unsigned seed = 777) {
    auto pts = detail::feasible_grid(domain, grid_per_dim);
    if (pts.empty()) throw std::invalid_argument("holder_constant: sampling grid missed the domain");
    HolderConstantParts parts;
    parts.c1 = L.coercivity_quadratic();
    parts.c0 = L.coercivity_offset();
    parts.horizon = horizon;
    Vec zero = Vec::Zero(domain.dim());
    double max_l0 = -std::numeric_limits<double>::infinity();
    for (const auto& x : pts) max_l0 = std::max(max_l0, L.value(x, zero));
    auto probes = detail::probe_measures(domain, pts, measure_probes, seed);
    double max_f = 0.0, max_g = 0.0;
    for (const auto& m : probes) {
        auto f = F.bind(m);
        auto g = G.bind(m);
        for (const auto& x : pts) {
            max_f = std::max(max_f, std::abs(f->value(x)));
            max_g = std::max(max_g, std::abs(g->value(x)));
        }
    }
    parts.max_L0 = detail::inflate(max_l0);
    parts.max_abs_F = detail::inflate(max_f);
    parts.max_abs_G = detail::inflate(max_g);
    return parts;
}

// The constant bounding the L^2 velocity norm of every best response; also
// the 1/2-Hoelder constant of the equilibrium flow.
inline double holder_constant(const Lagrangian& L, const Coupling& F, const Coupling& G,
                              double horizon, const Domain& domain) {
    return holder_constant_parts(L, F, G, horizon, domain).constant();
}

// ---- Assumption checks ---------------------------------------------------

struct AssumptionCheck {
    std::string name;
    double worst_slack = std::numeric_limits<double>::infinity();
    bool pass = true;
    Vec witness_x, witness_v;
};

struct AssumptionReport {
    AssumptionCheck growth_x;    // |D_x L| <= C (1 + |v|^2)
    AssumptionCheck growth_v;    // |D_v L| <= C (1 + |v|)
    AssumptionCheck coercivity;  // L >= c1 |v|^2 - c0
    AssumptionCheck convexity;   // midpoint inequality in v

    bool ok() const { return growth_x.pass && growth_v.pass && coercivity.pass && convexity.pass; }
    std::vector<const AssumptionCheck*> entries() const {
        return {&growth_x, &growth_v, &coercivity, &convexity};
    }
};

// Samples (x, v) over the closure times a velocity ball and reports the
// worst slack of each declared inequality. Negative slack beyond 1e-9 fails.
inline AssumptionReport check_assumptions(const Lagrangian& L, const Domain& domain,
                                          int samples = 512, double v_max = 10.0,
                                          unsigned seed = 2024) {
    if (samples < 1) throw std::invalid_argument("check_assumptions: samples must be >= 1");
    AssumptionReport report;
    report.growth_x.name = "L1: |D_x L| <= C(1+|v|^2)";
    report.growth_v.name = "L1: |D_v L| <= C(1+|v|)";
    report.coercivity.name = "L2: L >= c1|v|^2 - c0";
    report.convexity.name = "L3: convexity in v";

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Box& box = domain.bounding_box();
    int dim = domain.dim();
    auto sample_x = [&] {
        for (int tries = 0; tries < 1000; ++tries) {
            Vec x(dim);
            for (int i = 0; i < dim; ++i) x[i] = box.lo[i] + unif(rng) * (box.hi[i] - box.lo[i]);
            if (domain.contains(x)) return x;
        }
        return Vec(Vec::Zero(dim));
    };
    auto sample_v = [&] {
        Vec v(dim);
        std::normal_distribution<double> gauss;
        for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
        double r = v_max * std::pow(unif(rng), 1.0 / dim);
        double n = v.norm();
        return n > 0 ? Vec(r / n * v) : v;
    };

    auto record = [](AssumptionCheck& chk, double slack, const Vec& x, const Vec& v, double tol) {
        if (slack < chk.worst_slack) {
            chk.worst_slack = slack;
            chk.witness_x = x;
            chk.witness_v = v;
        }
        if (slack < -tol) chk.pass = false;
    };

    double C = L.growth_constant();
    double c1 = L.coercivity_quadratic();
    double c0 = L.coercivity_offset();
    for (int s = 0; s < samples; ++s) {
        Vec x = sample_x();
        Vec v = sample_v();
        record(report.growth_x, C * (1.0 + v.squaredNorm()) - L.grad_x(x, v).norm(), x, v, 1e-9);
        record(report.growth_v, C * (1.0 + v.norm()) - L.grad_v(x, v).norm(), x, v, 1e-9);
        record(report.coercivity, L.value(x, v) - c1 * v.squaredNorm() + c0, x, v, 1e-9);
        Vec w = sample_v();
        double midpoint =
            0.5 * L.value(x, v) + 0.5 * L.value(x, w) - L.value(x, 0.5 * (v + w));
        record(report.convexity, midpoint, x, v, 1e-9);
    }
    return report;
}

// ---- Monotonicity --------------------------------------------------------

// The Lasry-Lions pairing: integral of (F(x,m1) - F(x,m2)) d(m1-m2)(x),
// a finite sum over the union of supports. Monotone couplings return >= 0
// up to roundoff.
inline double monotonicity_gap(const Coupling& F, const SpatialMeasure& m1,
                               const SpatialMeasure& m2) {
    if (m1.dim() != m2.dim())
        throw std::invalid_argument("monotonicity_gap: dimension mismatch");
    auto f1 = F.bind(m1);
    auto f2 = F.bind(m2);
    double acc = 0.0;
    for (int i = 0; i < m1.size(); ++i) {
        Vec x = m1.point(i);
        acc += m1.weight(i) * (f1->value(x) - f2->value(x));
    }
    for (int j = 0; j < m2.size(); ++j) {
        Vec x = m2.point(j);
        acc -= m2.weight(j) * (f1->value(x) - f2->value(x));
    }
    return acc;
}

}  // namespace mfg
