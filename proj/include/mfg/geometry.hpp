#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "mfg/errors.hpp"
#include "mfg/types.hpp"

namespace mfg {

// Report of the tube-radius validator: samples points at offsets inside the
// tube and checks the eikonal property of the oriented distance through
// central finite differences of b.
struct TubeReport {
    bool ok = true;
    double worst_eikonal_error = 0.0;   // max | |FD grad b| - 1 |
    double worst_consistency_error = 0.0;  // max |FD grad b - Db|
    Vec worst_point;
};

// Constraint set: the closure of a bounded open set with C^2 boundary,
// represented through the oriented boundary distance b (negative inside,
// zero on the boundary, positive outside). First and second derivatives of
// b are available on the tube of radius tube_radius() around the boundary.
// Immutable after construction; all queries are const and thread-safe.
class Domain {
public:
    virtual ~Domain() = default;

    int dim() const { return dim_; }
    double tube_radius() const { return tube_radius_; }
    const Box& bounding_box() const { return box_; }
    double diameter() const { return box_.diameter(); }

    // Oriented boundary distance b(x). Rejects non-finite coordinates.
    double signed_distance(const Eigen::Ref<const Vec>& x) const {
        check_query(x);
        return eval_b(x);
    }

    // Distance to the closure: max(b(x), 0).
    double distance(const Eigen::Ref<const Vec>& x) const {
        return std::max(signed_distance(x), 0.0);
    }

    bool contains(const Eigen::Ref<const Vec>& x, double tol = 0.0) const {
        return signed_distance(x) <= tol;
    }

    // Gradient of b. Unit length inside the tube (eikonal property).
    Vec gradient(const Eigen::Ref<const Vec>& x) const {
        check_query(x);
        return eval_grad(x);
    }

    // Hessian of b on the tube.
    Mat hessian(const Eigen::Ref<const Vec>& x) const {
        check_query(x);
        return eval_hess(x);
    }

    // x - d(x) Db(x): the metric projection onto the closure, valid while
    // d(x) < tube_radius. Interior points are returned unchanged.
    Vec project_to_closure(const Eigen::Ref<const Vec>& x) const {
        double b = signed_distance(x);
        if (b <= 0.0) return x;
        if (b >= tube_radius_)
            throw TubeExceeded("project_to_closure: d(x)=" + std::to_string(b) +
                               " >= tube radius " + std::to_string(tube_radius_));
        return x - b * eval_grad(x);
    }

    // Points on the boundary, roughly equidistributed. Used by the tube
    // validator, the speed-factor estimate, and tests.
    virtual std::vector<Vec> boundary_samples(int count) const = 0;

    // Lipschitz factor of the node-wise projection on the tube:
    // 1 + tube_radius * sup ||D^2 b||, estimated by sampling and inflated.
    double projection_speed_factor() const { return speed_factor_; }

    // Eikonal check: |Db| = 1 within 1e-6 at sampled tube points, with Db
    // cross-checked against central differences of b.
    TubeReport validate_tube(int samples = 200, unsigned seed = 12345) const {
        TubeReport report;
        report.worst_point = Vec::Zero(dim_);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> offset(-0.9, 0.9);
        auto base = boundary_samples(samples);
        double h = 1e-5 * diameter();
        for (const auto& p : base) {
            Vec n = eval_grad(p);
            Vec x = p + (offset(rng) * tube_radius_) * n;
            Vec g_fd(dim_);
            Vec e = x;
            for (int i = 0; i < dim_; ++i) {
                e[i] = x[i] + h;
                double bp = eval_b(e);
                e[i] = x[i] - h;
                double bm = eval_b(e);
                e[i] = x[i];
                g_fd[i] = (bp - bm) / (2.0 * h);
            }
            double eik = std::abs(g_fd.norm() - 1.0);
            double cons = (g_fd - eval_grad(x)).norm();
            if (eik > report.worst_eikonal_error) {
                report.worst_eikonal_error = eik;
                report.worst_point = x;
            }
            report.worst_consistency_error = std::max(report.worst_consistency_error, cons);
        }
        report.ok = report.worst_eikonal_error <= 1e-6;
        return report;
    }

protected:
    Domain(int dim, double tube_radius, Box box)
        : dim_(dim), tube_radius_(tube_radius), box_(std::move(box)) {
        if (dim_ <= 0) throw std::invalid_argument("Domain: dim must be positive");
        if (tube_radius_ <= 0.0) throw std::invalid_argument("Domain: tube_radius must be positive");
    }

    virtual double eval_b(const Eigen::Ref<const Vec>& x) const = 0;

    // Default gradient: central differences of b.
    virtual Vec eval_grad(const Eigen::Ref<const Vec>& x) const {
        double h = 1e-6 * diameter();
        Vec g(dim_), e = x;
        for (int i = 0; i < dim_; ++i) {
            e[i] = x[i] + h;
            double bp = eval_b(e);
            e[i] = x[i] - h;
            double bm = eval_b(e);
            e[i] = x[i];
            g[i] = (bp - bm) / (2.0 * h);
        }
        return g;
    }

    // Default Hessian: central differences of Db with step 1e-5 * diameter.
    virtual Mat eval_hess(const Eigen::Ref<const Vec>& x) const {
        double h = 1e-5 * diameter();
        Mat hess(dim_, dim_);
        Vec e = x;
        for (int i = 0; i < dim_; ++i) {
            e[i] = x[i] + h;
            Vec gp = eval_grad(e);
            e[i] = x[i] - h;
            Vec gm = eval_grad(e);
            e[i] = x[i];
            hess.col(i) = (gp - gm) / (2.0 * h);
        }
        return 0.5 * (hess + hess.transpose());
    }

    // Called once at the end of derived-class construction.
    void finalize_speed_factor(int samples = 64) {
        double sup_hess = 0.0;
        std::mt19937_64 rng(987654321);
        std::uniform_real_distribution<double> offset(-0.8, 0.8);
        for (const auto& p : boundary_samples(samples)) {
            Vec n = eval_grad(p);
            Vec x = p + (offset(rng) * tube_radius_) * n;
            sup_hess = std::max(sup_hess, eval_hess(x).operatorNorm());
        }
        speed_factor_ = 1.0 + 1.1 * tube_radius_ * sup_hess;
    }

private:
    void check_query(const Eigen::Ref<const Vec>& x) const {
        if (x.size() != dim_)
            throw std::invalid_argument("Domain: point dimension mismatch");
        if (!x.allFinite())
            throw std::invalid_argument("Domain: non-finite coordinates");
    }

    int dim_;
    double tube_radius_;
    Box box_;
    double speed_factor_ = 3.0;
};

using DomainPtr = std::shared_ptr<const Domain>;

// Ball in R^n with analytic distance, gradient, and Hessian.
class DiscDomain final : public Domain {
public:
    DiscDomain(Vec center, double radius, double tube_radius)
        : Domain(static_cast<int>(center.size()), tube_radius,
                 Box{center.array() - radius, center.array() + radius}),
          center_(std::move(center)),
          radius_(radius) {
        if (radius_ <= 0.0) throw std::invalid_argument("DiscDomain: radius must be positive");
        finalize_speed_factor();
    }

    static std::shared_ptr<DiscDomain> unit(int dim = 2, double tube_radius = 0.5) {
        return std::make_shared<DiscDomain>(Vec::Zero(dim), 1.0, tube_radius);
    }

    std::vector<Vec> boundary_samples(int count) const override {
        std::vector<Vec> pts;
        pts.reserve(count);
        if (dim() == 1) {
            Vec a = center_, b = center_;
            a[0] -= radius_;
            b[0] += radius_;
            pts.push_back(a);
            pts.push_back(b);
            return pts;
        }
        if (dim() == 2) {
            for (int i = 0; i < count; ++i) {
                double th = 2.0 * M_PI * i / count;
                Vec p = center_;
                p[0] += radius_ * std::cos(th);
                p[1] += radius_ * std::sin(th);
                pts.push_back(p);
            }
            return pts;
        }
        std::mt19937_64 rng(42);
        std::normal_distribution<double> gauss;
        for (int i = 0; i < count; ++i) {
            Vec u(dim());
            for (int k = 0; k < dim(); ++k) u[k] = gauss(rng);
            pts.push_back(center_ + radius_ * u.normalized());
        }
        return pts;
    }

protected:
    double eval_b(const Eigen::Ref<const Vec>& x) const override {
        return (x - center_).norm() - radius_;
    }

    Vec eval_grad(const Eigen::Ref<const Vec>& x) const override {
        Vec r = x - center_;
        double n = r.norm();
        if (n < 1e-14) {
            Vec g = Vec::Zero(dim());
            g[0] = 1.0;
            return g;
        }
        return r / n;
    }

    Mat eval_hess(const Eigen::Ref<const Vec>& x) const override {
        Vec r = x - center_;
        double n = r.norm();
        Vec u = r / n;
        return (Mat::Identity(dim(), dim()) - u * u.transpose()) / n;
    }

private:
    Vec center_;
    double radius_;
};

// Closest-point machinery shared by the parameterized superellipse and the
// generic level-set domain: b = +-|x - p| with p the nearest boundary point.
namespace detail {

inline double signed_norm(const Vec& x, const Vec& p, bool inside) {
    double d = (x - p).norm();
    return inside ? -d : d;
}

inline Vec distance_gradient(const Vec& x, const Vec& p, double b, const Vec& boundary_normal) {
    if (std::abs(b) < 1e-9) return boundary_normal;
    return (x - p) / b;
}

}  // namespace detail

// Axis-aligned superellipse |x1/a|^4 + |x2/b|^4 = 1 in the plane. Distance
// queries run a coarse scan of a precomputed boundary table followed by
// golden-section refinement of the boundary parameter.
class SuperellipseDomain final : public Domain {
public:
    SuperellipseDomain(double a, double b, double tube_radius, int table_size = 1024)
        : Domain(2, tube_radius, make_box(a, b)), a_(a), b_(b), table_size_(table_size) {
        if (a <= 0 || b <= 0) throw std::invalid_argument("SuperellipseDomain: semi-axes must be positive");
        table_.reserve(table_size_);
        for (int i = 0; i < table_size_; ++i)
            table_.push_back(param_point(2.0 * M_PI * i / table_size_));
        finalize_speed_factor();
    }

    double level(const Eigen::Ref<const Vec>& x) const {
        return std::pow(x[0] / a_, 4.0) + std::pow(x[1] / b_, 4.0) - 1.0;
    }

    // Boundary point at parameter theta.
    Vec param_point(double theta) const {
        double c = std::cos(theta), s = std::sin(theta);
        Vec p(2);
        p[0] = a_ * std::copysign(std::sqrt(std::abs(c)), c);
        p[1] = b_ * std::copysign(std::sqrt(std::abs(s)), s);
        return p;
    }

    std::vector<Vec> boundary_samples(int count) const override {
        std::vector<Vec> pts;
        pts.reserve(count);
        for (int i = 0; i < count; ++i) pts.push_back(param_point(2.0 * M_PI * i / count));
        return pts;
    }

protected:
    double eval_b(const Eigen::Ref<const Vec>& x) const override {
        Vec p = closest_boundary_point(x);
        return detail::signed_norm(x, p, level(x) < 0.0);
    }

    Vec eval_grad(const Eigen::Ref<const Vec>& x) const override {
        Vec p = closest_boundary_point(x);
        double b = detail::signed_norm(x, p, level(x) < 0.0);
        return detail::distance_gradient(x, p, b, outward_normal(p));
    }

private:
    static Box make_box(double a, double b) {
        Vec lo(2), hi(2);
        lo << -a, -b;
        hi << a, b;
        return Box{lo, hi};
    }

    Vec outward_normal(const Eigen::Ref<const Vec>& p) const {
        Vec g(2);
        g[0] = 4.0 * std::pow(p[0], 3.0) / std::pow(a_, 4.0);
        g[1] = 4.0 * std::pow(p[1], 3.0) / std::pow(b_, 4.0);
        double n = g.norm();
        return n > 0 ? Vec(g / n) : Vec(Vec::Unit(2, 0));
    }

    Vec closest_boundary_point(const Eigen::Ref<const Vec>& x) const {
        int best = 0;
        double best_d = (table_[0] - x).squaredNorm();
        for (int i = 1; i < table_size_; ++i) {
            double d = (table_[i] - x).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        double step = 2.0 * M_PI / table_size_;
        double lo = step * (best - 1), hi = step * (best + 1);
        // Golden-section on theta -> |p(theta)-x|^2 over the bracketing interval.
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
        double fc = (param_point(c) - x).squaredNorm();
        double fd = (param_point(d) - x).squaredNorm();
        for (int it = 0; it < 90 && hi - lo > 1e-15; ++it) {
            if (fc < fd) {
                hi = d;
                d = c;
                fd = fc;
                c = hi - gr * (hi - lo);
                fc = (param_point(c) - x).squaredNorm();
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + gr * (hi - lo);
                fd = (param_point(d) - x).squaredNorm();
            }
        }
        return param_point(0.5 * (lo + hi));
    }

    double a_, b_;
    int table_size_;
    std::vector<Vec> table_;
};

// Generic smooth domain {g < 0}. Closest boundary points are found by
// tangential descent seeded from a precomputed boundary cloud; the cloud is
// built by projecting sign-change cells of a grid onto {g = 0}.
class LevelSetDomain final : public Domain {
public:
    using ScalarFn = std::function<double(const Vec&)>;
    using GradFn = std::function<Vec(const Vec&)>;

    LevelSetDomain(ScalarFn g, GradFn grad_g, Box box, double tube_radius,
                   int cloud_per_dim = 64)
        : Domain(box.dim(), tube_radius, box), g_(std::move(g)), grad_g_(std::move(grad_g)) {
        build_cloud(cloud_per_dim);
        if (cloud_.empty())
            throw std::invalid_argument("LevelSetDomain: no boundary found inside bounding box");
        finalize_speed_factor();
    }

    LevelSetDomain(ScalarFn g, Box box, double tube_radius, int cloud_per_dim = 64)
        : LevelSetDomain(std::move(g), GradFn{}, std::move(box), tube_radius, cloud_per_dim) {}

    std::vector<Vec> boundary_samples(int count) const override {
        std::vector<Vec> pts;
        pts.reserve(count);
        std::size_t stride = std::max<std::size_t>(1, cloud_.size() / count);
        for (std::size_t i = 0; i < cloud_.size() && pts.size() < static_cast<std::size_t>(count); i += stride)
            pts.push_back(cloud_[i]);
        return pts;
    }

protected:
    double eval_b(const Eigen::Ref<const Vec>& x) const override {
        Vec p = closest_boundary_point(x);
        return detail::signed_norm(x, p, g_(x) < 0.0);
    }

    Vec eval_grad(const Eigen::Ref<const Vec>& x) const override {
        Vec p = closest_boundary_point(x);
        double b = detail::signed_norm(x, p, g_(x) < 0.0);
        return detail::distance_gradient(x, p, b, unit_grad(p));
    }

private:
    Vec grad_of_g(const Vec& x) const {
        if (grad_g_) return grad_g_(x);
        double h = 1e-7 * diameter();
        Vec g(dim()), e = x;
        for (int i = 0; i < dim(); ++i) {
            e[i] = x[i] + h;
            double gp = g_(e);
            e[i] = x[i] - h;
            double gm = g_(e);
            e[i] = x[i];
            g[i] = (gp - gm) / (2.0 * h);
        }
        return g;
    }

    Vec unit_grad(const Vec& p) const {
        Vec g = grad_of_g(p);
        double n = g.norm();
        return n > 0 ? Vec(g / n) : Vec(Vec::Unit(dim(), 0));
    }

    // Newton steps along the gradient until g(p) ~ 0.
    bool snap_to_surface(Vec& p) const {
        for (int it = 0; it < 50; ++it) {
            double val = g_(p);
            Vec g = grad_of_g(p);
            double n2 = g.squaredNorm();
            if (n2 < 1e-30) return false;
            Vec step = (val / n2) * g;
            p -= step;
            if (std::abs(val) < 1e-14 && step.norm() < 1e-13 * diameter()) return true;
        }
        return std::abs(g_(p)) < 1e-10;
    }

    void build_cloud(int per_dim) {
        std::vector<int> idx(dim(), 0);
        const Box& bx = bounding_box();
        Vec h = (bx.hi - bx.lo) / (per_dim - 1);
        std::vector<Vec> grid;
        std::function<void(int)> rec = [&](int d) {
            if (d == dim()) {
                Vec p(dim());
                for (int i = 0; i < dim(); ++i) p[i] = bx.lo[i] + idx[i] * h[i];
                grid.push_back(p);
                return;
            }
            for (idx[d] = 0; idx[d] < per_dim; ++idx[d]) rec(d + 1);
        };
        rec(0);
        double cell = h.norm();
        for (auto& p : grid) {
            if (std::abs(g_(p)) > cell * grad_of_g(p).norm()) continue;  // not near the boundary
            Vec q = p;
            if (snap_to_surface(q) && bounding_box().contains(q, 1e-9 * diameter()))
                cloud_.push_back(q);
        }
    }

    Vec closest_boundary_point(const Eigen::Ref<const Vec>& x) const {
        std::size_t best = 0;
        double best_d = (cloud_[0] - x).squaredNorm();
        for (std::size_t i = 1; i < cloud_.size(); ++i) {
            double d = (cloud_[i] - x).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        Vec p = cloud_[best];
        snap_to_surface(p);
        // Tangential descent on |x - p|^2 restricted to {g = 0}.
        for (int it = 0; it < 200; ++it) {
            Vec n = unit_grad(p);
            Vec r = (x - p) - n.dot(x - p) * n;
            if (r.norm() < 1e-13 * diameter()) break;
            Vec trial = p + r;
            snap_to_surface(trial);
            if ((trial - x).squaredNorm() <= (p - x).squaredNorm() + 1e-30) {
                p = trial;
            } else {
                // halve the tangential step until it decreases
                double s = 0.5;
                bool accepted = false;
                for (int j = 0; j < 20; ++j, s *= 0.5) {
                    Vec t2 = p + s * r;
                    snap_to_surface(t2);
                    if ((t2 - x).squaredNorm() < (p - x).squaredNorm()) {
                        p = t2;
                        accepted = true;
                        break;
                    }
                }
                if (!accepted) break;
            }
        }
        return p;
    }

    ScalarFn g_;
    GradFn grad_g_;
    std::vector<Vec> cloud_;
};

}  // namespace mfg
