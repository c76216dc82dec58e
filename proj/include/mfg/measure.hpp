#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mfg/arc.hpp"
#include "mfg/errors.hpp"
#include "mfg/types.hpp"

namespace mfg {

inline constexpr double kWeightSumTol = 1e-12;
inline constexpr double kAtomMergeTol = 1e-12;

// Finitely supported probability measure on the domain closure.
// Column k of `points` carries weight `weights[k]`.
class SpatialMeasure {
public:
    SpatialMeasure() = default;

    SpatialMeasure(Mat points, Vec weights) : points_(std::move(points)), weights_(std::move(weights)) {
        validate();
    }

    // Bypasses the weight-sum check; for diagnostics and negative tests.
    static SpatialMeasure unchecked(Mat points, Vec weights) {
        SpatialMeasure m;
        m.points_ = std::move(points);
        m.weights_ = std::move(weights);
        return m;
    }

    static SpatialMeasure dirac(const Vec& x) {
        Mat p(x.size(), 1);
        p.col(0) = x;
        return SpatialMeasure(std::move(p), Vec::Ones(1));
    }

    int size() const { return static_cast<int>(weights_.size()); }
    int dim() const { return static_cast<int>(points_.rows()); }
    const Mat& points() const { return points_; }
    const Vec& weights() const { return weights_; }
    Vec point(int k) const { return points_.col(k); }
    double weight(int k) const { return weights_[k]; }

    double total_mass() const { return weights_.sum(); }

    Vec mean() const { return points_ * weights_ / total_mass(); }

    // Merges atoms whose coordinates agree within kAtomMergeTol, preserving
    // first-occurrence order. Conservative: only near-identical points fuse.
    SpatialMeasure merged() const {
        std::unordered_map<std::size_t, std::vector<int>> buckets;
        std::vector<int> keep;
        Vec new_w = weights_;
        std::vector<bool> alive(size(), true);
        keep.reserve(size());
        for (int k = 0; k < size(); ++k) {
            std::size_t key = quantize_key(points_.col(k));
            auto& bucket = buckets[key];
            bool fused = false;
            for (int j : bucket) {
                if ((points_.col(j) - points_.col(k)).norm() <= kAtomMergeTol) {
                    new_w[j] += new_w[k];
                    alive[k] = false;
                    fused = true;
                    break;
                }
            }
            if (!fused) {
                bucket.push_back(k);
                keep.push_back(k);
            }
        }
        Mat pts(dim(), keep.size());
        Vec w(keep.size());
        for (std::size_t i = 0; i < keep.size(); ++i) {
            pts.col(i) = points_.col(keep[i]);
            w[i] = new_w[keep[i]];
        }
        return SpatialMeasure::unchecked(std::move(pts), std::move(w));
    }

    bool weights_normalized(double tol = kWeightSumTol) const {
        return std::abs(total_mass() - 1.0) <= tol && (weights_.array() > 0.0).all();
    }

private:
    void validate() const {
        if (weights_.size() == 0) throw std::invalid_argument("SpatialMeasure: empty measure");
        if (points_.cols() != weights_.size())
            throw std::invalid_argument("SpatialMeasure: point/weight count mismatch");
        if (!(weights_.array() > 0.0).all())
            throw std::invalid_argument("SpatialMeasure: weights must be positive");
        if (std::abs(weights_.sum() - 1.0) > kWeightSumTol)
            throw std::invalid_argument("SpatialMeasure: weights must sum to 1");
        if (!points_.allFinite())
            throw std::invalid_argument("SpatialMeasure: non-finite point coordinates");
    }

    static std::size_t quantize_key(const Eigen::Ref<const Vec>& x) {
        std::size_t h = 1469598103934665603ull;
        for (int i = 0; i < x.size(); ++i) {
            auto q = static_cast<std::int64_t>(std::llround(x[i] * 1e10));
            h ^= static_cast<std::size_t>(q);
            h *= 1099511628211ull;
        }
        return h;
    }

    Mat points_;
    Vec weights_;
};

// Finitely supported probability measure on arcs with a prescribed initial
// marginal: pushing forward through the time-0 evaluation map reproduces
// `initial_marginal` atom by atom.
class ArcMeasure {
public:
    ArcMeasure() = default;

    ArcMeasure(std::vector<Arc> arcs, Vec weights, SpatialMeasure initial_marginal)
        : arcs_(std::move(arcs)), weights_(std::move(weights)), marginal_(std::move(initial_marginal)) {
        validate();
    }

    static ArcMeasure unchecked(std::vector<Arc> arcs, Vec weights, SpatialMeasure initial_marginal) {
        ArcMeasure m;
        m.arcs_ = std::move(arcs);
        m.weights_ = std::move(weights);
        m.marginal_ = std::move(initial_marginal);
        return m;
    }

    // The measure of constant arcs: j # m0 with j(x) the arc frozen at x.
    static ArcMeasure constant_arcs(const TimeGrid& grid, const SpatialMeasure& m0) {
        std::vector<Arc> arcs;
        arcs.reserve(m0.size());
        for (int k = 0; k < m0.size(); ++k) arcs.push_back(Arc::constant(grid, m0.point(k)));
        return ArcMeasure(std::move(arcs), m0.weights(), m0);
    }

    int size() const { return static_cast<int>(arcs_.size()); }
    const std::vector<Arc>& arcs() const { return arcs_; }
    const Arc& arc(int k) const { return arcs_[k]; }
    const Vec& weights() const { return weights_; }
    double weight(int k) const { return weights_[k]; }
    const SpatialMeasure& initial_marginal() const { return marginal_; }
    const TimeGrid& grid() const { return arcs_.front().grid; }

    double max_energy_norm() const {
        double worst = 0.0;
        for (const auto& a : arcs_) worst = std::max(worst, a.energy_norm());
        return worst;
    }

private:
    void validate() const {
        if (arcs_.empty()) throw std::invalid_argument("ArcMeasure: empty measure");
        if (static_cast<int>(arcs_.size()) != weights_.size())
            throw std::invalid_argument("ArcMeasure: arc/weight count mismatch");
        if (!(weights_.array() > 0.0).all())
            throw std::invalid_argument("ArcMeasure: weights must be positive");
        if (std::abs(weights_.sum() - 1.0) > kWeightSumTol)
            throw std::invalid_argument("ArcMeasure: weights must sum to 1");
        for (const auto& a : arcs_)
            if (!(a.grid == arcs_.front().grid))
                throw GridMismatch("ArcMeasure: arcs on different time grids");
        check_initial_marginal();
    }

    void check_initial_marginal() const;

    std::vector<Arc> arcs_;
    Vec weights_;
    SpatialMeasure marginal_;
};

// e_t # eta: the population snapshot at time t. Weights ride along unchanged;
// coincident evaluation points are merged.
inline SpatialMeasure pushforward(const ArcMeasure& eta, double t) {
    Mat pts(eta.arc(0).dim(), eta.size());
    for (int k = 0; k < eta.size(); ++k) pts.col(k) = eta.arc(k).evaluate(t);
    return SpatialMeasure::unchecked(std::move(pts), eta.weights()).merged();
}

// Groups atoms by exact initial node. Each group is renormalized to a
// probability measure; pairing the groups with the initial-marginal weights
// reassembles eta.
struct Disintegration {
    // One entry per distinct start point, in first-occurrence order.
    std::vector<Vec> points;
    std::vector<double> marginal_weights;
    std::vector<ArcMeasure> conditionals;

    int size() const { return static_cast<int>(points.size()); }
};

inline Disintegration disintegrate(const ArcMeasure& eta) {
    Disintegration out;
    std::vector<std::vector<int>> groups;
    for (int k = 0; k < eta.size(); ++k) {
        Vec s = eta.arc(k).start();
        int found = -1;
        for (std::size_t g = 0; g < out.points.size(); ++g)
            if (out.points[g] == s) {
                found = static_cast<int>(g);
                break;
            }
        if (found < 0) {
            out.points.push_back(s);
            groups.emplace_back();
            found = static_cast<int>(out.points.size()) - 1;
        }
        groups[found].push_back(k);
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
        double mass = 0.0;
        for (int k : groups[g]) mass += eta.weight(k);
        std::vector<Arc> arcs;
        Vec w(groups[g].size());
        for (std::size_t i = 0; i < groups[g].size(); ++i) {
            arcs.push_back(eta.arc(groups[g][i]));
            w[i] = eta.weight(groups[g][i]) / mass;
        }
        out.marginal_weights.push_back(mass);
        out.conditionals.push_back(
            ArcMeasure::unchecked(std::move(arcs), std::move(w), SpatialMeasure::dirac(out.points[g])));
    }
    return out;
}

inline void ArcMeasure::check_initial_marginal() const {
    Disintegration d;
    {
        // group this measure's arcs by exact start
        ArcMeasure tmp = ArcMeasure::unchecked(arcs_, weights_, marginal_);
        d = disintegrate(tmp);
    }
    if (d.size() != marginal_.size())
        throw std::invalid_argument("ArcMeasure: start-point groups do not match initial marginal");
    for (int g = 0; g < d.size(); ++g) {
        int hit = -1;
        for (int j = 0; j < marginal_.size(); ++j)
            if (marginal_.point(j) == d.points[g]) {
                hit = j;
                break;
            }
        if (hit < 0)
            throw std::invalid_argument("ArcMeasure: arc starts at a point missing from the initial marginal");
        if (std::abs(marginal_.weight(hit) - d.marginal_weights[g]) > kWeightSumTol)
            throw std::invalid_argument("ArcMeasure: group weight disagrees with initial marginal");
    }
}

// Coupling between two spatial measures; row sums match the source weights,
// column sums the target weights.
class TransportPlan {
public:
    TransportPlan(SpatialMeasure source, SpatialMeasure target, Mat coupling)
        : source_(std::move(source)), target_(std::move(target)), coupling_(std::move(coupling)) {
        if (coupling_.rows() != source_.size() || coupling_.cols() != target_.size())
            throw std::invalid_argument("TransportPlan: coupling shape mismatch");
        if ((coupling_.array() < -1e-14).any())
            throw std::invalid_argument("TransportPlan: negative coupling entry");
        Vec row = coupling_.rowwise().sum();
        Vec col = coupling_.colwise().sum().transpose();
        if ((row - source_.weights()).cwiseAbs().maxCoeff() > 1e-10 ||
            (col - target_.weights()).cwiseAbs().maxCoeff() > 1e-10)
            throw std::invalid_argument("TransportPlan: marginal constraints violated");
    }

    const SpatialMeasure& source() const { return source_; }
    const SpatialMeasure& target() const { return target_; }
    const Mat& coupling() const { return coupling_; }

    double cost(int p = 1) const {
        double acc = 0.0;
        for (int i = 0; i < source_.size(); ++i)
            for (int j = 0; j < target_.size(); ++j)
                if (coupling_(i, j) > 0.0)
                    acc += coupling_(i, j) *
                           std::pow((source_.point(i) - target_.point(j)).norm(), p);
        return acc;
    }

private:
    SpatialMeasure source_;
    SpatialMeasure target_;
    Mat coupling_;
};

}  // namespace mfg
