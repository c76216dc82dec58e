#pragma once

#include <Eigen/Dense>

namespace mfg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Axis-aligned box, used for sampling and quadrature grids.
struct Box {
    Vec lo;
    Vec hi;

    int dim() const { return static_cast<int>(lo.size()); }
    double diameter() const { return (hi - lo).norm(); }
    bool contains(const Eigen::Ref<const Vec>& x, double pad = 0.0) const {
        for (int i = 0; i < dim(); ++i)
            if (x[i] < lo[i] - pad || x[i] > hi[i] + pad) return false;
        return true;
    }
};

}  // namespace mfg
