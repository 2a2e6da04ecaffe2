#pragma once

#include "graphreg/network.hpp"

namespace graphreg {

struct GradCheckReport {
    double max_rel_err = 0.0;
    Index coords_checked = 0;
    std::string worst_param;
};

// Compares autodiff parameter gradients of the cross-entropy loss against
// central finite differences. Relative error per coordinate is
// |ad - fd| / max(|ad| + |fd|, 1e-3); the floor keeps near-zero coordinates
// from amplifying finite-difference roundoff. Report-only, never throws on
// mismatch.
GradCheckReport grad_check(Network& net, const Tensor& input, const std::vector<int>& labels,
                           double eps, Index max_coords_per_param = 0);

// Same comparison for an arbitrary scalar loss over explicit parameters;
// `loss_fn` must rebuild the forward pass from current parameter values.
GradCheckReport grad_check_fn(const std::vector<Param*>& params,
                              const std::function<Scalar(bool accumulate_grads)>& loss_fn,
                              double eps, Index max_coords_per_param = 0);

}  // namespace graphreg
