#pragma once

#include "graphreg/common.hpp"

namespace graphreg {

// Named scalar loss components; total is always the sum of the active ones.
struct LossBreakdown {
    Scalar supervised = 0;
    Scalar neighbor = 0;
    Scalar reconstruction = 0;
    Scalar kl = 0;
    Scalar adversarial_d = 0;
    Scalar adversarial_g = 0;
    Scalar total = 0;

    Scalar component_sum() const {
        return supervised + neighbor + reconstruction + kl + adversarial_d + adversarial_g;
    }
    void finalize() { total = component_sum(); }
    void validate() const {
        if (std::abs(total - component_sum()) > 1e-9)
            throw Error(cat("loss total ", total, " != component sum ", component_sum()));
        if (!std::isfinite(total)) throw Error("loss total is not finite");
    }
};

}  // namespace graphreg
