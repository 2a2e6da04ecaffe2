#pragma once

#include "graphreg/network.hpp"

#include <unordered_map>

namespace graphreg {

enum class OptimizerKind { sgd, adam };

// SGD / Adam over a set of Params. Moment buffers are keyed per parameter and
// allocated on first use with matching shapes.
class OptimizerState {
public:
    OptimizerState(OptimizerKind kind, Scalar lr, Scalar beta1 = 0.9, Scalar beta2 = 0.999,
                   Scalar eps = 1e-8)
        : kind_(kind), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        if (lr <= 0) throw Error(cat("learning rate must be positive, got ", lr));
    }

    // Applies one update from the accumulated gradients, then clears them.
    void apply(const std::vector<Param*>& params);

    OptimizerKind kind() const { return kind_; }
    Scalar lr() const { return lr_; }
    std::int64_t step_count() const { return step_; }

private:
    OptimizerKind kind_;
    Scalar lr_, beta1_, beta2_, eps_;
    std::int64_t step_ = 0;
    struct Moments {
        VectorX m, v;
    };
    std::unordered_map<const Param*, Moments> moments_;
};

// Backpropagates the scalar loss node through the tape, applies one optimizer
// step to the network parameters and clears gradients. The tape is consumed.
void backward_and_step(Network& net, Tape& tape, NodeId loss, OptimizerState& opt);

}  // namespace graphreg
