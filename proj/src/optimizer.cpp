#include "graphreg/optimizer.hpp"

#include <cmath>

namespace graphreg {

void OptimizerState::apply(const std::vector<Param*>& params) {
    ++step_;
    for (Param* p : params) {
        if (kind_ == OptimizerKind::sgd) {
            p->value.data -= lr_ * p->grad;
        } else {
            Moments& mo = moments_[p];
            if (mo.m.size() == 0) {
                mo.m = VectorX::Zero(p->value.numel());
                mo.v = VectorX::Zero(p->value.numel());
            }
            if (mo.m.size() != p->grad.size())
                throw Error(cat("optimizer moment shape ", mo.m.size(), " does not match parameter '",
                                p->name, "' of size ", p->grad.size()));
            mo.m = beta1_ * mo.m + (1.0 - beta1_) * p->grad;
            mo.v = beta2_ * mo.v + (1.0 - beta2_) * p->grad.cwiseProduct(p->grad);
            const Scalar bc1 = 1.0 - std::pow(beta1_, static_cast<Scalar>(step_));
            const Scalar bc2 = 1.0 - std::pow(beta2_, static_cast<Scalar>(step_));
            p->value.data.array() -=
                lr_ * (mo.m.array() / bc1) / ((mo.v.array() / bc2).sqrt() + eps_);
        }
        p->zero_grad();
    }
}

void backward_and_step(Network& net, Tape& tape, NodeId loss, OptimizerState& opt) {
    tape.backward(loss);
    opt.apply(net.params());
}

}  // namespace graphreg
