#include "graphreg/gradcheck.hpp"

#include <cmath>

namespace graphreg {

GradCheckReport grad_check_fn(const std::vector<Param*>& params,
                              const std::function<Scalar(bool accumulate_grads)>& loss_fn,
                              double eps, Index max_coords_per_param) {
    if (eps <= 0) throw Error("grad_check eps must be positive");
    for (Param* p : params) p->zero_grad();
    loss_fn(true);
    std::vector<VectorX> ad;
    ad.reserve(params.size());
    for (Param* p : params) ad.push_back(p->grad);

    GradCheckReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Param* p = params[pi];
        const Index n = p->value.numel();
        const Index stride =
            max_coords_per_param > 0 && n > max_coords_per_param ? n / max_coords_per_param : 1;
        for (Index i = 0; i < n; i += stride) {
            const Scalar saved = p->value.data[i];
            p->value.data[i] = saved + eps;
            const Scalar lp = loss_fn(false);
            p->value.data[i] = saved - eps;
            const Scalar lm = loss_fn(false);
            p->value.data[i] = saved;
            const Scalar fd = (lp - lm) / (2.0 * eps);
            const Scalar a = ad[pi][i];
            const Scalar rel = std::abs(a - fd) / std::max(std::abs(a) + std::abs(fd), 1e-3);
            ++report.coords_checked;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = p->name;
            }
        }
    }
    for (Param* p : params) p->zero_grad();
    return report;
}

GradCheckReport grad_check(Network& net, const Tensor& input, const std::vector<int>& labels,
                           double eps, Index max_coords_per_param) {
    auto loss_fn = [&](bool accumulate) {
        Tape tape;
        auto fwd = net.forward(tape, input);
        NodeId loss = tape.sparse_cross_entropy(fwd.logits, labels);
        const Scalar v = tape.value(loss).data[0];
        if (accumulate) tape.backward(loss);
        return v;
    };
    return grad_check_fn(net.params(), loss_fn, eps, max_coords_per_param);
}

}  // namespace graphreg
