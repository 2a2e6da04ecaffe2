#pragma once

// Reverse-mode automatic differentiation over whole tensors. A Tape records
// the forward pass as an append-only node list (already in topological
// order), so backward is one reverse sweep. Trainable parameters are staged
// onto a tape at most once, which makes gradients accumulate naturally when
// several forward passes share weights (seed + neighbour batches, GAN-style
// alternation).

#include "graphreg/tensor.hpp"

#include <functional>
#include <unordered_map>

namespace graphreg {

using NodeId = std::int32_t;

// A trainable tensor with its accumulated gradient, owned by a layer/model.
struct Param {
    std::string name;
    Tensor value;
    VectorX grad;

    Param() = default;
    Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
        grad = VectorX::Zero(value.numel());
    }
    void zero_grad() { grad.setZero(); }
};

enum class NeighborMetric { squared_l2, cosine_distance };

class Tape {
public:
    NodeId constant(Tensor v);
    NodeId param(Param& p);  // staged once per tape; repeated calls return the same node

    const Tensor& value(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }

    // Propagates d(loss)/d(node) for a scalar loss node and accumulates into
    // each staged Param's grad. A tape records exactly one backward pass.
    void backward(NodeId loss);
    bool consumed() const { return consumed_; }

    // -- elementwise / structural --------------------------------------
    NodeId add(NodeId a, NodeId b);
    NodeId scale(NodeId a, Scalar s);
    NodeId relu(NodeId x);
    NodeId sigmoid(NodeId x);
    NodeId tanh_act(NodeId x);
    NodeId softmax_rows(NodeId x);
    NodeId reshape(NodeId x, std::vector<Index> new_shape);
    NodeId slice_cols(NodeId x, Index begin, Index len);

    // -- linear algebra -------------------------------------------------
    // y = x * w + 1 b^T, x:(N,D) w:(D,M) b:(M)
    NodeId affine(NodeId x, NodeId w, NodeId b);
    // stride-1 2-D convolution, x:(N,C,H,W) w:(F,C,k,k) b:(F); pad 0 = valid
    NodeId conv2d(NodeId x, NodeId w, NodeId b, Index pad);
    // 2x2 max pooling with stride 2 (floor on odd extents)
    NodeId maxpool2(NodeId x);

    // -- losses (all reduce to a scalar node) ----------------------------
    // mean over rows of -log softmax(logits)[label], fused log-sum-exp
    NodeId sparse_cross_entropy(NodeId logits, const std::vector<int>& labels);
    // mean over rows of the squared L2 distance to a fixed target
    NodeId squared_error(NodeId x, const Tensor& target);
    // mean over rows of KL( N(mu, e^logvar) || N(0,1) ), closed form
    NodeId gaussian_kl(NodeId mu, NodeId logvar);
    // z = mu + exp(logvar/2) .* eps with eps a frozen noise tensor
    NodeId reparameterize(NodeId mu, NodeId logvar, const Tensor& eps);
    // mean softplus(-u) == -mean log sigmoid(u)   (BCE toward 1, from logits)
    NodeId bce_toward_one(NodeId logits);
    // mean softplus(u)  == -mean log(1 - sigmoid(u))
    NodeId bce_toward_zero(NodeId logits);
    // sum_k w_k * d(hidden[0], hidden[1+k]) with d per metric; row 0 is the seed
    NodeId neighbor_penalty(NodeId hidden, const VectorX& weights, NeighborMetric metric);

private:
    struct Node {
        Tensor value;
        VectorX grad;  // allocated lazily, same numel as value
        std::function<void(Tape&, NodeId)> back;
        Param* source = nullptr;
    };

    NodeId push(Tensor v, std::function<void(Tape&, NodeId)> back = nullptr, Param* src = nullptr);
    VectorX& grad_of(NodeId id);
    bool has_grad(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].grad.size() != 0; }
    const VectorX& grad_ro(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

    std::vector<Node> nodes_;
    std::unordered_map<const Param*, NodeId> staged_;
    bool consumed_ = false;
};

// Plain evaluation of the fused softmax cross-entropy, no tape involved.
Scalar sparse_categorical_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

}  // namespace graphreg
