#pragma once

// Sequential networks over the tape: dense, conv2d (stride 1), 2x2 max-pool,
// relu/sigmoid/tanh/softmax, flatten. One layer is designated as the "tap"
// whose activations serve as the hidden representation for the neighbour
// distance penalty; by default the penultimate layer.

#include "graphreg/autodiff.hpp"

namespace graphreg {

enum class LayerKind { dense, conv2d, relu, sigmoid, tanh, softmax, flatten, maxpool };
enum class Padding { same, valid };

struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    Index units = 0;    // dense
    Index filters = 0;  // conv2d
    Index kernel = 0;   // conv2d, square
    Padding padding = Padding::same;

    static LayerSpec dense(Index units) { return {LayerKind::dense, units, 0, 0, Padding::same}; }
    static LayerSpec conv2d(Index filters, Index kernel, Padding p = Padding::same) {
        return {LayerKind::conv2d, 0, filters, kernel, p};
    }
    static LayerSpec relu() { return {LayerKind::relu}; }
    static LayerSpec sigmoid() { return {LayerKind::sigmoid}; }
    static LayerSpec tanh() { return {LayerKind::tanh}; }
    static LayerSpec softmax() { return {LayerKind::softmax}; }
    static LayerSpec flatten() { return {LayerKind::flatten}; }
    static LayerSpec maxpool() { return {LayerKind::maxpool}; }
};

const char* layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& name);

class Network {
public:
    // input_shape excludes the batch dimension: (D) or (C,H,W)
    explicit Network(std::vector<Index> input_shape);

    Network& add(const LayerSpec& spec);
    void set_tap(Index layer_index);
    Index tap() const { return tap_ < 0 ? default_tap() : tap_; }
    Index num_layers() const { return static_cast<Index>(layers_.size()); }
    const std::vector<Index>& input_shape() const { return input_shape_; }
    const std::vector<Index>& output_shape() const;
    const LayerSpec& layer_spec(Index i) const { return layers_.at(static_cast<std::size_t>(i)).spec; }

    // Glorot-style uniform init scaled by fan-in/out, biases zero.
    void init_params(std::uint64_t seed);

    struct Forward {
        NodeId logits = -1;  // output of the last layer
        NodeId hidden = -1;  // output of the tap layer
    };
    Forward forward(Tape& tape, const Tensor& batch);
    Forward forward_node(Tape& tape, NodeId input);

    std::vector<Param*> params();
    std::vector<const Param*> params() const;

    void save(const std::string& path) const;
    static Network load(const std::string& path);

private:
    struct Layer {
        LayerSpec spec;
        Param w, b;
        std::vector<Index> out_shape;
    };

    Index default_tap() const {
        return layers_.size() >= 2 ? static_cast<Index>(layers_.size()) - 2
                                   : static_cast<Index>(layers_.size()) - 1;
    }

    std::vector<Index> input_shape_;
    std::vector<Layer> layers_;
    Index tap_ = -1;
};

}  // namespace graphreg
