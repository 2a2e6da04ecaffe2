#include "graphreg/network.hpp"

#include "graphreg/io.hpp"

#include <cmath>

namespace graphreg {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::dense: return "dense";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::relu: return "relu";
        case LayerKind::sigmoid: return "sigmoid";
        case LayerKind::tanh: return "tanh";
        case LayerKind::softmax: return "softmax";
        case LayerKind::flatten: return "flatten";
        case LayerKind::maxpool: return "maxpool";
    }
    return "?";
}

LayerKind layer_kind_from_name(const std::string& name) {
    for (int k = 0; k <= static_cast<int>(LayerKind::maxpool); ++k)
        if (name == layer_kind_name(static_cast<LayerKind>(k))) return static_cast<LayerKind>(k);
    throw Error("unknown layer kind '" + name + "'");
}

Network::Network(std::vector<Index> input_shape) : input_shape_(std::move(input_shape)) {
    if (input_shape_.empty()) throw Error("network input shape must not be empty");
    Tensor::numel_of(input_shape_);  // validates positivity
}

static Index flat(const std::vector<Index>& s) {
    Index n = 1;
    for (Index e : s) n *= e;
    return n;
}

Network& Network::add(const LayerSpec& spec) {
    const std::vector<Index>& in = layers_.empty() ? input_shape_ : layers_.back().out_shape;
    Layer layer;
    layer.spec = spec;
    switch (spec.kind) {
        case LayerKind::dense: {
            if (in.size() != 1)
                throw Error(cat("dense layer needs a flat input, got rank-", in.size(),
                                " shape; add a flatten layer first"));
            if (spec.units <= 0) throw Error("dense layer needs units > 0");
            layer.w = Param(cat("dense", layers_.size(), ".w"), Tensor({in[0], spec.units}));
            layer.b = Param(cat("dense", layers_.size(), ".b"), Tensor({spec.units}));
            layer.out_shape = {spec.units};
            break;
        }
        case LayerKind::conv2d: {
            if (in.size() != 3)
                throw Error(cat("conv2d needs a (C,H,W) input, got rank-", in.size(), " shape"));
            if (spec.filters <= 0 || spec.kernel <= 0) throw Error("conv2d needs filters > 0 and kernel > 0");
            if (spec.padding == Padding::same && spec.kernel % 2 == 0)
                throw Error(cat("conv2d 'same' padding requires an odd kernel, got ", spec.kernel));
            const Index C = in[0], H = in[1], W = in[2];
            const Index pad = spec.padding == Padding::same ? (spec.kernel - 1) / 2 : 0;
            const Index OH = H + 2 * pad - spec.kernel + 1, OW = W + 2 * pad - spec.kernel + 1;
            if (OH <= 0 || OW <= 0)
                throw Error(cat("conv2d kernel ", spec.kernel, " too large for ", H, "x", W, " input"));
            layer.w = Param(cat("conv", layers_.size(), ".w"),
                            Tensor({spec.filters, C, spec.kernel, spec.kernel}));
            layer.b = Param(cat("conv", layers_.size(), ".b"), Tensor({spec.filters}));
            layer.out_shape = {spec.filters, OH, OW};
            break;
        }
        case LayerKind::maxpool: {
            if (in.size() != 3)
                throw Error(cat("maxpool needs a (C,H,W) input, got rank-", in.size(), " shape"));
            if (in[1] < 2 || in[2] < 2) throw Error(cat("maxpool input too small: ", in[1], "x", in[2]));
            layer.out_shape = {in[0], in[1] / 2, in[2] / 2};
            break;
        }
        case LayerKind::flatten:
            layer.out_shape = {flat(in)};
            break;
        case LayerKind::relu:
        case LayerKind::sigmoid:
        case LayerKind::tanh:
        case LayerKind::softmax:
            layer.out_shape = in;
            break;
    }
    layers_.push_back(std::move(layer));
    return *this;
}

void Network::set_tap(Index layer_index) {
    if (layer_index < 0 || layer_index >= num_layers())
        throw Error(cat("tap index ", layer_index, " out of range for ", num_layers(), " layers"));
    tap_ = layer_index;
}

const std::vector<Index>& Network::output_shape() const {
    if (layers_.empty()) throw Error("network has no layers");
    return layers_.back().out_shape;
}

void Network::init_params(std::uint64_t seed) {
    Rng rng = substream(seed, "init");
    for (Layer& layer : layers_) {
        if (layer.w.value.numel() == 0) continue;
        Index fan_in, fan_out;
        if (layer.spec.kind == LayerKind::dense) {
            fan_in = layer.w.value.dim(0);
            fan_out = layer.w.value.dim(1);
        } else {
            const Index k2 = layer.spec.kernel * layer.spec.kernel;
            fan_in = layer.w.value.dim(1) * k2;
            fan_out = layer.w.value.dim(0) * k2;
        }
        const Scalar a = std::sqrt(6.0 / static_cast<Scalar>(fan_in + fan_out));
        std::uniform_real_distribution<Scalar> dist(-a, a);
        for (Index i = 0; i < layer.w.value.numel(); ++i) layer.w.value.data[i] = dist(rng);
        layer.b.value.data.setZero();
        layer.w.zero_grad();
        layer.b.zero_grad();
    }
}

Network::Forward Network::forward(Tape& tape, const Tensor& batch) {
    if (batch.ndim() != static_cast<Index>(input_shape_.size()) + 1)
        throw Error(cat("batch rank ", batch.ndim(), " does not match input rank ",
                        input_shape_.size() + 1, " (batch plus ", input_shape_.size(), ")"));
    for (std::size_t i = 0; i < input_shape_.size(); ++i)
        if (batch.shape[i + 1] != input_shape_[i])
            throw Error(cat("batch dim ", i + 1, " is ", batch.shape[i + 1], ", network expects ",
                            input_shape_[i]));
    return forward_node(tape, tape.constant(batch));
}

Network::Forward Network::forward_node(Tape& tape, NodeId input) {
    if (layers_.empty()) throw Error("network has no layers");
    const Index n = tape.value(input).dim(0);
    NodeId x = input;
    Forward out;
    for (Index i = 0; i < num_layers(); ++i) {
        Layer& layer = layers_[static_cast<std::size_t>(i)];
        switch (layer.spec.kind) {
            case LayerKind::dense:
                x = tape.affine(x, tape.param(layer.w), tape.param(layer.b));
                break;
            case LayerKind::conv2d: {
                const Index pad = layer.spec.padding == Padding::same ? (layer.spec.kernel - 1) / 2 : 0;
                x = tape.conv2d(x, tape.param(layer.w), tape.param(layer.b), pad);
                break;
            }
            case LayerKind::maxpool: x = tape.maxpool2(x); break;
            case LayerKind::flatten: x = tape.reshape(x, {n, layer.out_shape[0]}); break;
            case LayerKind::relu: x = tape.relu(x); break;
            case LayerKind::sigmoid: x = tape.sigmoid(x); break;
            case LayerKind::tanh: x = tape.tanh_act(x); break;
            case LayerKind::softmax: x = tape.softmax_rows(x); break;
        }
        if (i == tap()) out.hidden = x;
    }
    out.logits = x;
    return out;
}

std::vector<Param*> Network::params() {
    std::vector<Param*> ps;
    for (Layer& layer : layers_)
        if (layer.w.value.numel() != 0) {
            ps.push_back(&layer.w);
            ps.push_back(&layer.b);
        }
    return ps;
}

std::vector<const Param*> Network::params() const {
    std::vector<const Param*> ps;
    for (const Layer& layer : layers_)
        if (layer.w.value.numel() != 0) {
            ps.push_back(&layer.w);
            ps.push_back(&layer.b);
        }
    return ps;
}

static constexpr char kNetMagic[8] = {'G', 'R', 'E', 'G', 'N', 'E', 'T', '1'};
static constexpr std::uint32_t kNetVersion = 1;

void Network::save(const std::string& path) const {
    BinaryWriter w(path, kNetMagic, kNetVersion);
    w.u64(input_shape_.size());
    for (Index e : input_shape_) w.i64(e);
    w.i64(tap_);
    w.u64(layers_.size());
    for (const Layer& layer : layers_) {
        w.str(layer_kind_name(layer.spec.kind));
        w.i64(layer.spec.units);
        w.i64(layer.spec.filters);
        w.i64(layer.spec.kernel);
        w.u32(layer.spec.padding == Padding::same ? 0 : 1);
        w.u64(layer.w.value.shape.size());
        for (Index e : layer.w.value.shape) w.i64(e);
        w.vec(layer.w.value.data);
        w.vec(layer.b.value.data);
    }
    w.finish();
}

Network Network::load(const std::string& path) {
    BinaryReader r(path, kNetMagic, kNetVersion);
    std::vector<Index> in_shape(r.u64());
    for (Index& e : in_shape) e = r.i64();
    Network net(in_shape);
    const Index tap = r.i64();
    const std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        LayerSpec spec;
        spec.kind = layer_kind_from_name(r.str());
        spec.units = r.i64();
        spec.filters = r.i64();
        spec.kernel = r.i64();
        spec.padding = r.u32() == 0 ? Padding::same : Padding::valid;
        net.add(spec);
        Layer& layer = net.layers_.back();
        std::vector<Index> wshape(r.u64());
        for (Index& e : wshape) e = r.i64();
        VectorX wdata = r.vec();
        VectorX bdata = r.vec();
        if (layer.w.value.numel() != 0) {
            if (!same_shape(wshape, layer.w.value.shape) || bdata.size() != layer.b.value.numel())
                throw Error("network file parameter shapes do not match layer specs: " + path);
            layer.w.value.data = std::move(wdata);
            layer.b.value.data = std::move(bdata);
        }
    }
    if (tap >= 0) net.set_tap(tap);
    r.finish();
    return net;
}

}  // namespace graphreg
