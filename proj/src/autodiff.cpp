#include "graphreg/autodiff.hpp"

#include <cmath>
#include <memory>

namespace graphreg {

namespace {

Scalar softplus(Scalar u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }
Scalar sigmoid_s(Scalar u) { return u >= 0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u)); }

}  // namespace

NodeId Tape::push(Tensor v, std::function<void(Tape&, NodeId)> back, Param* src) {
    nodes_.push_back(Node{std::move(v), VectorX(), std::move(back), src});
    return static_cast<NodeId>(nodes_.size() - 1);
}

VectorX& Tape::grad_of(NodeId id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) n.grad = VectorX::Zero(n.value.numel());
    return n.grad;
}

NodeId Tape::constant(Tensor v) { return push(std::move(v)); }

NodeId Tape::param(Param& p) {
    auto it = staged_.find(&p);
    if (it != staged_.end()) return it->second;
    NodeId id = push(p.value, nullptr, &p);
    staged_.emplace(&p, id);
    return id;
}

void Tape::backward(NodeId loss) {
    if (consumed_)
        throw Error("backward called twice on the same recorded graph; run a new forward first");
    const Node& ln = nodes_.at(static_cast<std::size_t>(loss));
    if (ln.value.numel() != 1)
        throw Error(cat("backward requires a scalar loss node, got shape ", ln.value.shape_str()));
    grad_of(loss)[0] = 1.0;
    for (NodeId i = loss; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.grad.size() != 0 && n.back) n.back(*this, i);
    }
    for (auto& [p, id] : staged_) {
        if (has_grad(id)) const_cast<Param*>(p)->grad += grad_ro(id);
    }
    consumed_ = true;
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (!same_shape(va.shape, vb.shape))
        throw Error(cat("add shape mismatch: ", va.shape_str(), " vs ", vb.shape_str()));
    Tensor out = va;
    out.data += vb.data;
    return push(std::move(out), [a, b](Tape& t, NodeId self) {
        const VectorX& g = t.grad_ro(self);
        t.grad_of(a) += g;
        t.grad_of(b) += g;
    });
}

NodeId Tape::scale(NodeId a, Scalar s) {
    Tensor out = value(a);
    out.data *= s;
    return push(std::move(out), [a, s](Tape& t, NodeId self) {
        t.grad_of(a) += s * t.grad_ro(self);
    });
}

NodeId Tape::relu(NodeId x) {
    Tensor out = value(x);
    out.data = out.data.cwiseMax(0.0);
    return push(std::move(out), [x](Tape& t, NodeId self) {
        const VectorX& g = t.grad_ro(self);
        const VectorX& in = t.value(x).data;
        t.grad_of(x).array() += g.array() * (in.array() > 0.0).cast<Scalar>();
    });
}

NodeId Tape::sigmoid(NodeId x) {
    Tensor out = value(x);
    out.data = out.data.unaryExpr([](Scalar u) { return sigmoid_s(u); });
    return push(std::move(out), [x](Tape& t, NodeId self) {
        const VectorX& g = t.grad_ro(self);
        const VectorX& y = t.value(self).data;
        t.grad_of(x).array() += g.array() * y.array() * (1.0 - y.array());
    });
}

NodeId Tape::tanh_act(NodeId x) {
    Tensor out = value(x);
    out.data = out.data.array().tanh();
    return push(std::move(out), [x](Tape& t, NodeId self) {
        const VectorX& g = t.grad_ro(self);
        const VectorX& y = t.value(self).data;
        t.grad_of(x).array() += g.array() * (1.0 - y.array().square());
    });
}

NodeId Tape::softmax_rows(NodeId x) {
    Tensor out = value(x);
    auto m = out.mat();
    for (Index r = 0; r < m.rows(); ++r) {
        Scalar mx = m.row(r).maxCoeff();
        m.row(r) = (m.row(r).array() - mx).exp();
        m.row(r) /= m.row(r).sum();
    }
    return push(std::move(out), [x](Tape& t, NodeId self) {
        auto g = Eigen::Map<const RowMatrixX>(t.grad_ro(self).data(), t.value(self).rows2d(), t.value(self).cols2d());
        auto y = t.value(self).mat();
        auto gx = Eigen::Map<RowMatrixX>(t.grad_of(x).data(), y.rows(), y.cols());
        for (Index r = 0; r < y.rows(); ++r) {
            Scalar dot = g.row(r).cwiseProduct(y.row(r)).sum();
            gx.row(r).array() += y.row(r).array() * (g.row(r).array() - dot);
        }
    });
}

NodeId Tape::reshape(NodeId x, std::vector<Index> new_shape) {
    const Tensor& vx = value(x);
    if (Tensor::numel_of(new_shape) != vx.numel())
        throw Error(cat("reshape from ", vx.shape_str(), " to incompatible size ",
                        Tensor::numel_of(new_shape)));
    Tensor out(std::move(new_shape), vx.data);
    return push(std::move(out), [x](Tape& t, NodeId self) {
        t.grad_of(x) += t.grad_ro(self);
    });
}

NodeId Tape::slice_cols(NodeId x, Index begin, Index len) {
    const Tensor& vx = value(x);
    Index rows = vx.rows2d(), cols = vx.cols2d();
    if (begin < 0 || len <= 0 || begin + len > cols)
        throw Error(cat("slice_cols [", begin, ",", begin + len, ") out of range for ", cols, " columns"));
    Tensor out({rows, len});
    out.mat() = vx.mat().middleCols(begin, len);
    return push(std::move(out), [x, begin, len](Tape& t, NodeId self) {
        const Tensor& vin = t.value(x);
        auto gx = Eigen::Map<RowMatrixX>(t.grad_of(x).data(), vin.rows2d(), vin.cols2d());
        auto g = Eigen::Map<const RowMatrixX>(t.grad_ro(self).data(), vin.rows2d(), len);
        gx.middleCols(begin, len) += g;
    });
}

NodeId Tape::affine(NodeId x, NodeId w, NodeId b) {
    const Tensor& vx = value(x);
    const Tensor& vw = value(w);
    const Tensor& vb = value(b);
    if (vx.ndim() != 2 || vw.ndim() != 2 || vx.dim(1) != vw.dim(0))
        throw Error(cat("affine shape mismatch: input ", vx.shape_str(), " vs weights ", vw.shape_str()));
    if (vb.numel() != vw.dim(1))
        throw Error(cat("affine bias size ", vb.numel(), " vs output width ", vw.dim(1)));
    Tensor out({vx.dim(0), vw.dim(1)});
    out.mat() = vx.mat() * vw.mat();
    out.mat().rowwise() += vb.data.transpose();
    return push(std::move(out), [x, w, b](Tape& t, NodeId self) {
        auto X = t.value(x).mat();
        auto W = t.value(w).mat();
        auto G = Eigen::Map<const RowMatrixX>(t.grad_ro(self).data(), X.rows(), W.cols());
        Eigen::Map<RowMatrixX>(t.grad_of(x).data(), X.rows(), X.cols()) += G * W.transpose();
        Eigen::Map<RowMatrixX>(t.grad_of(w).data(), W.rows(), W.cols()) += X.transpose() * G;
        t.grad_of(b) += G.colwise().sum().transpose();
    });
}

NodeId Tape::conv2d(NodeId x, NodeId w, NodeId b, Index pad) {
    const Tensor& vx = value(x);
    const Tensor& vw = value(w);
    if (vx.ndim() != 4)
        throw Error(cat("conv2d expects a (N,C,H,W) input, got ", vx.shape_str()));
    if (vw.ndim() != 4 || vw.dim(1) != vx.dim(1))
        throw Error(cat("conv2d kernel ", vw.shape_str(), " does not match input channels of ", vx.shape_str()));
    const Index N = vx.dim(0), C = vx.dim(1), H = vx.dim(2), W_ = vx.dim(3);
    const Index F = vw.dim(0), K = vw.dim(2);
    if (vw.dim(3) != K) throw Error(cat("conv2d kernel must be square, got ", vw.shape_str()));
    const Index OH = H + 2 * pad - K + 1, OW = W_ + 2 * pad - K + 1;
    if (OH <= 0 || OW <= 0)
        throw Error(cat("conv2d kernel ", K, " too large for input ", vx.shape_str(), " with pad ", pad));
    if (value(b).numel() != F)
        throw Error(cat("conv2d bias size ", value(b).numel(), " vs filters ", F));

    Tensor out({N, F, OH, OW});
    const Scalar* xd = vx.data.data();
    const Scalar* wd = vw.data.data();
    const Scalar* bd = value(b).data.data();
    Scalar* od = out.data.data();
    for (Index n = 0; n < N; ++n)
        for (Index f = 0; f < F; ++f)
            for (Index oh = 0; oh < OH; ++oh)
                for (Index ow = 0; ow < OW; ++ow) {
                    Scalar acc = bd[f];
                    for (Index c = 0; c < C; ++c)
                        for (Index kh = 0; kh < K; ++kh) {
                            const Index ih = oh + kh - pad;
                            if (ih < 0 || ih >= H) continue;
                            for (Index kw = 0; kw < K; ++kw) {
                                const Index iw = ow + kw - pad;
                                if (iw < 0 || iw >= W_) continue;
                                acc += xd[((n * C + c) * H + ih) * W_ + iw] *
                                       wd[((f * C + c) * K + kh) * K + kw];
                            }
                        }
                    od[((n * F + f) * OH + oh) * OW + ow] = acc;
                }

    return push(std::move(out), [x, w, b, pad, N, C, H, W_, F, K, OH, OW](Tape& t, NodeId self) {
        const Scalar* g = t.grad_ro(self).data();
        const Scalar* xd2 = t.value(x).data.data();
        const Scalar* wd2 = t.value(w).data.data();
        Scalar* gx = t.grad_of(x).data();
        Scalar* gw = t.grad_of(w).data();
        Scalar* gb = t.grad_of(b).data();
        for (Index n = 0; n < N; ++n)
            for (Index f = 0; f < F; ++f)
                for (Index oh = 0; oh < OH; ++oh)
                    for (Index ow = 0; ow < OW; ++ow) {
                        const Scalar go = g[((n * F + f) * OH + oh) * OW + ow];
                        if (go == 0.0) continue;
                        gb[f] += go;
                        for (Index c = 0; c < C; ++c)
                            for (Index kh = 0; kh < K; ++kh) {
                                const Index ih = oh + kh - pad;
                                if (ih < 0 || ih >= H) continue;
                                for (Index kw = 0; kw < K; ++kw) {
                                    const Index iw = ow + kw - pad;
                                    if (iw < 0 || iw >= W_) continue;
                                    const Index xi = ((n * C + c) * H + ih) * W_ + iw;
                                    const Index wi = ((f * C + c) * K + kh) * K + kw;
                                    gx[xi] += go * wd2[wi];
                                    gw[wi] += go * xd2[xi];
                                }
                            }
                    }
    });
}

NodeId Tape::maxpool2(NodeId x) {
    const Tensor& vx = value(x);
    if (vx.ndim() != 4)
        throw Error(cat("maxpool2 expects a (N,C,H,W) input, got ", vx.shape_str()));
    const Index N = vx.dim(0), C = vx.dim(1), H = vx.dim(2), W_ = vx.dim(3);
    const Index OH = H / 2, OW = W_ / 2;
    if (OH == 0 || OW == 0)
        throw Error(cat("maxpool2 input too small: ", vx.shape_str()));
    Tensor out({N, C, OH, OW});
    auto argmax = std::make_shared<std::vector<Index>>(static_cast<std::size_t>(out.numel()));
    const Scalar* xd = vx.data.data();
    Scalar* od = out.data.data();
    Index o = 0;
    for (Index n = 0; n < N; ++n)
        for (Index c = 0; c < C; ++c)
            for (Index oh = 0; oh < OH; ++oh)
                for (Index ow = 0; ow < OW; ++ow, ++o) {
                    Index best = ((n * C + c) * H + 2 * oh) * W_ + 2 * ow;
                    Scalar bv = xd[best];
                    for (Index dh = 0; dh < 2; ++dh)
                        for (Index dw = 0; dw < 2; ++dw) {
                            Index idx = ((n * C + c) * H + 2 * oh + dh) * W_ + 2 * ow + dw;
                            if (xd[idx] > bv) { bv = xd[idx]; best = idx; }
                        }
                    od[o] = bv;
                    (*argmax)[static_cast<std::size_t>(o)] = best;
                }
    return push(std::move(out), [x, argmax](Tape& t, NodeId self) {
        const VectorX& g = t.grad_ro(self);
        VectorX& gx = t.grad_of(x);
        for (Index i = 0; i < g.size(); ++i) gx[(*argmax)[static_cast<std::size_t>(i)]] += g[i];
    });
}

NodeId Tape::sparse_cross_entropy(NodeId logits, const std::vector<int>& labels) {
    const Tensor& vl = value(logits);
    const Index N = vl.rows2d(), C = vl.cols2d();
    if (static_cast<Index>(labels.size()) != N)
        throw Error(cat("label count ", labels.size(), " does not match batch size ", N));
    auto L = vl.mat();
    Scalar loss = 0;
    for (Index r = 0; r < N; ++r) {
        int y = labels[static_cast<std::size_t>(r)];
        if (y < 0 || y >= C)
            throw Error(cat("label ", y, " at index ", r, " out of range [0,", C, ")"));
        Scalar mx = L.row(r).maxCoeff();
        Scalar lse = mx + std::log((L.row(r).array() - mx).exp().sum());
        loss += lse - L(r, y);
    }
    loss /= static_cast<Scalar>(N);
    auto labels_copy = std::make_shared<std::vector<int>>(labels);
    return push(Tensor::scalar(loss), [logits, labels_copy, N, C](Tape& t, NodeId self) {
        const Scalar g = t.grad_ro(self)[0] / static_cast<Scalar>(N);
        auto L2 = t.value(logits).mat();
        auto gl = Eigen::Map<RowMatrixX>(t.grad_of(logits).data(), N, C);
        for (Index r = 0; r < N; ++r) {
            Scalar mx = L2.row(r).maxCoeff();
            Eigen::RowVectorXd p = (L2.row(r).array() - mx).exp();
            p /= p.sum();
            gl.row(r) += g * p;
            gl(r, (*labels_copy)[static_cast<std::size_t>(r)]) -= g;
        }
    });
}

NodeId Tape::squared_error(NodeId x, const Tensor& target) {
    const Tensor& vx = value(x);
    if (!same_shape(vx.shape, target.shape))
        throw Error(cat("squared_error shapes differ: ", vx.shape_str(), " vs ", target.shape_str()));
    const Index N = vx.rows2d();
    Scalar loss = (vx.data - target.data).squaredNorm() / static_cast<Scalar>(N);
    auto tgt = std::make_shared<VectorX>(target.data);
    return push(Tensor::scalar(loss), [x, tgt, N](Tape& t, NodeId self) {
        const Scalar g = t.grad_ro(self)[0];
        t.grad_of(x) += (2.0 * g / static_cast<Scalar>(N)) * (t.value(x).data - *tgt);
    });
}

NodeId Tape::gaussian_kl(NodeId mu, NodeId logvar) {
    const Tensor& vm = value(mu);
    const Tensor& vl = value(logvar);
    if (!same_shape(vm.shape, vl.shape))
        throw Error(cat("gaussian_kl shapes differ: ", vm.shape_str(), " vs ", vl.shape_str()));
    const Index N = vm.rows2d();
    Scalar kl = -0.5 *
                (1.0 + vl.data.array() - vm.data.array().square() - vl.data.array().exp()).sum() /
                static_cast<Scalar>(N);
    return push(Tensor::scalar(kl), [mu, logvar, N](Tape& t, NodeId self) {
        const Scalar g = t.grad_ro(self)[0] / static_cast<Scalar>(N);
        t.grad_of(mu) += g * t.value(mu).data;
        t.grad_of(logvar).array() += g * 0.5 * (t.value(logvar).data.array().exp() - 1.0);
    });
}

NodeId Tape::reparameterize(NodeId mu, NodeId logvar, const Tensor& eps) {
    const Tensor& vm = value(mu);
    if (!same_shape(vm.shape, eps.shape) || !same_shape(value(logvar).shape, eps.shape))
        throw Error("reparameterize: mu, logvar and noise shapes must agree");
    Tensor out = vm;
    out.data.array() += (0.5 * value(logvar).data.array()).exp() * eps.data.array();
    auto noise = std::make_shared<VectorX>(eps.data);
    return push(std::move(out), [mu, logvar, noise](Tape& t, NodeId self) {
        const VectorX& g = t.grad_ro(self);
        t.grad_of(mu) += g;
        t.grad_of(logvar).array() +=
            g.array() * 0.5 * (0.5 * t.value(logvar).data.array()).exp() * noise->array();
    });
}

NodeId Tape::bce_toward_one(NodeId logits) {
    const VectorX& u = value(logits).data;
    Scalar loss = u.unaryExpr([](Scalar v) { return softplus(-v); }).mean();
    return push(Tensor::scalar(loss), [logits](Tape& t, NodeId self) {
        const VectorX& u2 = t.value(logits).data;
        const Scalar g = t.grad_ro(self)[0] / static_cast<Scalar>(u2.size());
        t.grad_of(logits) += g * u2.unaryExpr([](Scalar v) { return sigmoid_s(v) - 1.0; });
    });
}

NodeId Tape::bce_toward_zero(NodeId logits) {
    const VectorX& u = value(logits).data;
    Scalar loss = u.unaryExpr([](Scalar v) { return softplus(v); }).mean();
    return push(Tensor::scalar(loss), [logits](Tape& t, NodeId self) {
        const VectorX& u2 = t.value(logits).data;
        const Scalar g = t.grad_ro(self)[0] / static_cast<Scalar>(u2.size());
        t.grad_of(logits) += g * u2.unaryExpr([](Scalar v) { return sigmoid_s(v); });
    });
}

Scalar sparse_categorical_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    Tape t;
    NodeId l = t.constant(logits);
    return t.value(t.sparse_cross_entropy(l, labels)).data[0];
}

NodeId Tape::neighbor_penalty(NodeId hidden, const VectorX& weights, NeighborMetric metric) {
    const Tensor& vh = value(hidden);
    const Index rows = vh.rows2d(), D = vh.cols2d();
    if (rows != weights.size() + 1)
        throw Error(cat("neighbor_penalty: ", rows, " rows require ", rows - 1, " weights, got ", weights.size()));
    auto H = vh.mat();
    Scalar loss = 0;
    if (metric == NeighborMetric::squared_l2) {
        for (Index k = 0; k < weights.size(); ++k)
            loss += weights[k] * (H.row(0) - H.row(k + 1)).squaredNorm();
    } else {
        for (Index k = 0; k < weights.size(); ++k) {
            Scalar na = H.row(0).norm(), nb = H.row(k + 1).norm();
            if (na == 0.0 || nb == 0.0)
                throw Error(cat("cosine neighbor metric on zero hidden vector (row ", na == 0.0 ? 0 : k + 1, ")"));
            loss += weights[k] * (1.0 - H.row(0).dot(H.row(k + 1)) / (na * nb));
        }
    }
    auto w = std::make_shared<VectorX>(weights);
    return push(Tensor::scalar(loss), [hidden, w, metric, D](Tape& t, NodeId self) {
        const Scalar g = t.grad_ro(self)[0];
        auto H2 = t.value(hidden).mat();
        auto gh = Eigen::Map<RowMatrixX>(t.grad_of(hidden).data(), H2.rows(), D);
        if (metric == NeighborMetric::squared_l2) {
            for (Index k = 0; k < w->size(); ++k) {
                Eigen::RowVectorXd diff = H2.row(0) - H2.row(k + 1);
                gh.row(0) += g * 2.0 * (*w)[k] * diff;
                gh.row(k + 1) -= g * 2.0 * (*w)[k] * diff;
            }
        } else {
            for (Index k = 0; k < w->size(); ++k) {
                Eigen::RowVectorXd a = H2.row(0), b = H2.row(k + 1);
                Scalar na = a.norm(), nb = b.norm();
                Scalar cos = a.dot(b) / (na * nb);
                // d(1-cos)/da = -(b/(|a||b|) - cos a/|a|^2)
                gh.row(0) += g * (*w)[k] * (cos * a / (na * na) - b / (na * nb));
                gh.row(k + 1) += g * (*w)[k] * (cos * b / (nb * nb) - a / (na * nb));
            }
        }
    });
}

}  // namespace graphreg
