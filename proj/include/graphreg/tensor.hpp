#pragma once

#include "graphreg/common.hpp"

#include <numeric>

namespace graphreg {

// Dense multi-dimensional array, 64-bit reals in row-major order.
struct Tensor {
    std::vector<Index> shape;
    VectorX data;

    Tensor() = default;
    explicit Tensor(std::vector<Index> s) : shape(std::move(s)), data(VectorX::Zero(numel_of(shape))) {}
    Tensor(std::vector<Index> s, VectorX d) : shape(std::move(s)), data(std::move(d)) {
        if (numel_of(shape) != data.size())
            throw Error(cat("tensor data size ", data.size(), " does not match shape product ", numel_of(shape)));
    }

    static Index numel_of(const std::vector<Index>& s) {
        Index n = 1;
        for (Index e : s) {
            if (e <= 0) throw Error(cat("non-positive tensor extent ", e));
            n *= e;
        }
        return n;
    }

    static Tensor from_matrix(const Eigen::Ref<const MatrixX>& m) {
        Tensor t({m.rows(), m.cols()});
        Eigen::Map<RowMatrixX>(t.data.data(), m.rows(), m.cols()) = m;
        return t;
    }

    static Tensor scalar(Scalar v) {
        Tensor t({1});
        t.data[0] = v;
        return t;
    }

    Index numel() const { return data.size(); }
    Index ndim() const { return static_cast<Index>(shape.size()); }
    Index dim(Index i) const { return shape.at(static_cast<std::size_t>(i)); }

    // 2-D view: first extent as rows, the rest collapsed into columns.
    Index rows2d() const { return shape.empty() ? 1 : shape[0]; }
    Index cols2d() const { return shape.empty() ? numel() : numel() / shape[0]; }
    Eigen::Map<RowMatrixX> mat() { return {data.data(), rows2d(), cols2d()}; }
    Eigen::Map<const RowMatrixX> mat() const { return {data.data(), rows2d(), cols2d()}; }

    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
        return s + ")";
    }
};

inline bool same_shape(const std::vector<Index>& a, const std::vector<Index>& b) { return a == b; }

}  // namespace graphreg
