#pragma once

// t-SNE: Gaussian joint affinities in the input space (per-point sigma from a
// perplexity search), Student-t affinities in the map space, gradient descent
// on KL(P||Q) with momentum, gains and an early-exaggeration phase.

#include "graphreg/embedding.hpp"

namespace graphreg {

struct TsneConfig {
    Index dim = 2;
    Scalar perplexity = 30.0;
    Index iters = 500;
    Scalar learning_rate = 200.0;
    std::uint64_t seed = 0;
};

struct TsneResult {
    EmbeddingTable table;
    Scalar kl_initial = 0;
    Scalar kl_final = 0;
};

// KL(P||Q) = sum p log(p/q) with 0 log 0 := 0; q must be positive wherever
// p is.
Scalar kl_divergence(const Eigen::Ref<const MatrixX>& P, const Eigen::Ref<const MatrixX>& Q);

// Symmetric joint affinities of the input rows for a target perplexity.
MatrixX tsne_affinities(const Eigen::Ref<const MatrixX>& vectors, Scalar perplexity);

TsneResult tsne_run(const Eigen::Ref<const MatrixX>& vectors, const TsneConfig& config,
                    std::vector<Index> indices = {});

EmbeddingTable tsne_embed(const Eigen::Ref<const MatrixX>& vectors, const TsneConfig& config,
                          std::vector<Index> indices = {});

}  // namespace graphreg
