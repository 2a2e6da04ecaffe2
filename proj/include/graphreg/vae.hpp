#pragma once

// Variational autoencoder over flattened images: a two-layer dense encoder
// producing per-coordinate mean and log-variance, a mirrored decoder, and the
// total loss = closed-form KL to N(0,1) + mean squared reconstruction error.

#include "graphreg/embedding.hpp"
#include "graphreg/loss.hpp"
#include "graphreg/network.hpp"

namespace graphreg {

struct VaeConfig {
    Index latent = 128;
    Index hidden = 128;
    Index epochs = 20;
    Scalar lr = 1e-3;
    Index batch = 32;
    std::uint64_t seed = 0;
};

struct VaeModel {
    Network encoder;  // D -> hidden -> 2*latent (mean | logvar)
    Network decoder;  // latent -> hidden -> D, sigmoid output
    Index latent = 0;
    std::vector<LossBreakdown> history;  // one entry per epoch

    // Encoder means mu(x) for a batch of flattened images.
    MatrixX encode_mean(const Eigen::Ref<const MatrixX>& x);
};

VaeModel vae_train(const Eigen::Ref<const MatrixX>& x, const VaeConfig& config);

EmbeddingTable vae_embed(VaeModel& model, const Eigen::Ref<const MatrixX>& x,
                         std::vector<Index> indices = {});

}  // namespace graphreg
