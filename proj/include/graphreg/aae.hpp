#pragma once

// Adversarial autoencoder: the VAE-style reparameterized encoder doubles as a
// generator whose latent codes must fool a discriminator trained to tell them
// from standard-normal prior samples. Per batch: (a) discriminator step on
// prior-vs-encoded codes, (b) encoder step with the non-saturating generator
// objective, (c) encoder+decoder reconstruction step.

#include "graphreg/embedding.hpp"
#include "graphreg/loss.hpp"
#include "graphreg/network.hpp"

namespace graphreg {

struct AaeConfig {
    Index latent = 128;
    Index hidden = 128;
    Index disc_hidden = 64;
    Index epochs = 20;
    Scalar lr = 1e-3;
    Scalar disc_lr = 1e-3;
    Index batch = 32;
    std::uint64_t seed = 0;
};

struct AaeModel {
    Network encoder;        // D -> hidden -> 2*latent (mean | logvar)
    Network decoder;        // latent -> hidden -> D, sigmoid output
    Network discriminator;  // latent -> disc_hidden -> 1 logit
    Index latent = 0;
    std::vector<LossBreakdown> history;

    MatrixX encode_mean(const Eigen::Ref<const MatrixX>& x);
    // discriminator probability D(z) in (0,1) per latent row
    VectorX discriminate(const Eigen::Ref<const MatrixX>& z);
};

AaeModel aae_train(const Eigen::Ref<const MatrixX>& x, const AaeConfig& config);

EmbeddingTable aae_embed(AaeModel& model, const Eigen::Ref<const MatrixX>& x,
                         std::vector<Index> indices = {});

}  // namespace graphreg
