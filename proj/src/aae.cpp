#include "graphreg/aae.hpp"

#include "graphreg/optimizer.hpp"

#include <numeric>

namespace graphreg {

namespace {

Tensor rows_to_tensor(const Eigen::Ref<const MatrixX>& x, const std::vector<Index>& rows,
                      std::size_t begin, std::size_t end) {
    Tensor t({static_cast<Index>(end - begin), x.cols()});
    auto m = t.mat();
    for (std::size_t i = begin; i < end; ++i) m.row(static_cast<Index>(i - begin)) = x.row(rows[i]);
    return t;
}

void zero_all(const std::vector<Param*>& params) {
    for (Param* p : params) p->zero_grad();
}

}  // namespace

MatrixX AaeModel::encode_mean(const Eigen::Ref<const MatrixX>& x) {
    Tape tape;
    Tensor batch({x.rows(), x.cols()});
    batch.mat() = x;
    auto fwd = encoder.forward(tape, batch);
    NodeId mu = tape.slice_cols(fwd.logits, 0, latent);
    return tape.value(mu).mat();
}

VectorX AaeModel::discriminate(const Eigen::Ref<const MatrixX>& z) {
    Tape tape;
    Tensor batch({z.rows(), z.cols()});
    batch.mat() = z;
    auto fwd = discriminator.forward(tape, batch);
    NodeId probs = tape.sigmoid(fwd.logits);
    return tape.value(probs).data;
}

AaeModel aae_train(const Eigen::Ref<const MatrixX>& x, const AaeConfig& config) {
    const Index n = x.rows(), d = x.cols();
    if (n == 0) throw Error("aae_train: empty input");

    AaeModel model;
    model.latent = config.latent;
    model.encoder = Network({d});
    model.encoder.add(LayerSpec::dense(config.hidden))
        .add(LayerSpec::relu())
        .add(LayerSpec::dense(2 * config.latent));
    model.decoder = Network({config.latent});
    model.decoder.add(LayerSpec::dense(config.hidden))
        .add(LayerSpec::relu())
        .add(LayerSpec::dense(d))
        .add(LayerSpec::sigmoid());
    model.discriminator = Network({config.latent});
    model.discriminator.add(LayerSpec::dense(config.disc_hidden))
        .add(LayerSpec::relu())
        .add(LayerSpec::dense(1));
    model.encoder.init_params(substream(config.seed, "aae-encoder")());
    model.decoder.init_params(substream(config.seed, "aae-decoder")());
    model.discriminator.init_params(substream(config.seed, "aae-disc")());

    std::vector<Param*> enc_params = model.encoder.params();
    std::vector<Param*> disc_params = model.discriminator.params();
    std::vector<Param*> recon_params = model.encoder.params();
    for (Param* p : model.decoder.params()) recon_params.push_back(p);
    std::vector<Param*> all_params = recon_params;
    for (Param* p : disc_params) all_params.push_back(p);

    OptimizerState opt_disc(OptimizerKind::adam, config.disc_lr);
    OptimizerState opt_gen(OptimizerKind::adam, config.lr);
    OptimizerState opt_recon(OptimizerKind::adam, config.lr);

    Rng rng = substream(config.seed, "aae-train");
    std::normal_distribution<Scalar> gauss(0.0, 1.0);
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    auto encode_z = [&](Tape& tape, const Tensor& batch) {
        auto enc = model.encoder.forward(tape, batch);
        NodeId mu = tape.slice_cols(enc.logits, 0, config.latent);
        NodeId logvar = tape.slice_cols(enc.logits, config.latent, config.latent);
        Tensor eps({batch.dim(0), config.latent});
        for (Index i = 0; i < eps.numel(); ++i) eps.data[i] = gauss(rng);
        return tape.reparameterize(mu, logvar, eps);
    };

    for (Index epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        LossBreakdown epoch_loss;
        Index batches = 0;
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(config.batch)) {
            const std::size_t end = std::min(order.size(), at + static_cast<std::size_t>(config.batch));
            Tensor batch = rows_to_tensor(x, order, at, end);
            const Index b = batch.dim(0);

            // (a) discriminator: prior codes toward 1, detached encoder codes toward 0
            Scalar d_loss_v;
            {
                Tape scratch;
                Tensor z_fake = scratch.value(encode_z(scratch, batch));
                Tensor z_prior({b, config.latent});
                for (Index i = 0; i < z_prior.numel(); ++i) z_prior.data[i] = gauss(rng);

                Tape tape;
                auto real = model.discriminator.forward(tape, z_prior);
                auto fake = model.discriminator.forward(tape, z_fake);
                NodeId d_loss = tape.scale(
                    tape.add(tape.bce_toward_one(real.logits), tape.bce_toward_zero(fake.logits)), 0.5);
                d_loss_v = tape.value(d_loss).data[0];
                tape.backward(d_loss);
                opt_disc.apply(disc_params);
                zero_all(all_params);
            }

            // (b) encoder as generator: make the discriminator read encoded codes as prior
            Scalar g_loss_v;
            {
                Tape tape;
                NodeId z = encode_z(tape, batch);
                auto fake = model.discriminator.forward_node(tape, z);
                NodeId g_loss = tape.bce_toward_one(fake.logits);
                g_loss_v = tape.value(g_loss).data[0];
                tape.backward(g_loss);
                opt_gen.apply(enc_params);
                zero_all(all_params);
            }

            // (c) reconstruction
            Scalar recon_v;
            {
                Tape tape;
                NodeId z = encode_z(tape, batch);
                auto dec = model.decoder.forward_node(tape, z);
                NodeId recon = tape.squared_error(dec.logits, batch);
                recon_v = tape.value(recon).data[0];
                tape.backward(recon);
                opt_recon.apply(recon_params);
                zero_all(all_params);
            }

            if (!std::isfinite(d_loss_v) || !std::isfinite(g_loss_v) || !std::isfinite(recon_v))
                throw Error(cat("aae_train: non-finite loss at epoch ", epoch, ", batch ", batches,
                                " (d=", d_loss_v, ", g=", g_loss_v, ", recon=", recon_v, ")"));
            epoch_loss.adversarial_d += d_loss_v;
            epoch_loss.adversarial_g += g_loss_v;
            epoch_loss.reconstruction += recon_v;
            ++batches;
        }
        epoch_loss.adversarial_d /= static_cast<Scalar>(batches);
        epoch_loss.adversarial_g /= static_cast<Scalar>(batches);
        epoch_loss.reconstruction /= static_cast<Scalar>(batches);
        epoch_loss.finalize();
        model.history.push_back(epoch_loss);
    }
    return model;
}

EmbeddingTable aae_embed(AaeModel& model, const Eigen::Ref<const MatrixX>& x,
                         std::vector<Index> indices) {
    if (indices.empty()) {
        indices.resize(static_cast<std::size_t>(x.rows()));
        std::iota(indices.begin(), indices.end(), 0);
    }
    if (static_cast<Index>(indices.size()) != x.rows())
        throw Error(cat("aae_embed: ", indices.size(), " indices for ", x.rows(), " rows"));
    EmbeddingTable table;
    table.method = "aae";
    table.indices = std::move(indices);
    table.vectors = model.encode_mean(x);
    table.validate();
    return table;
}

}  // namespace graphreg
