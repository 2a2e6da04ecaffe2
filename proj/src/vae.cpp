#include "graphreg/vae.hpp"

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

}  // namespace

MatrixX VaeModel::encode_mean(const Eigen::Ref<const MatrixX>& x) {
    Tape tape;
    Tensor batch({x.rows(), x.cols()});
    batch.mat() = x;
    auto fwd = encoder.forward(tape, batch);
    NodeId mu = tape.slice_cols(fwd.logits, 0, latent);
    return tape.value(mu).mat();
}

VaeModel vae_train(const Eigen::Ref<const MatrixX>& x, const VaeConfig& config) {
    const Index n = x.rows(), d = x.cols();
    if (n == 0) throw Error("vae_train: empty input");
    if (config.latent <= 0 || config.hidden <= 0) throw Error("vae latent/hidden must be positive");

    VaeModel model;
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
    model.encoder.init_params(substream(config.seed, "vae-encoder")());
    model.decoder.init_params(substream(config.seed, "vae-decoder")());

    std::vector<Param*> params = model.encoder.params();
    for (Param* p : model.decoder.params()) params.push_back(p);
    OptimizerState opt(OptimizerKind::adam, config.lr);

    Rng rng = substream(config.seed, "vae-train");
    std::normal_distribution<Scalar> gauss(0.0, 1.0);
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    for (Index epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        LossBreakdown epoch_loss;
        Index batches = 0;
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(config.batch)) {
            const std::size_t end = std::min(order.size(), at + static_cast<std::size_t>(config.batch));
            Tensor batch = rows_to_tensor(x, order, at, end);
            const Index b = batch.dim(0);

            Tape tape;
            auto enc = model.encoder.forward(tape, batch);
            NodeId mu = tape.slice_cols(enc.logits, 0, config.latent);
            NodeId logvar = tape.slice_cols(enc.logits, config.latent, config.latent);
            Tensor eps({b, config.latent});
            for (Index i = 0; i < eps.numel(); ++i) eps.data[i] = gauss(rng);
            NodeId z = tape.reparameterize(mu, logvar, eps);
            auto dec = model.decoder.forward_node(tape, z);
            NodeId recon = tape.squared_error(dec.logits, batch);
            NodeId kl = tape.gaussian_kl(mu, logvar);
            NodeId total = tape.add(recon, kl);

            const Scalar recon_v = tape.value(recon).data[0];
            const Scalar kl_v = tape.value(kl).data[0];
            if (!std::isfinite(recon_v) || !std::isfinite(kl_v))
                throw Error(cat("vae_train: non-finite loss at epoch ", epoch, ", batch ", batches,
                                " (reconstruction=", recon_v, ", kl=", kl_v, ")"));
            epoch_loss.reconstruction += recon_v;
            epoch_loss.kl += kl_v;
            ++batches;

            tape.backward(total);
            opt.apply(params);
        }
        epoch_loss.reconstruction /= static_cast<Scalar>(batches);
        epoch_loss.kl /= static_cast<Scalar>(batches);
        epoch_loss.finalize();
        model.history.push_back(epoch_loss);
    }
    return model;
}

EmbeddingTable vae_embed(VaeModel& model, const Eigen::Ref<const MatrixX>& x,
                         std::vector<Index> indices) {
    if (indices.empty()) {
        indices.resize(static_cast<std::size_t>(x.rows()));
        std::iota(indices.begin(), indices.end(), 0);
    }
    if (static_cast<Index>(indices.size()) != x.rows())
        throw Error(cat("vae_embed: ", indices.size(), " indices for ", x.rows(), " rows"));
    EmbeddingTable table;
    table.method = "vae";
    table.indices = std::move(indices);
    table.vectors = model.encode_mean(x);
    table.validate();
    return table;
}

}  // namespace graphreg
