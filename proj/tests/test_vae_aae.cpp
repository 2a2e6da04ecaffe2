#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "graphreg/aae.hpp"
#include "graphreg/dataset.hpp"
#include "graphreg/gradcheck.hpp"
#include "graphreg/vae.hpp"

using namespace graphreg;

namespace {

MatrixX synthetic_rows(Index per_class, Index side, std::uint64_t seed) {
    SyntheticConfig cfg;
    cfg.counts = {per_class, per_class, per_class, per_class};
    cfg.side = side;
    cfg.seed = seed;
    return generate_synthetic(cfg).flattened();
}

}  // namespace

TEST_CASE("closed-form KL is zero when the posterior matches the prior") {
    Tape tape;
    NodeId mu = tape.constant(Tensor({3, 4}));
    NodeId logvar = tape.constant(Tensor({3, 4}));
    CHECK(tape.value(tape.gaussian_kl(mu, logvar)).data[0] == 0.0);
}

TEST_CASE("reconstruction term is zero on exact reproduction") {
    Tape tape;
    Tensor x({2, 5});
    x.data.setRandom();
    NodeId node = tape.constant(x);
    CHECK(tape.value(tape.squared_error(node, x)).data[0] == 0.0);
}

TEST_CASE("KL component is strictly positive away from the prior") {
    Tape tape;
    Tensor mu({1, 2});
    mu.data << 1.0, -2.0;
    Tensor lv({1, 2});
    lv.data << 0.5, -0.3;
    NodeId kl = tape.gaussian_kl(tape.constant(mu), tape.constant(lv));
    // closed form: -0.5 sum(1 + lv - mu^2 - e^lv)
    const Scalar expect = -0.5 * ((1 + 0.5 - 1.0 - std::exp(0.5)) + (1 - 0.3 - 4.0 - std::exp(-0.3)));
    CHECK(tape.value(kl).data[0] == doctest::Approx(expect).epsilon(1e-12));
    CHECK(tape.value(kl).data[0] > 0.0);
}

TEST_CASE("zeroed encoder gives mu=0, logvar=0 and zero KL") {
    MatrixX x = synthetic_rows(3, 16, 1);
    VaeConfig cfg;
    cfg.latent = 4;
    cfg.hidden = 8;
    cfg.epochs = 0;
    VaeModel model = vae_train(x, cfg);
    for (Param* p : model.encoder.params()) p->value.data.setZero();

    Tape tape;
    Tensor batch({x.rows(), x.cols()});
    batch.mat() = x;
    auto enc = model.encoder.forward(tape, batch);
    NodeId mu = tape.slice_cols(enc.logits, 0, 4);
    NodeId logvar = tape.slice_cols(enc.logits, 4, 4);
    CHECK(tape.value(mu).data.cwiseAbs().maxCoeff() == 0.0);
    CHECK(tape.value(tape.gaussian_kl(mu, logvar)).data[0] == 0.0);
}

TEST_CASE("reparameterization gradients match finite differences with frozen noise") {
    Rng rng(7);
    std::normal_distribution<Scalar> gauss(0.0, 1.0);
    Param mu("mu", Tensor({2, 3}));
    Param logvar("logvar", Tensor({2, 3}));
    Tensor eps({2, 3}), target({2, 3});
    for (Index i = 0; i < 6; ++i) {
        mu.value.data[i] = gauss(rng) * 0.5;
        logvar.value.data[i] = gauss(rng) * 0.3;
        eps.data[i] = gauss(rng);
        target.data[i] = gauss(rng);
    }
    auto loss_fn = [&](bool acc) {
        Tape tape;
        NodeId z = tape.reparameterize(tape.param(mu), tape.param(logvar), eps);
        NodeId loss = tape.add(tape.squared_error(z, target), tape.gaussian_kl(tape.param(mu), tape.param(logvar)));
        Scalar v = tape.value(loss).data[0];
        if (acc) tape.backward(loss);
        return v;
    };
    auto report = grad_check_fn({&mu, &logvar}, loss_fn, 1e-4);
    CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("vae training reduces the total loss and keeps KL non-negative") {
    MatrixX x = synthetic_rows(20, 16, 3);
    VaeConfig cfg;
    cfg.latent = 8;
    cfg.hidden = 32;
    cfg.epochs = 12;
    cfg.seed = 11;
    VaeModel model = vae_train(x, cfg);
    REQUIRE(model.history.size() == 12);
    for (const LossBreakdown& lb : model.history) {
        lb.validate();
        CHECK(lb.kl >= 0.0);
        CHECK(lb.total == lb.reconstruction + lb.kl);
    }
    CHECK(model.history.back().total < model.history.front().total);

    EmbeddingTable emb = vae_embed(model, x);
    CHECK(emb.method == "vae");
    CHECK(emb.dim() == 8);
    CHECK(emb.size() == x.rows());
    emb.validate();
}

TEST_CASE("vae gradient check through encoder, reparam and decoder") {
    MatrixX x = synthetic_rows(1, 8, 5).topRows(2);
    VaeConfig cfg;
    cfg.latent = 3;
    cfg.hidden = 6;
    cfg.epochs = 0;
    cfg.seed = 2;
    VaeModel model = vae_train(x, cfg);

    Tensor batch({x.rows(), x.cols()});
    batch.mat() = x;
    Tensor eps({x.rows(), 3});
    Rng rng(13);
    std::normal_distribution<Scalar> gauss(0.0, 1.0);
    for (Index i = 0; i < eps.numel(); ++i) eps.data[i] = gauss(rng);

    std::vector<Param*> params = model.encoder.params();
    for (Param* p : model.decoder.params()) params.push_back(p);
    auto loss_fn = [&](bool acc) {
        Tape tape;
        auto enc = model.encoder.forward(tape, batch);
        NodeId mu = tape.slice_cols(enc.logits, 0, 3);
        NodeId logvar = tape.slice_cols(enc.logits, 3, 3);
        NodeId z = tape.reparameterize(mu, logvar, eps);
        auto dec = model.decoder.forward_node(tape, z);
        NodeId loss = tape.add(tape.squared_error(dec.logits, batch), tape.gaussian_kl(mu, logvar));
        Scalar v = tape.value(loss).data[0];
        if (acc) tape.backward(loss);
        return v;
    };
    auto report = grad_check_fn(params, loss_fn, 1e-4);
    CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("zero-weight discriminator outputs 0.5 and ln2 adversarial terms") {
    Tape tape;
    Tensor logits({4, 1});  // all zero
    NodeId node = tape.constant(logits);
    CHECK(tape.value(tape.bce_toward_one(node)).data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(tape.value(tape.bce_toward_zero(node)).data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    MatrixX x = synthetic_rows(2, 16, 9);
    AaeConfig cfg;
    cfg.latent = 4;
    cfg.hidden = 8;
    cfg.disc_hidden = 8;
    cfg.epochs = 0;
    AaeModel model = aae_train(x, cfg);
    for (Param* p : model.discriminator.params()) p->value.data.setZero();
    VectorX probs = model.discriminate(MatrixX::Random(5, 4));
    for (Index i = 0; i < probs.size(); ++i) CHECK(probs[i] == 0.5);
}

TEST_CASE("aae training: finite losses, probabilities in (0,1), loss breakdown") {
    MatrixX x = synthetic_rows(15, 16, 23);
    AaeConfig cfg;
    cfg.latent = 6;
    cfg.hidden = 32;
    cfg.disc_hidden = 16;
    cfg.epochs = 8;
    cfg.seed = 3;
    AaeModel model = aae_train(x, cfg);
    REQUIRE(model.history.size() == 8);
    for (const LossBreakdown& lb : model.history) {
        lb.validate();
        CHECK(std::isfinite(lb.adversarial_d));
        CHECK(std::isfinite(lb.adversarial_g));
        CHECK(lb.reconstruction >= 0.0);
    }
    CHECK(model.history.back().reconstruction < model.history.front().reconstruction);

    EmbeddingTable emb = aae_embed(model, x);
    VectorX probs = model.discriminate(emb.vectors);
    for (Index i = 0; i < probs.size(); ++i) {
        CHECK(probs[i] > 0.0);
        CHECK(probs[i] < 1.0);
    }
}

TEST_CASE("aae adversarial gradients match finite differences") {
    MatrixX x = synthetic_rows(1, 8, 31).topRows(3);
    AaeConfig cfg;
    cfg.latent = 3;
    cfg.hidden = 6;
    cfg.disc_hidden = 5;
    cfg.epochs = 0;
    cfg.seed = 8;
    AaeModel model = aae_train(x, cfg);

    Tensor batch({x.rows(), x.cols()});
    batch.mat() = x;
    Rng rng(17);
    std::normal_distribution<Scalar> gauss(0.0, 1.0);
    Tensor eps({x.rows(), 3}), z_prior({x.rows(), 3});
    for (Index i = 0; i < eps.numel(); ++i) {
        eps.data[i] = gauss(rng);
        z_prior.data[i] = gauss(rng);
    }

    // discriminator loss wrt discriminator params, encoder codes frozen
    Tensor z_fake;
    {
        Tape scratch;
        auto enc = model.encoder.forward(scratch, batch);
        NodeId mu = scratch.slice_cols(enc.logits, 0, 3);
        NodeId logvar = scratch.slice_cols(enc.logits, 3, 3);
        z_fake = scratch.value(scratch.reparameterize(mu, logvar, eps));
    }
    auto d_loss_fn = [&](bool acc) {
        Tape tape;
        auto real = model.discriminator.forward(tape, z_prior);
        auto fake = model.discriminator.forward(tape, z_fake);
        NodeId loss = tape.scale(
            tape.add(tape.bce_toward_one(real.logits), tape.bce_toward_zero(fake.logits)), 0.5);
        Scalar v = tape.value(loss).data[0];
        if (acc) tape.backward(loss);
        return v;
    };
    CHECK(grad_check_fn(model.discriminator.params(), d_loss_fn, 1e-4).max_rel_err < 1e-4);

    // generator (encoder) loss through the frozen-noise reparameterization
    auto g_loss_fn = [&](bool acc) {
        Tape tape;
        auto enc = model.encoder.forward(tape, batch);
        NodeId mu = tape.slice_cols(enc.logits, 0, 3);
        NodeId logvar = tape.slice_cols(enc.logits, 3, 3);
        NodeId z = tape.reparameterize(mu, logvar, eps);
        auto fake = model.discriminator.forward_node(tape, z);
        NodeId loss = tape.bce_toward_one(fake.logits);
        Scalar v = tape.value(loss).data[0];
        if (acc) tape.backward(loss);
        return v;
    };
    CHECK(grad_check_fn(model.encoder.params(), g_loss_fn, 1e-4).max_rel_err < 1e-4);
}

TEST_CASE("aae latent moments approach the standard normal prior") {
    MatrixX x = synthetic_rows(40, 32, 41);
    AaeConfig cfg;
    cfg.latent = 16;
    cfg.hidden = 64;
    cfg.disc_hidden = 32;
    cfg.epochs = 30;
    cfg.seed = 7;
    AaeModel model = aae_train(x, cfg);
    EmbeddingTable emb = aae_embed(model, x);

    for (Index d = 0; d < emb.dim(); ++d) {
        const Scalar mean = emb.vectors.col(d).mean();
        const Scalar var = (emb.vectors.col(d).array() - mean).square().sum() /
                           static_cast<Scalar>(emb.size() - 1);
        CHECK(std::abs(mean) <= 0.5);
        CHECK(var >= 0.5);
        CHECK(var <= 2.0);
    }
}
