#include "graphreg/tsne.hpp"

#include <cmath>
#include <numeric>

namespace graphreg {

Scalar kl_divergence(const Eigen::Ref<const MatrixX>& P, const Eigen::Ref<const MatrixX>& Q) {
    if (P.rows() != Q.rows() || P.cols() != Q.cols())
        throw Error(cat("kl_divergence shape mismatch: ", P.rows(), "x", P.cols(), " vs ", Q.rows(),
                        "x", Q.cols()));
    Scalar kl = 0;
    for (Index i = 0; i < P.size(); ++i) {
        const Scalar p = P.data()[i], q = Q.data()[i];
        if (p < 0 || q < 0) throw Error("kl_divergence: negative affinity");
        if (p == 0) continue;
        if (q == 0) throw Error(cat("kl_divergence: q is zero where p=", p, " at flat index ", i));
        kl += p * std::log(p / q);
    }
    return kl;
}

namespace {

MatrixX squared_distances(const Eigen::Ref<const MatrixX>& x) {
    const VectorX sq = x.rowwise().squaredNorm();
    MatrixX d = (-2.0 * x * x.transpose()).colwise() + sq;
    d.rowwise() += sq.transpose();
    return d.cwiseMax(0.0);
}

}  // namespace

MatrixX tsne_affinities(const Eigen::Ref<const MatrixX>& vectors, Scalar perplexity) {
    const Index n = vectors.rows();
    if (static_cast<Scalar>(n) < 3.0 * perplexity)
        throw Error(cat("perplexity ", perplexity, " infeasible for ", n,
                        " points (need at least 3x perplexity)"));
    const MatrixX d2 = squared_distances(vectors);
    const Scalar target_entropy = std::log(perplexity);

    MatrixX cond = MatrixX::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        // binary search the precision beta_i = 1/(2 sigma_i^2)
        Scalar beta = 1.0, beta_lo = 0.0, beta_hi = std::numeric_limits<Scalar>::infinity();
        VectorX row(n);
        for (int step = 0; step < 64; ++step) {
            Scalar sum = 0, dot = 0;
            for (Index j = 0; j < n; ++j) {
                row[j] = j == i ? 0.0 : std::exp(-beta * d2(i, j));
                sum += row[j];
            }
            if (sum <= 0) {  // all neighbours underflowed; soften
                beta_hi = beta;
                beta = (beta_lo + beta) / 2.0;
                continue;
            }
            for (Index j = 0; j < n; ++j) dot += row[j] * d2(i, j);
            const Scalar entropy = std::log(sum) + beta * dot / sum;
            const Scalar diff = entropy - target_entropy;
            if (std::abs(diff) < 1e-7) break;
            if (diff > 0) {
                beta_lo = beta;
                beta = std::isinf(beta_hi) ? beta * 2.0 : (beta + beta_hi) / 2.0;
            } else {
                beta_hi = beta;
                beta = beta_lo == 0.0 ? beta / 2.0 : (beta + beta_lo) / 2.0;
            }
        }
        const Scalar sum = row.sum();
        if (sum > 0) cond.row(i) = row.transpose() / sum;
        else cond.row(i).setZero();
    }

    // symmetrized joint affinities
    MatrixX joint = (cond + cond.transpose()) / (2.0 * static_cast<Scalar>(n));
    return joint;
}

TsneResult tsne_run(const Eigen::Ref<const MatrixX>& vectors, const TsneConfig& config,
                    std::vector<Index> indices) {
    const Index n = vectors.rows();
    if (config.dim < 1) throw Error("tsne dim must be at least 1");
    if (indices.empty()) {
        indices.resize(static_cast<std::size_t>(n));
        std::iota(indices.begin(), indices.end(), 0);
    }
    if (static_cast<Index>(indices.size()) != n)
        throw Error(cat("tsne: ", indices.size(), " indices for ", n, " rows"));

    const MatrixX P = tsne_affinities(vectors, config.perplexity);

    Rng rng = substream(config.seed, "tsne");
    std::normal_distribution<Scalar> gauss(0.0, 1e-4);
    MatrixX y(n, config.dim);
    for (Index i = 0; i < y.size(); ++i) y.data()[i] = gauss(rng);

    auto q_of = [&](const MatrixX& map, MatrixX& w_out) {
        const MatrixX d2 = squared_distances(map);
        w_out = (1.0 + d2.array()).inverse().matrix();
        w_out.diagonal().setZero();
        const Scalar total = w_out.sum();
        return MatrixX((w_out / std::max(total, 1e-300)).cwiseMax(1e-300));
    };

    MatrixX w(n, n);
    TsneResult result;
    result.kl_initial = kl_divergence(P, q_of(y, w));

    const Index exaggerate_until = config.iters / 4;
    MatrixX velocity = MatrixX::Zero(n, config.dim);
    MatrixX gains = MatrixX::Ones(n, config.dim);
    for (Index iter = 0; iter < config.iters; ++iter) {
        const Scalar exaggeration = iter < exaggerate_until ? 4.0 : 1.0;
        const MatrixX q = q_of(y, w);
        // dC/dy_i = 4 sum_j (p - q) w (y_i - y_j)
        const MatrixX coeff = ((exaggeration * P - q).array() * w.array()).matrix();
        MatrixX grad = MatrixX::Zero(n, config.dim);
        const VectorX row_sums = coeff.rowwise().sum();
        grad = 4.0 * (row_sums.asDiagonal() * y - coeff * y);

        for (Index i = 0; i < grad.size(); ++i) {
            const bool same_sign = (grad.data()[i] > 0) == (velocity.data()[i] > 0);
            gains.data()[i] = std::max(0.01, same_sign ? gains.data()[i] * 0.8 : gains.data()[i] + 0.2);
        }
        const Scalar momentum = iter < 250 ? 0.5 : 0.8;
        velocity = momentum * velocity - config.learning_rate * gains.cwiseProduct(grad);
        y += velocity;
    }

    result.kl_final = kl_divergence(P, q_of(y, w));
    if (result.kl_final > result.kl_initial + 1e-9)
        throw Error(cat("tsne did not improve: KL went from ", result.kl_initial, " to ",
                        result.kl_final));

    result.table.method = "tsne";
    result.table.indices = std::move(indices);
    result.table.vectors = std::move(y);
    result.table.validate();
    return result;
}

EmbeddingTable tsne_embed(const Eigen::Ref<const MatrixX>& vectors, const TsneConfig& config,
                          std::vector<Index> indices) {
    return tsne_run(vectors, config, std::move(indices)).table;
}

}  // namespace graphreg
