#include "graphreg/clustering.hpp"

#include "graphreg/io.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace graphreg {

namespace {

MatrixX normalized_rows(const Eigen::Ref<const MatrixX>& vectors) {
    MatrixX out(vectors.rows(), vectors.cols());
    for (Index i = 0; i < vectors.rows(); ++i) {
        const Scalar norm = vectors.row(i).norm();
        if (norm == 0.0) throw Error(cat("zero-norm embedding vector at index ", i));
        out.row(i) = vectors.row(i) / norm;
    }
    return out;
}

// normalized mean of the member rows; falls back to the first member when the
// mean cancels out
Eigen::RowVectorXd centroid_of(const MatrixX& unit, const std::vector<Index>& members) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(unit.cols());
    for (Index m : members) mean += unit.row(m);
    mean /= static_cast<Scalar>(members.size());
    const Scalar norm = mean.norm();
    if (norm < 1e-12) return unit.row(members.front());
    return mean / norm;
}

}  // namespace

void ClusterAssignment::validate() const {
    if (k <= 0) throw Error("cluster count must be positive");
    std::vector<bool> seen(static_cast<std::size_t>(k), false);
    for (Index l : labels) {
        if (l < 0 || l >= k) throw Error(cat("cluster id ", l, " out of range [0,", k, ")"));
        seen[static_cast<std::size_t>(l)] = true;
    }
    for (Index c = 0; c < k; ++c)
        if (!seen[static_cast<std::size_t>(c)]) throw Error(cat("cluster ", c, " is empty"));
    if (centroids.rows() != k) throw Error("centroid count does not match k");
    for (Index c = 0; c < k; ++c)
        if (std::abs(centroids.row(c).norm() - 1.0) > 1e-9)
            throw Error(cat("centroid ", c, " is not unit-norm"));
}

std::string ClusterAssignment::to_csv(const std::vector<Index>& indices) const {
    std::string out = "index,cluster\n";
    for (std::size_t r = 0; r < labels.size(); ++r) {
        const Index idx = indices.empty() ? static_cast<Index>(r) : indices.at(r);
        out += std::to_string(idx) + "," + std::to_string(labels[r]) + "\n";
    }
    return out;
}

ClusterAssignment kmeans_cosine(const Eigen::Ref<const MatrixX>& vectors, Index k,
                                std::uint64_t seed, Index max_iters) {
    const Index n = vectors.rows();
    if (k < 1) throw Error("k must be at least 1");
    if (n < k) throw Error(cat("cannot form ", k, " clusters from ", n, " points"));
    const MatrixX unit = normalized_rows(vectors);

    // k distinct points as initial centroids
    Rng rng = substream(seed, "kmeans");
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    MatrixX centroids(k, unit.cols());
    for (Index c = 0; c < k; ++c) centroids.row(c) = unit.row(order[static_cast<std::size_t>(c)]);

    ClusterAssignment out;
    out.k = k;
    out.labels.assign(static_cast<std::size_t>(n), 0);

    for (Index iter = 0; iter < max_iters; ++iter) {
        // assignment step: maximize cosine, ties to the lowest cluster id
        MatrixX sims = unit * centroids.transpose();  // n x k
        bool changed = iter == 0;
        for (Index i = 0; i < n; ++i) {
            Index best = 0;
            for (Index c = 1; c < k; ++c)
                if (sims(i, c) > sims(i, best)) best = c;
            if (out.labels[static_cast<std::size_t>(i)] != best) {
                out.labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }

        // reseed empty clusters from the worst-assigned point
        for (Index c = 0; c < k; ++c) {
            bool empty = std::find(out.labels.begin(), out.labels.end(), c) == out.labels.end();
            if (!empty) continue;
            Index worst = 0;
            Scalar worst_sim = std::numeric_limits<Scalar>::max();
            for (Index i = 0; i < n; ++i) {
                const Scalar s = sims(i, out.labels[static_cast<std::size_t>(i)]);
                if (s < worst_sim) {
                    worst_sim = s;
                    worst = i;
                }
            }
            out.labels[static_cast<std::size_t>(worst)] = c;
            changed = true;
        }

        // update step
        std::vector<std::vector<Index>> members(static_cast<std::size_t>(k));
        for (Index i = 0; i < n; ++i)
            members[static_cast<std::size_t>(out.labels[static_cast<std::size_t>(i)])].push_back(i);
        for (Index c = 0; c < k; ++c)
            centroids.row(c) = centroid_of(unit, members[static_cast<std::size_t>(c)]);

        Scalar objective = 0;
        for (Index i = 0; i < n; ++i)
            objective += unit.row(i).dot(centroids.row(out.labels[static_cast<std::size_t>(i)]));
        out.objective_history.push_back(objective);

        if (!changed) break;
    }

    out.centroids = std::move(centroids);
    out.validate();
    return out;
}

ClusterAssignment hierarchical_cosine(const Eigen::Ref<const MatrixX>& vectors, Index k) {
    const Index n = vectors.rows();
    if (k < 1) throw Error("k must be at least 1");
    if (n < k) throw Error(cat("cannot form ", k, " clusters from ", n, " points"));
    const MatrixX unit = normalized_rows(vectors);

    // active clusters as member lists; average linkage via the pairwise mean
    // of 1 - cosine, updated with the Lance-Williams rule
    std::vector<std::vector<Index>> clusters;
    for (Index i = 0; i < n; ++i) clusters.push_back({i});
    MatrixX dist(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) dist(i, j) = 1.0 - unit.row(i).dot(unit.row(j));
    std::vector<bool> active(static_cast<std::size_t>(n), true);
    std::vector<Index> sizes(static_cast<std::size_t>(n), 1);
    Index remaining = n;

    while (remaining > k) {
        Index bi = -1, bj = -1;
        Scalar best = std::numeric_limits<Scalar>::max();
        for (Index i = 0; i < n; ++i) {
            if (!active[static_cast<std::size_t>(i)]) continue;
            for (Index j = i + 1; j < n; ++j) {
                if (!active[static_cast<std::size_t>(j)]) continue;
                if (dist(i, j) < best) {  // strict <, so ties keep the smallest (i,j)
                    best = dist(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        // merge bj into bi (bi < bj keeps ids anchored at the smallest member)
        for (Index m = 0; m < n; ++m) {
            if (!active[static_cast<std::size_t>(m)] || m == bi || m == bj) continue;
            dist(bi, m) = dist(m, bi) =
                (static_cast<Scalar>(sizes[static_cast<std::size_t>(bi)]) * dist(bi, m) +
                 static_cast<Scalar>(sizes[static_cast<std::size_t>(bj)]) * dist(bj, m)) /
                static_cast<Scalar>(sizes[static_cast<std::size_t>(bi)] + sizes[static_cast<std::size_t>(bj)]);
        }
        sizes[static_cast<std::size_t>(bi)] += sizes[static_cast<std::size_t>(bj)];
        auto& dst = clusters[static_cast<std::size_t>(bi)];
        auto& src = clusters[static_cast<std::size_t>(bj)];
        dst.insert(dst.end(), src.begin(), src.end());
        src.clear();
        active[static_cast<std::size_t>(bj)] = false;
        --remaining;
    }

    // label clusters in order of their smallest member index
    std::vector<Index> roots;
    for (Index i = 0; i < n; ++i)
        if (active[static_cast<std::size_t>(i)]) roots.push_back(i);
    std::sort(roots.begin(), roots.end());

    ClusterAssignment out;
    out.k = k;
    out.labels.assign(static_cast<std::size_t>(n), 0);
    out.centroids.resize(k, unit.cols());
    for (Index c = 0; c < static_cast<Index>(roots.size()); ++c) {
        auto& members = clusters[static_cast<std::size_t>(roots[static_cast<std::size_t>(c)])];
        std::sort(members.begin(), members.end());
        for (Index m : members) out.labels[static_cast<std::size_t>(m)] = c;
        out.centroids.row(c) = centroid_of(unit, members);
    }
    out.validate();
    return out;
}

ClusterAssignment kmeans_cosine(const EmbeddingTable& emb, Index k, std::uint64_t seed,
                                Index max_iters) {
    return kmeans_cosine(emb.vectors, k, seed, max_iters);
}

ClusterAssignment hierarchical_cosine(const EmbeddingTable& emb, Index k) {
    return hierarchical_cosine(emb.vectors, k);
}

}  // namespace graphreg
