#pragma once

// Cosine-similarity clustering of per-class embeddings: spherical k-means and
// average-linkage agglomerative clustering on 1 - cosine. Callers run these
// per class; the graph builder enforces that.

#include "graphreg/embedding.hpp"

namespace graphreg {

struct ClusterAssignment {
    Index k = 0;
    std::vector<Index> labels;  // row -> cluster id
    MatrixX centroids;          // k x dim, unit-norm rows
    std::vector<Scalar> objective_history;  // spherical k-means only

    void validate() const;
    std::string to_csv(const std::vector<Index>& indices = {}) const;
};

// Spherical k-means: rows are L2-normalized, assignment maximizes cosine to
// the centroid (ties to the lowest cluster id), centroids are normalized
// means. Empty clusters are reseeded from the worst-assigned point.
ClusterAssignment kmeans_cosine(const Eigen::Ref<const MatrixX>& vectors, Index k,
                                std::uint64_t seed, Index max_iters = 100);

// Agglomerative with average linkage on 1 - cosine, merging until k clusters
// remain; ties break on the smallest member indices.
ClusterAssignment hierarchical_cosine(const Eigen::Ref<const MatrixX>& vectors, Index k);

ClusterAssignment kmeans_cosine(const EmbeddingTable& emb, Index k, std::uint64_t seed,
                                Index max_iters = 100);
ClusterAssignment hierarchical_cosine(const EmbeddingTable& emb, Index k);

}  // namespace graphreg
