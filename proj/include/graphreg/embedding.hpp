#pragma once

#include "graphreg/common.hpp"

namespace graphreg {

// Per-image embedding vectors produced by one embedder, keyed by image index.
struct EmbeddingTable {
    std::string method;          // "tsne", "vae", "aae"
    std::vector<Index> indices;  // image index per row
    MatrixX vectors;             // row r = embedding of image indices[r]

    Index dim() const { return vectors.cols(); }
    Index size() const { return vectors.rows(); }
    void validate() const;

    // row position of an image index, -1 when absent
    Index row_of(Index image_index) const;

    std::string to_csv() const;
    void save(const std::string& path) const;
    static EmbeddingTable load(const std::string& path);
};

}  // namespace graphreg
