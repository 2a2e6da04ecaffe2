#include "graphreg/embedding.hpp"

#include "graphreg/io.hpp"

#include <unordered_set>

namespace graphreg {

void EmbeddingTable::validate() const {
    if (static_cast<Index>(indices.size()) != vectors.rows())
        throw Error(cat("embedding table has ", indices.size(), " indices for ", vectors.rows(), " rows"));
    if (!vectors.allFinite()) throw Error("embedding table contains non-finite values");
    std::unordered_set<Index> seen;
    for (Index i : indices)
        if (!seen.insert(i).second) throw Error(cat("duplicate image index ", i, " in embedding table"));
}

Index EmbeddingTable::row_of(Index image_index) const {
    for (std::size_t r = 0; r < indices.size(); ++r)
        if (indices[r] == image_index) return static_cast<Index>(r);
    return -1;
}

std::string EmbeddingTable::to_csv() const {
    std::string out = "index";
    for (Index d = 0; d < dim(); ++d) out += ",dim" + std::to_string(d);
    out += "\n";
    for (Index r = 0; r < size(); ++r) {
        out += std::to_string(indices[static_cast<std::size_t>(r)]);
        for (Index d = 0; d < dim(); ++d) out += "," + fmt_double(vectors(r, d));
        out += "\n";
    }
    return out;
}

static constexpr char kEmbMagic[8] = {'G', 'R', 'E', 'G', 'E', 'M', 'B', '1'};
static constexpr std::uint32_t kEmbVersion = 1;

void EmbeddingTable::save(const std::string& path) const {
    validate();
    BinaryWriter w(path, kEmbMagic, kEmbVersion);
    w.str(method);
    w.i64(size());
    w.i64(dim());
    for (Index i : indices) w.i64(i);
    for (Index r = 0; r < size(); ++r)
        for (Index d = 0; d < dim(); ++d) w.f64(vectors(r, d));
    w.finish();
}

EmbeddingTable EmbeddingTable::load(const std::string& path) {
    BinaryReader r(path, kEmbMagic, kEmbVersion);
    EmbeddingTable t;
    t.method = r.str();
    const Index n = r.i64(), d = r.i64();
    t.indices.resize(static_cast<std::size_t>(n));
    for (Index& i : t.indices) i = r.i64();
    t.vectors.resize(n, d);
    for (Index row = 0; row < n; ++row)
        for (Index col = 0; col < d; ++col) t.vectors(row, col) = r.f64();
    r.finish();
    t.validate();
    return t;
}

}  // namespace graphreg
