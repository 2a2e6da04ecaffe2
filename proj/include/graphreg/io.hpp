#pragma once

// Versioned binary container primitives shared by the network, embedding and
// graph file formats, plus the 8-bit grayscale raster (binary PGM, P5).
// Layout of every container: magic(8) | version(u32) | payload | fnv64(payload).

#include "graphreg/common.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace graphreg {

class BinaryWriter {
public:
    BinaryWriter(const std::string& path, const char magic[8], std::uint32_t version);
    ~BinaryWriter();

    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void i64(std::int64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void str(const std::string& s);
    void vec(const Eigen::Ref<const VectorX>& v);
    void bytes(const void* p, std::size_t n) { raw(p, n); }

    // Appends the payload checksum and closes; call exactly once.
    void finish();

private:
    void raw(const void* p, std::size_t n);

    std::ofstream out_;
    std::uint64_t hash_ = 0xcbf29ce484222325ull;
    bool finished_ = false;
    std::string path_;
};

class BinaryReader {
public:
    BinaryReader(const std::string& path, const char magic[8], std::uint32_t expect_version);

    std::uint32_t u32();
    std::uint64_t u64();
    std::int64_t i64();
    double f64();
    std::string str();
    VectorX vec();

    // Verifies the trailing checksum against everything read so far.
    void finish();

    std::uint32_t version() const { return version_; }

private:
    void raw(void* p, std::size_t n);

    std::vector<char> buf_;
    std::size_t pos_ = 0;
    std::uint64_t hash_ = 0xcbf29ce484222325ull;
    std::uint32_t version_ = 0;
    std::string path_;
};

// Grayscale raster, pixels in [0,1] <-> 8-bit binary PGM (P5, maxval 255).
void write_pgm(const std::string& path, const Eigen::Ref<const MatrixX>& img);
MatrixX read_pgm(const std::string& path);

void ensure_dir(const std::string& dir);

// Serializes a double for CSV/JSON output: shortest round-trip form so that
// identical runs produce byte-identical files.
std::string fmt_double(double v);

}  // namespace graphreg
