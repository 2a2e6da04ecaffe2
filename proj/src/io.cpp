#include "graphreg/io.hpp"

#include <cmath>
#include <cstring>

namespace graphreg {

BinaryWriter::BinaryWriter(const std::string& path, const char magic[8], std::uint32_t version)
    : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw Error("cannot open for writing: " + path);
    out_.write(magic, 8);
    out_.write(reinterpret_cast<const char*>(&version), sizeof version);
    if (!out_) throw Error("write failed: " + path);
}

BinaryWriter::~BinaryWriter() {
    if (!finished_ && out_.is_open()) {
        out_.close();
        std::remove(path_.c_str());  // never leave a truncated container behind
    }
}

void BinaryWriter::raw(const void* p, std::size_t n) {
    hash_ = fnv1a(p, n, hash_);
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) throw Error("write failed: " + path_);
}

void BinaryWriter::str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
}

void BinaryWriter::vec(const Eigen::Ref<const VectorX>& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Index i = 0; i < v.size(); ++i) f64(v[i]);
}

void BinaryWriter::finish() {
    std::uint64_t h = hash_;
    out_.write(reinterpret_cast<const char*>(&h), sizeof h);
    out_.close();
    if (!out_) throw Error("write failed: " + path_);
    finished_ = true;
}

BinaryReader::BinaryReader(const std::string& path, const char magic[8], std::uint32_t expect_version)
    : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path);
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (buf_.size() < 8 + sizeof(std::uint32_t) + sizeof(std::uint64_t))
        throw Error("truncated container: " + path);
    if (std::memcmp(buf_.data(), magic, 8) != 0)
        throw Error("bad magic in " + path + " (not a " + std::string(magic, 8) + " file)");
    std::memcpy(&version_, buf_.data() + 8, sizeof version_);
    if (version_ != expect_version)
        throw Error(cat("version mismatch in ", path, ": file v", version_, ", expected v", expect_version));
    pos_ = 8 + sizeof version_;
}

void BinaryReader::raw(void* p, std::size_t n) {
    if (pos_ + n + sizeof(std::uint64_t) > buf_.size())
        throw Error("truncated container: " + path_);
    std::memcpy(p, buf_.data() + pos_, n);
    hash_ = fnv1a(buf_.data() + pos_, n, hash_);
    pos_ += n;
}

std::uint32_t BinaryReader::u32() { std::uint32_t v; raw(&v, sizeof v); return v; }
std::uint64_t BinaryReader::u64() { std::uint64_t v; raw(&v, sizeof v); return v; }
std::int64_t BinaryReader::i64() { std::int64_t v; raw(&v, sizeof v); return v; }
double BinaryReader::f64() { double v; raw(&v, sizeof v); return v; }

std::string BinaryReader::str() {
    std::uint64_t n = u64();
    if (n > buf_.size()) throw Error("corrupt string length in " + path_);
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
}

VectorX BinaryReader::vec() {
    std::uint64_t n = u64();
    if (n > buf_.size() / sizeof(double)) throw Error("corrupt vector length in " + path_);
    VectorX v(static_cast<Index>(n));
    for (std::uint64_t i = 0; i < n; ++i) v[static_cast<Index>(i)] = f64();
    return v;
}

void BinaryReader::finish() {
    if (pos_ + sizeof(std::uint64_t) != buf_.size())
        throw Error(cat("container size mismatch in ", path_, ": ", buf_.size() - pos_, " trailing bytes"));
    std::uint64_t stored;
    std::memcpy(&stored, buf_.data() + pos_, sizeof stored);
    if (stored != hash_) throw Error("checksum failure in " + path_);
}

void write_pgm(const std::string& path, const Eigen::Ref<const MatrixX>& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
    for (Index r = 0; r < img.rows(); ++r)
        for (Index c = 0; c < img.cols(); ++c) {
            double v = std::min(1.0, std::max(0.0, img(r, c)));
            unsigned char b = static_cast<unsigned char>(std::lround(v * 255.0));
            out.write(reinterpret_cast<const char*>(&b), 1);
        }
    if (!out) throw Error("write failed: " + path);
}

MatrixX read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw Error("corrupt raster " + path + ": expected P5, got '" + magic + "'");
    auto next_int = [&](const char* what) {
        // skip whitespace and '#' comment lines per the PGM grammar
        int c = in.get();
        while (c != EOF && (std::isspace(c) || c == '#')) {
            if (c == '#')
                while (c != EOF && c != '\n') c = in.get();
            c = in.get();
        }
        long v = 0;
        bool any = false;
        while (c != EOF && std::isdigit(c)) {
            v = v * 10 + (c - '0');
            any = true;
            c = in.get();
        }
        if (!any) throw Error(cat("corrupt raster ", path, ": missing ", what));
        return v;
    };
    long w = next_int("width"), h = next_int("height"), maxval = next_int("maxval");
    if (w <= 0 || h <= 0 || maxval != 255)
        throw Error(cat("corrupt raster ", path, ": dims ", w, "x", h, " maxval ", maxval));
    MatrixX img(h, w);
    std::vector<unsigned char> row(static_cast<std::size_t>(w));
    for (long r = 0; r < h; ++r) {
        in.read(reinterpret_cast<char*>(row.data()), w);
        if (!in) throw Error("corrupt raster " + path + ": truncated pixel data");
        for (long c = 0; c < w; ++c) img(r, c) = row[static_cast<std::size_t>(c)] / 255.0;
    }
    return img;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create directory " + dir + ": " + ec.message());
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // trim to the shortest representation that round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char shorter[32];
        std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
        if (std::strtod(shorter, nullptr) == v) return shorter;
    }
    return buf;
}

}  // namespace graphreg
