#include "graphreg/dataset.hpp"

#include "graphreg/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace graphreg {

namespace fs = std::filesystem;

std::vector<Index> LabeledDataset::class_counts() const {
    std::vector<Index> counts(class_names.size(), 0);
    for (const LabeledImage& img : images) {
        if (img.label < 0 || img.label >= num_classes())
            throw Error(cat("label ", img.label, " out of range for ", num_classes(), " classes"));
        ++counts[static_cast<std::size_t>(img.label)];
    }
    return counts;
}

std::vector<Index> LabeledDataset::indices_of_class(int label) const {
    std::vector<Index> out;
    for (Index i = 0; i < size(); ++i)
        if (images[static_cast<std::size_t>(i)].label == label) out.push_back(i);
    return out;
}

void LabeledDataset::validate() const {
    for (Index i = 0; i < size(); ++i) {
        const LabeledImage& img = images[static_cast<std::size_t>(i)];
        if (img.height() < 8 || img.width() < 8)
            throw Error(cat("image ", i, " is ", img.height(), "x", img.width(), ", minimum is 8x8"));
        if (img.pixels.minCoeff() < 0.0 || img.pixels.maxCoeff() > 1.0)
            throw Error(cat("image ", i, " has pixels outside [0,1]"));
        if (img.label < 0 || img.label >= num_classes())
            throw Error(cat("image ", i, " label ", img.label, " out of range"));
        if (img.origin == Origin::augmented) {
            if (img.source_id < 0 || img.source_id >= size())
                throw Error(cat("augmented image ", i, " has invalid source ", img.source_id));
            const LabeledImage& src = images[static_cast<std::size_t>(img.source_id)];
            if (src.label != img.label)
                throw Error(cat("augmented image ", i, " source ", img.source_id, " has a different class"));
        }
    }
}

MatrixX LabeledDataset::flattened() const {
    if (images.empty()) return MatrixX(0, 0);
    const Index d = images.front().pixels.size();
    MatrixX out(size(), d);
    for (Index i = 0; i < size(); ++i) {
        const MatrixX& px = images[static_cast<std::size_t>(i)].pixels;
        if (px.size() != d) throw Error(cat("image ", i, " size differs from image 0"));
        for (Index r = 0; r < px.rows(); ++r)
            out.row(i).segment(r * px.cols(), px.cols()) = px.row(r);
    }
    return out;
}

std::vector<int> LabeledDataset::labels() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (const LabeledImage& img : images) out.push_back(img.label);
    return out;
}

void AugmentParams::validate() const {
    if (noise_sigma < 0 || saturation_delta < 0 || rotation_max_deg < 0)
        throw Error("augmentation magnitudes must be non-negative");
    if (crop_fraction <= 0 || crop_fraction > 1)
        throw Error(cat("crop_fraction must be in (0,1], got ", crop_fraction));
}

// ---------------------------------------------------------------------------
// manifest / cache

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

LabeledDataset load_manifest(const std::string& path, const std::vector<std::string>& class_names) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open manifest: " + path);
    const fs::path base = fs::path(path).parent_path();

    LabeledDataset ds;
    ds.class_names = class_names;
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (!saw_header) {
            if (fields.size() != 2 || fields[0] != "path" || fields[1] != "class")
                throw Error(cat("manifest ", path, " line ", line_no, ": expected header 'path,class'"));
            saw_header = true;
            continue;
        }
        if (fields.size() != 2)
            throw Error(cat("manifest ", path, " line ", line_no, ": expected 2 fields, got ", fields.size()));
        const std::string& rel = fields[0];
        const std::string& cls = fields[1];
        auto it = std::find(ds.class_names.begin(), ds.class_names.end(), cls);
        int label;
        if (it == ds.class_names.end()) {
            if (!class_names.empty())
                throw Error(cat("manifest ", path, " line ", line_no, ": unknown class '", cls, "'"));
            label = static_cast<int>(ds.class_names.size());
            ds.class_names.push_back(cls);
        } else {
            label = static_cast<int>(it - ds.class_names.begin());
        }
        LabeledImage img;
        const std::string img_path = (base / rel).string();
        try {
            img.pixels = read_pgm(img_path);
        } catch (const Error& e) {
            throw Error(cat("manifest ", path, " line ", line_no, ": ", e.what()));
        }
        img.label = label;
        ds.images.push_back(std::move(img));
    }
    if (!saw_header) throw Error("manifest " + path + ": empty file");
    if (ds.images.empty()) throw Error("manifest " + path + ": no samples");
    ds.validate();
    return ds;
}

void save_dataset(const LabeledDataset& ds, const std::string& dir) {
    ensure_dir(dir);
    ensure_dir((fs::path(dir) / "images").string());
    std::ofstream manifest(fs::path(dir) / "manifest.csv");
    std::ofstream origins(fs::path(dir) / "origins.csv");
    manifest << "path,class\n";
    origins << "index,origin,source_id\n";
    for (Index i = 0; i < ds.size(); ++i) {
        const LabeledImage& img = ds.images[static_cast<std::size_t>(i)];
        char name[32];
        std::snprintf(name, sizeof name, "images/img_%06lld.pgm", static_cast<long long>(i));
        write_pgm((fs::path(dir) / name).string(), img.pixels);
        manifest << name << "," << ds.class_names[static_cast<std::size_t>(img.label)] << "\n";
        origins << i << "," << (img.origin == Origin::original ? "original" : "augmented") << ","
                << img.source_id << "\n";
    }
    manifest.close();
    origins.close();

    nlohmann::json stats;
    auto counts = ds.class_counts();
    stats["class_names"] = ds.class_names;
    for (std::size_t c = 0; c < ds.class_names.size(); ++c)
        stats["class_counts"][ds.class_names[c]] = counts[c];
    Index n_orig = 0, n_aug = 0;
    for (const LabeledImage& img : ds.images)
        (img.origin == Origin::original ? n_orig : n_aug) += 1;
    stats["origin_histogram"] = {{"original", n_orig}, {"augmented", n_aug}};
    stats["total"] = ds.size();
    std::ofstream(fs::path(dir) / "stats.json") << stats.dump(2) << "\n";
}

LabeledDataset load_dataset(const std::string& dir) {
    std::vector<std::string> class_names;
    std::ifstream stats_in(fs::path(dir) / "stats.json");
    if (stats_in) {
        nlohmann::json stats = nlohmann::json::parse(stats_in);
        if (stats.contains("class_names"))
            class_names = stats["class_names"].get<std::vector<std::string>>();
    }
    LabeledDataset ds = load_manifest((fs::path(dir) / "manifest.csv").string(), class_names);
    const std::string origins_path = (fs::path(dir) / "origins.csv").string();
    std::ifstream in(origins_path);
    if (in) {
        std::string line;
        std::getline(in, line);  // header
        int line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            auto f = split_csv_line(line);
            if (f.size() != 3) throw Error(cat(origins_path, " line ", line_no, ": expected 3 fields"));
            const Index i = std::stoll(f[0]);
            if (i < 0 || i >= ds.size()) throw Error(cat(origins_path, " line ", line_no, ": bad index"));
            LabeledImage& img = ds.images[static_cast<std::size_t>(i)];
            img.origin = f[1] == "augmented" ? Origin::augmented : Origin::original;
            img.source_id = std::stoll(f[2]);
        }
        ds.validate();
    }
    return ds;
}

// ---------------------------------------------------------------------------
// synthetic generation

LabeledDataset generate_synthetic(const SyntheticConfig& config) {
    if (config.side < 8) throw Error(cat("synthetic image side ", config.side, " < 8"));
    if (static_cast<Index>(config.counts.size()) != config.classes)
        throw Error(cat("counts list has ", config.counts.size(), " entries for ", config.classes,
                        " classes"));
    LabeledDataset ds;
    static const char* kNames[] = {"ND", "VMD", "MD", "MDTD"};
    for (Index c = 0; c < config.classes; ++c)
        ds.class_names.push_back(c < 4 ? kNames[c] : cat("class", c));

    Rng rng = substream(config.seed, "synthetic");
    std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
    std::normal_distribution<Scalar> noise(0.0, 0.02);

    const Scalar s = static_cast<Scalar>(config.side);
    const Scalar half = s / 2.0;
    for (Index c = 0; c < config.classes; ++c) {
        // per-class annulus: radius, thickness and angular texture vary by class
        const Scalar base_radius = (0.30 + 0.14 * static_cast<Scalar>(c)) * half;
        const Scalar thickness = (0.16 + 0.03 * static_cast<Scalar>(c)) * half;
        const Scalar freq = 2.0 + 2.0 * static_cast<Scalar>(c);
        for (Index i = 0; i < config.counts[static_cast<std::size_t>(c)]; ++i) {
            const Scalar cx = (s - 1.0) / 2.0 + (unit(rng) - 0.5) * 0.10 * s;
            const Scalar cy = (s - 1.0) / 2.0 + (unit(rng) - 0.5) * 0.10 * s;
            const Scalar radius = base_radius * (1.0 + (unit(rng) - 0.5) * 0.12);
            const Scalar phase = unit(rng) * 2.0 * M_PI;
            LabeledImage img;
            img.label = static_cast<int>(c);
            img.pixels.resize(config.side, config.side);
            for (Index r = 0; r < config.side; ++r)
                for (Index col = 0; col < config.side; ++col) {
                    const Scalar dy = static_cast<Scalar>(r) - cy;
                    const Scalar dx = static_cast<Scalar>(col) - cx;
                    const Scalar d = std::sqrt(dx * dx + dy * dy);
                    const Scalar theta = std::atan2(dy, dx);
                    const Scalar ring = std::exp(-(d - radius) * (d - radius) / (2.0 * thickness * thickness));
                    const Scalar texture = 0.8 + 0.25 * std::sin(freq * theta + phase);
                    Scalar v = 0.08 + 0.85 * ring * texture + noise(rng);
                    img.pixels(r, col) = std::min(1.0, std::max(0.0, v));
                }
            ds.images.push_back(std::move(img));
        }
    }
    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------
// augmentation chain

namespace {

// bilinear sample with zero fill outside the image
Scalar sample_bilinear(const MatrixX& img, Scalar y, Scalar x) {
    const Index h = img.rows(), w = img.cols();
    const Index y0 = static_cast<Index>(std::floor(y)), x0 = static_cast<Index>(std::floor(x));
    const Scalar fy = y - static_cast<Scalar>(y0), fx = x - static_cast<Scalar>(x0);
    auto at = [&](Index r, Index c) -> Scalar {
        return (r < 0 || r >= h || c < 0 || c >= w) ? 0.0 : img(r, c);
    };
    return at(y0, x0) * (1 - fy) * (1 - fx) + at(y0, x0 + 1) * (1 - fy) * fx +
           at(y0 + 1, x0) * fy * (1 - fx) + at(y0 + 1, x0 + 1) * fy * fx;
}

MatrixX resize_bilinear(const MatrixX& img, Index out_h, Index out_w) {
    MatrixX out(out_h, out_w);
    const Scalar sy = static_cast<Scalar>(img.rows()) / static_cast<Scalar>(out_h);
    const Scalar sx = static_cast<Scalar>(img.cols()) / static_cast<Scalar>(out_w);
    for (Index r = 0; r < out_h; ++r)
        for (Index c = 0; c < out_w; ++c) {
            const Scalar y = (static_cast<Scalar>(r) + 0.5) * sy - 0.5;
            const Scalar x = (static_cast<Scalar>(c) + 0.5) * sx - 0.5;
            out(r, c) = sample_bilinear(img, y, x);
        }
    return out;
}

}  // namespace

LabeledImage augment_image(const LabeledImage& img, const AugmentParams& p, Rng& rng) {
    p.validate();
    const Index h = img.height(), w = img.width();
    MatrixX px = img.pixels;
    std::uniform_real_distribution<Scalar> unit(0.0, 1.0);

    if (p.noise_sigma > 0) {
        std::normal_distribution<Scalar> noise(0.0, p.noise_sigma);
        for (Index r = 0; r < h; ++r)
            for (Index c = 0; c < w; ++c)
                px(r, c) = std::min(1.0, std::max(0.0, px(r, c) + noise(rng)));
    }
    if (p.saturation_delta > 0) {
        const Scalar factor = 1.0 + (2.0 * unit(rng) - 1.0) * p.saturation_delta;
        px = (px * factor).cwiseMin(1.0).cwiseMax(0.0);
    }
    if (unit(rng) < 0.5) px = px.rowwise().reverse().eval();  // horizontal flip
    if (p.rotation_max_deg > 0) {
        const Scalar deg = (2.0 * unit(rng) - 1.0) * p.rotation_max_deg;
        const Scalar rad = deg * M_PI / 180.0;
        const Scalar cy = (static_cast<Scalar>(h) - 1.0) / 2.0;
        const Scalar cx = (static_cast<Scalar>(w) - 1.0) / 2.0;
        MatrixX rotated(h, w);
        const Scalar cs = std::cos(rad), sn = std::sin(rad);
        for (Index r = 0; r < h; ++r)
            for (Index c = 0; c < w; ++c) {
                const Scalar dy = static_cast<Scalar>(r) - cy, dx = static_cast<Scalar>(c) - cx;
                rotated(r, c) = sample_bilinear(px, cy + cs * dy - sn * dx, cx + sn * dy + cs * dx);
            }
        px = std::move(rotated);
    }
    if (p.crop_fraction < 1.0) {
        const Index ch = std::max<Index>(1, static_cast<Index>(std::llround(p.crop_fraction * h)));
        const Index cw = std::max<Index>(1, static_cast<Index>(std::llround(p.crop_fraction * w)));
        const Index top = (h - ch) / 2, left = (w - cw) / 2;
        px = resize_bilinear(px.block(top, left, ch, cw), h, w);
    }

    LabeledImage out;
    out.pixels = px.cwiseMin(1.0).cwiseMax(0.0);
    out.label = img.label;
    out.origin = Origin::augmented;
    out.source_id = img.source_id;
    return out;
}

// ---------------------------------------------------------------------------
// balancing and splitting

LabeledDataset balance(const LabeledDataset& ds, const AugmentParams& p, std::uint64_t seed) {
    ds.validate();
    auto counts = ds.class_counts();
    if (counts.empty()) throw Error("balance: dataset has no classes");
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] == 0) throw Error("balance: class '" + ds.class_names[c] + "' is empty");
    const Index majority = *std::max_element(counts.begin(), counts.end());

    LabeledDataset out = ds;
    Rng rng = substream(seed, "balance");
    for (int c = 0; c < static_cast<int>(counts.size()); ++c) {
        std::vector<Index> members = ds.indices_of_class(c);
        std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
        for (Index need = majority - counts[static_cast<std::size_t>(c)]; need > 0; --need) {
            const Index src = members[pick(rng)];
            const LabeledImage& base = ds.images[static_cast<std::size_t>(src)];
            LabeledImage aug = augment_image(base, p, rng);
            // trace to an original even when the bootstrap picked an augmented image
            aug.source_id = base.origin == Origin::original ? src : base.source_id;
            out.images.push_back(std::move(aug));
        }
    }

    // shuffle the new samples back in, remapping source references
    std::vector<Index> perm(static_cast<std::size_t>(out.size()));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Index> new_pos(perm.size());
    for (std::size_t j = 0; j < perm.size(); ++j) new_pos[static_cast<std::size_t>(perm[j])] = static_cast<Index>(j);
    LabeledDataset shuffled;
    shuffled.class_names = out.class_names;
    shuffled.images.reserve(perm.size());
    for (std::size_t j = 0; j < perm.size(); ++j) {
        LabeledImage img = std::move(out.images[static_cast<std::size_t>(perm[j])]);
        if (img.source_id >= 0) img.source_id = new_pos[static_cast<std::size_t>(img.source_id)];
        shuffled.images.push_back(std::move(img));
    }
    shuffled.validate();
    return shuffled;
}

SplitResult split_shuffle(const LabeledDataset& ds, Scalar train_fraction, std::uint64_t seed) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw Error(cat("train fraction must be in (0,1), got ", train_fraction));
    auto counts = ds.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] < 2)
            throw Error(cat("cannot stratify: class '", ds.class_names[c], "' has ", counts[c],
                            " sample(s)"));

    std::vector<Index> perm(static_cast<std::size_t>(ds.size()));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng = substream(seed, "split");
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<Index> quota(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c)
        quota[c] = static_cast<Index>(std::llround(train_fraction * static_cast<Scalar>(counts[c])));

    SplitResult out;
    out.train.class_names = out.test.class_names = ds.class_names;
    std::vector<Index> taken(counts.size(), 0);
    for (Index idx : perm) {
        const LabeledImage& img = ds.images[static_cast<std::size_t>(idx)];
        auto c = static_cast<std::size_t>(img.label);
        LabeledImage copy = img;
        copy.source_id = -1;  // source indices are not meaningful across the split
        copy.origin = img.origin;
        if (taken[c] < quota[c]) {
            ++taken[c];
            out.train.images.push_back(std::move(copy));
        } else {
            out.test.images.push_back(std::move(copy));
        }
    }
    return out;
}

}  // namespace graphreg
