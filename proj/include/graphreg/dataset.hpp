#pragma once

// Labeled grayscale image datasets: manifest ingestion, synthetic generation,
// the augmentation chain (noise -> saturation -> flip -> rotation -> center
// crop), bootstrap balancing of minority classes and stratified splitting.

#include "graphreg/common.hpp"

#include <optional>

namespace graphreg {

enum class Origin { original, augmented };

struct LabeledImage {
    MatrixX pixels;  // H x W, values in [0,1]
    int label = 0;
    Origin origin = Origin::original;
    Index source_id = -1;  // bootstrap source index when augmented

    Index height() const { return pixels.rows(); }
    Index width() const { return pixels.cols(); }
};

struct LabeledDataset {
    std::vector<LabeledImage> images;
    std::vector<std::string> class_names;

    Index size() const { return static_cast<Index>(images.size()); }
    Index num_classes() const { return static_cast<Index>(class_names.size()); }
    std::vector<Index> class_counts() const;
    std::vector<Index> indices_of_class(int label) const;
    void validate() const;

    // Images flattened row-major into the rows of an (n x H*W) matrix.
    MatrixX flattened() const;
    std::vector<int> labels() const;
};

struct AugmentParams {
    Scalar noise_sigma = 0.01;
    Scalar saturation_delta = 0.1;
    Scalar rotation_max_deg = 10.0;
    Scalar crop_fraction = 0.9;

    void validate() const;
};

struct SyntheticConfig {
    Index classes = 4;
    std::vector<Index> counts;  // one per class
    Index side = 32;
    std::uint64_t seed = 0;
};

// Manifest rows are `path,class` with paths relative to the manifest file.
// When `class_names` is given, unknown classes are rejected citing the line.
LabeledDataset load_manifest(const std::string& path,
                             const std::vector<std::string>& class_names = {});

// Each class is a distinct annulus pattern (radius/thickness/texture vary by
// class) with per-sample jitter; separable but overlapping, deterministic per
// seed.
LabeledDataset generate_synthetic(const SyntheticConfig& config);

LabeledImage augment_image(const LabeledImage& img, const AugmentParams& p, Rng& rng);

// Up-samples every minority class to the majority count by bootstrap +
// augmentation, then shuffles the new samples back into the dataset.
LabeledDataset balance(const LabeledDataset& ds, const AugmentParams& p, std::uint64_t seed);

struct SplitResult {
    LabeledDataset train, test;
};
// Full shuffle followed by a stratified per-class split; train gets
// round(fraction * class count) of every class.
SplitResult split_shuffle(const LabeledDataset& ds, Scalar train_fraction, std::uint64_t seed);

// Dataset cache: directory of PGM rasters + manifest.csv + origins.csv +
// stats.json (per-class counts and origin histogram).
void save_dataset(const LabeledDataset& ds, const std::string& dir);
LabeledDataset load_dataset(const std::string& dir);

}  // namespace graphreg
