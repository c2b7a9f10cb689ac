#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tlsr/image.hpp"
#include "tlsr/rng.hpp"

namespace tlsr::harness {

using imaging::Image;

struct DatasetEntry {
  std::string id;  // file stem
  Image hr;        // RGB, cropped to a multiple of the scale
  std::uint64_t hash = 0;
};

struct Dataset {
  int scale = 1;
  std::vector<DatasetEntry> entries;  // sorted by id
  imaging::Rgb mean{};
  std::vector<std::string> warnings;  // one per skipped file

  std::vector<Image> images() const;
};

/// Loads every *.png under `dir` (non-recursive, sorted by name). Gray images
/// are replicated to RGB. Unreadable files are skipped with a warning; a
/// directory without a single usable image is a DataError. With `cache_dir`
/// the index (`index.tsv`: mean line, then id/height/width/hash rows) is
/// written there.
Dataset ingest_dataset(const std::filesystem::path& dir, int scale,
                       const std::optional<std::filesystem::path>& cache_dir = std::nullopt);

/// Wraps in-memory images (ids img_000, img_001, ...) the same way.
Dataset make_dataset(std::vector<Image> images, int scale);

std::uint64_t image_hash(const Image& img);
std::string index_text(const Dataset& ds);

/// Piecewise-smooth synthetic scenes: a colour gradient background under
/// anti-aliased discs, ellipses, rotated rectangles, half-planes and striped
/// fills. Values are 8-bit quantized.
Image synthesize_scene(int height, int width, Rng& rng);
std::vector<Image> synthesize_scenes(int count, int height, int width, Rng& rng);

}  // namespace tlsr::harness
