#include "tlsr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "tlsr/errors.hpp"
#include "tlsr/png_io.hpp"

namespace tlsr::harness {

namespace fs = std::filesystem;

std::vector<Image> Dataset::images() const {
  std::vector<Image> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.hr);
  return out;
}

std::uint64_t image_hash(const Image& img) {
  const std::int32_t dims[3] = {img.height, img.width, img.channels};
  const std::uint64_t h = fnv1a64(dims, sizeof dims);
  return fnv1a64(img.data.data(), img.data.size() * sizeof(double), h);
}

namespace {

Image to_rgb(const Image& img) {
  if (img.channels == 3) return img;
  Image out(img.height, img.width, 3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, x, 0);
  return out;
}

void finalize(Dataset& ds) {
  if (ds.entries.empty()) throw DataError("dataset: no usable images");
  std::sort(ds.entries.begin(), ds.entries.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  const auto imgs = ds.images();
  ds.mean = imaging::mean_rgb(imgs);
}

}  // namespace

Dataset ingest_dataset(const fs::path& dir, int scale, const std::optional<fs::path>& cache_dir) {
  if (scale < 1) throw std::invalid_argument("ingest_dataset: scale must be >= 1");
  if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (e.is_regular_file() && ext == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  Dataset ds;
  ds.scale = scale;
  for (const auto& f : files) {
    try {
      Image img = imaging::crop_to_multiple(to_rgb(imaging::read_png(f)), scale);
      const auto h = image_hash(img);
      ds.entries.push_back({f.stem().string(), std::move(img), h});
    } catch (const DataError& e) {
      ds.warnings.push_back(f.filename().string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      ds.warnings.push_back(f.filename().string() + ": " + e.what());
    }
  }
  if (ds.entries.empty()) throw DataError("no readable PNG images in " + dir.string());
  finalize(ds);
  if (cache_dir) {
    fs::create_directories(*cache_dir);
    std::ofstream out(*cache_dir / "index.tsv", std::ios::binary);
    out << index_text(ds);
    if (!out) throw DataError("cannot write dataset index in " + cache_dir->string());
  }
  return ds;
}

Dataset make_dataset(std::vector<Image> images, int scale) {
  Dataset ds;
  ds.scale = scale;
  for (std::size_t i = 0; i < images.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "img_%03zu", i);
    Image img = imaging::crop_to_multiple(to_rgb(images[i]), scale);
    const auto h = image_hash(img);
    ds.entries.push_back({id, std::move(img), h});
  }
  finalize(ds);
  return ds;
}

std::string index_text(const Dataset& ds) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "# scale %d mean %.17g %.17g %.17g\n", ds.scale, ds.mean[0], ds.mean[1], ds.mean[2]);
  std::string out = buf;
  for (const auto& e : ds.entries) {
    std::snprintf(buf, sizeof buf, "\t%d\t%d\t%016llx\n", e.hr.height, e.hr.width,
                  static_cast<unsigned long long>(e.hash));
    out += e.id + buf;
  }
  return out;
}

namespace {

using Color = std::array<double, 3>;

Color random_color(Rng& rng) { return {rng.uniform(), rng.uniform(), rng.uniform()}; }

struct Shape {
  enum Kind { Disc, Ellipse, Rect, HalfPlane } kind;
  double cx, cy, a, b, angle;
  Color c1, c2;
  bool striped;
  double freq, stripe_angle;

  bool inside(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double ca = std::cos(angle), sa = std::sin(angle);
    const double u = ca * dx + sa * dy, v = -sa * dx + ca * dy;
    switch (kind) {
      case Disc: return dx * dx + dy * dy <= a * a;
      case Ellipse: return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
      case Rect: return std::abs(u) <= a && std::abs(v) <= b;
      case HalfPlane: return u >= 0.0;
    }
    return false;
  }

  Color color(double x, double y) const {
    if (!striped) return c1;
    const double t = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * freq *
                                          (x * std::cos(stripe_angle) + y * std::sin(stripe_angle)));
    return {c1[0] + t * (c2[0] - c1[0]), c1[1] + t * (c2[1] - c1[1]), c1[2] + t * (c2[2] - c1[2])};
  }
};

}  // namespace

Image synthesize_scene(int height, int width, Rng& rng) {
  if (height < 1 || width < 1) throw std::invalid_argument("synthesize_scene: empty size");
  const Color g0 = random_color(rng), g1 = random_color(rng);
  const double ga = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double extent = std::max(height, width);

  std::vector<Shape> shapes;
  const int count = rng.uniform_int(6, 12);
  for (int i = 0; i < count; ++i) {
    Shape s{};
    s.kind = static_cast<Shape::Kind>(rng.uniform_int(0, 3));
    s.cx = rng.uniform(0.0, width);
    s.cy = rng.uniform(0.0, height);
    s.a = rng.uniform(0.05, 0.35) * extent;
    s.b = rng.uniform(0.05, 0.35) * extent;
    s.angle = rng.uniform(0.0, std::numbers::pi);
    s.c1 = random_color(rng);
    s.c2 = random_color(rng);
    s.striped = rng.uniform() < 0.4;
    s.freq = rng.uniform(0.04, 0.25);
    s.stripe_angle = rng.uniform(0.0, std::numbers::pi);
    shapes.push_back(s);
  }

  constexpr int kSub = 4;
  Image img(height, width, 3);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      Color acc{0.0, 0.0, 0.0};
      for (int sy = 0; sy < kSub; ++sy)
        for (int sx = 0; sx < kSub; ++sx) {
          const double px = x + (sx + 0.5) / kSub, py = y + (sy + 0.5) / kSub;
          const double t = std::clamp(
              0.5 + ((px - width / 2.0) * std::cos(ga) + (py - height / 2.0) * std::sin(ga)) / extent, 0.0, 1.0);
          Color c{g0[0] + t * (g1[0] - g0[0]), g0[1] + t * (g1[1] - g0[1]), g0[2] + t * (g1[2] - g0[2])};
          for (const auto& s : shapes)  // painter's order
            if (s.inside(px, py)) c = s.color(px, py);
          for (int k = 0; k < 3; ++k) acc[k] += c[k];
        }
      for (int k = 0; k < 3; ++k) img.at(y, x, k) = acc[k] / (kSub * kSub);
    }
  return imaging::quantize_8bit(img);
}

std::vector<Image> synthesize_scenes(int count, int height, int width, Rng& rng) {
  std::vector<Image> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng child = rng.child(static_cast<std::uint64_t>(i));
    out.push_back(synthesize_scene(height, width, child));
  }
  return out;
}

}  // namespace tlsr::harness
