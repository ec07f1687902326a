#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hanslens/lrp.hpp"
#include "hanslens/tensor.hpp"

namespace hanslens {

namespace fs = std::filesystem;

struct Sample {
  std::string id;
  Tensor image;  // (H, W), values in [0, 1]
  int label = 0;       // 0 inlier, 1 outlier
  std::optional<Tensor> mask;  // (H, W), {0, 1}; 1 = anomalous pixel

  // Throws DataError naming the sample when an invariant is broken.
  void validate() const;
};

struct Dataset {
  std::string class_name;
  std::vector<Sample> train;         // inliers only
  std::vector<Sample> val;           // inliers
  std::vector<Sample> val_outliers;  // outliers for deep-model selection
  std::vector<Sample> test;          // both labels

  void validate() const;

  static std::vector<Tensor> images(const std::vector<Sample>& split);
};

enum class SynthKind { stripe, dotted_line, brightness, spatter_noise, cartoon2d };

std::string to_string(SynthKind kind);
SynthKind parse_synth_kind(const std::string& name);

struct SynthSpec {
  SynthKind kind = SynthKind::stripe;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t n_train = 200;
  std::size_t n_val = 50;
  std::size_t n_val_outliers = 10;
  std::size_t n_test = 50;  // per label
  // Inlier texture in gray levels: per-image background, per-pixel noise,
  // and 1-3 strokes per image.
  double background_level = 64.0;
  double background_jitter = 4.0;
  double pixel_noise = 24.0;
  double stroke_level = 100.0;
  double stroke_jitter = 10.0;
  std::size_t stripe_width = 2;
  std::size_t dot_count = 8;
  int brightness_offset = 64;  // gray levels added to every pixel
  double noise_probability = 0.1;
  // cartoon2d: inlier Gaussian blob and the outlier displacement along one axis
  std::array<double, 2> cartoon_mean{0.6, 0.6};
  double cartoon_stddev = 0.05;
  double cartoon_shift = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

// Base inlier images are seeded random strokes over a noisy gray background,
// capped at gray level 191 so every corruption below visibly changes pixels.
// Outliers are corrupted copies of fresh base images; the mask marks exactly
// the pixels whose 8-bit value changed. cartoon2d emits 1x2 points instead.
Dataset generate_synthetic(const SynthSpec& spec);

// Writes images/, masks/ and manifest.json under `dir`.
void write_dataset(const Dataset& dataset, const fs::path& dir);

Dataset load_manifest(const fs::path& path);

// 8-bit binary graymap.
struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
};

GrayImage read_pgm(const fs::path& path);
void write_pgm(const fs::path& path, const GrayImage& image);

GrayImage to_gray(const Tensor& image);               // round(255 v), v in [0, 1]
Tensor from_gray(const GrayImage& image);             // v / 255
Tensor mask_from_gray(const GrayImage& image);        // v >= 128

// Rectified heatmap scaled so its maximum maps to 255; all-zero stays black.
GrayImage render_heatmap(const Tensor& values);

// Writes `<base>.hm` (HM1 header + little-endian float32) and `<base>.pgm`.
void write_heatmap(const Heatmap& heatmap, const fs::path& base);
Tensor read_heatmap(const fs::path& sidecar);

}  // namespace hanslens
