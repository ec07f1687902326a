#include "hanslens/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hanslens/error.hpp"
#include "hanslens/hlw.hpp"
#include "hanslens/rng.hpp"

namespace hanslens {

using json = nlohmann::ordered_json;

// --- Samples -----------------------------------------------------------------

void Sample::validate() const {
  if (image.rank() != 2) throw DataError(id + ": image must be 2-D");
  for (double v : image.values())
    if (!(v >= 0.0 && v <= 1.0)) throw DataError(id + ": pixel value outside [0, 1]");
  if (label != 0 && label != 1) throw DataError(id + ": label must be 0 or 1");
  if (mask) {
    if (mask->shape() != image.shape()) throw DataError(id + ": mask shape does not match image shape");
    bool any = false;
    for (double v : mask->values()) {
      if (v != 0.0 && v != 1.0) throw DataError(id + ": mask is not binary");
      any = any || v == 1.0;
    }
    if (label == 0 && any) throw DataError(id + ": inlier carries a nonempty mask");
  }
}

std::vector<Tensor> Dataset::images(const std::vector<Sample>& split) {
  std::vector<Tensor> out;
  out.reserve(split.size());
  for (const auto& s : split) out.push_back(s.image);
  return out;
}

void Dataset::validate() const {
  if (train.empty()) throw DataError("train split is empty");
  const Shape shape = train.front().image.shape();
  auto check = [&](const std::vector<Sample>& split, const char* name, int required_label) {
    for (const auto& s : split) {
      s.validate();
      if (s.image.shape() != shape) throw DataError(s.id + ": image shape differs from the train split");
      if (required_label >= 0 && s.label != required_label)
        throw DataError(s.id + ": " + name + " split accepts only label " + std::to_string(required_label));
    }
  };
  check(train, "train", 0);
  check(val, "val", 0);
  check(val_outliers, "val_outliers", 1);
  check(test, "test", -1);
  const bool has_in = std::any_of(test.begin(), test.end(), [](const Sample& s) { return s.label == 0; });
  const bool has_out = std::any_of(test.begin(), test.end(), [](const Sample& s) { return s.label == 1; });
  if (!has_out) throw DataError("test split requires outliers");
  if (!has_in) throw DataError("test split requires inliers");
}

// --- Synthetic data ------------------------------------------------------------

std::string to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::stripe: return "stripe";
    case SynthKind::dotted_line: return "dotted_line";
    case SynthKind::brightness: return "brightness";
    case SynthKind::spatter_noise: return "spatter_noise";
    case SynthKind::cartoon2d: return "cartoon2d";
  }
  return "unknown";
}

SynthKind parse_synth_kind(const std::string& name) {
  for (auto k : {SynthKind::stripe, SynthKind::dotted_line, SynthKind::brightness, SynthKind::spatter_noise,
                 SynthKind::cartoon2d})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown synthetic kind '" + name + "'");
}

namespace {

constexpr int kBaseMax = 191;

void SynthSpec_check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("synth spec: " + msg);
}

}  // namespace

void SynthSpec::validate() const {
  SynthSpec_check(n_train > 0 && n_val > 0 && n_test > 0, "counts must be positive");
  if (kind == SynthKind::cartoon2d) {
    SynthSpec_check(cartoon_stddev > 0.0 && cartoon_shift > 0.0, "cartoon spread and shift must be positive");
    for (double m : cartoon_mean) SynthSpec_check(m >= 0.0 && m <= 1.0, "cartoon mean must lie in [0, 1]");
    return;
  }
  SynthSpec_check(height > 0 && width > 0, "image size must be positive");
  SynthSpec_check(pixel_noise >= 0.0 && background_jitter >= 0.0 && stroke_jitter >= 0.0,
                  "texture spreads must be nonnegative");
  SynthSpec_check(std::isfinite(background_level) && std::isfinite(stroke_level), "texture levels must be finite");
  switch (kind) {
    case SynthKind::stripe: SynthSpec_check(stripe_width >= 1 && stripe_width <= height, "stripe width out of range"); break;
    case SynthKind::dotted_line: SynthSpec_check(dot_count >= 1, "dot count must be positive"); break;
    case SynthKind::brightness:
      SynthSpec_check(brightness_offset >= 1 && brightness_offset <= 255 - kBaseMax, "brightness offset must lie in [1, 64]");
      break;
    case SynthKind::spatter_noise:
      SynthSpec_check(noise_probability > 0.0 && noise_probability <= 1.0, "noise probability must lie in (0, 1]");
      break;
    default: break;
  }
}

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

GrayImage base_image(const SynthSpec& spec, Engine& eng) {
  GrayImage img{spec.height, spec.width, std::vector<std::uint8_t>(spec.height * spec.width)};
  if (spec.kind == SynthKind::cartoon2d) {
    std::normal_distribution<double> n(0.0, spec.cartoon_stddev);
    for (std::size_t i = 0; i < 2; ++i) img.pixels[i] = to_byte(255.0 * (spec.cartoon_mean[i] + n(eng)));
    return img;
  }
  const double h = static_cast<double>(spec.height), w = static_cast<double>(spec.width);
  const double background = spec.background_level + spec.background_jitter * (2.0 * uniform01(eng) - 1.0);
  std::normal_distribution<double> noise(0.0, spec.pixel_noise);
  std::vector<double> v(img.pixels.size());
  for (double& p : v) p = background + noise(eng);

  const int strokes = 1 + static_cast<int>(3.0 * uniform01(eng));
  for (int s = 0; s < strokes; ++s) {
    const double r0 = h * uniform01(eng), c0 = w * uniform01(eng);
    const double r1 = h * uniform01(eng), c1 = w * uniform01(eng);
    const double intensity = spec.stroke_level + spec.stroke_jitter * (2.0 * uniform01(eng) - 1.0);
    const double radius = 0.5 + uniform01(eng);
    const int steps = 4 * static_cast<int>(std::max(h, w));
    for (int t = 0; t <= steps; ++t) {
      const double a = static_cast<double>(t) / steps;
      const double rc = r0 + a * (r1 - r0), cc = c0 + a * (c1 - c0);
      for (std::size_t r = 0; r < spec.height; ++r)
        for (std::size_t c = 0; c < spec.width; ++c) {
          const double dr = static_cast<double>(r) + 0.5 - rc, dc = static_cast<double>(c) + 0.5 - cc;
          if (dr * dr + dc * dc <= radius * radius) v[r * spec.width + c] = std::max(v[r * spec.width + c], intensity);
        }
    }
  }
  for (std::size_t i = 0; i < v.size(); ++i)
    img.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v[i]), 0L, static_cast<long>(kBaseMax)));
  return img;
}

GrayImage corrupt(const SynthSpec& spec, const GrayImage& base, Engine& eng) {
  GrayImage out = base;
  auto& px = out.pixels;
  const std::size_t H = base.height, W = base.width;
  switch (spec.kind) {
    case SynthKind::stripe:
      for (std::size_t r = 0; r < spec.stripe_width; ++r)
        for (std::size_t c = 0; c < W; ++c) px[r * W + c] = 255;
      break;
    case SynthKind::dotted_line: {
      // A random line through the image, dots every other step along it.
      const double r0 = H * uniform01(eng), c0 = W * uniform01(eng);
      const double angle = 3.141592653589793 * uniform01(eng);
      const double dr = std::sin(angle), dc = std::cos(angle);
      const double start = -static_cast<double>(std::max(H, W));
      std::size_t placed = 0;
      for (double t = start; placed < spec.dot_count && t <= -start; t += 2.0) {
        const long r = std::lround(r0 + t * dr - 0.5), c = std::lround(c0 + t * dc - 0.5);
        if (r < 0 || c < 0 || r >= static_cast<long>(H) || c >= static_cast<long>(W)) continue;
        px[static_cast<std::size_t>(r) * W + static_cast<std::size_t>(c)] = 255;
        ++placed;
      }
      break;
    }
    case SynthKind::brightness:
      for (auto& p : px) p = static_cast<std::uint8_t>(std::min(255, p + spec.brightness_offset));
      break;
    case SynthKind::spatter_noise:
      for (auto& p : px)
        if (uniform01(eng) < spec.noise_probability) p = 255;
      break;
    case SynthKind::cartoon2d: {
      const std::size_t axis = uniform01(eng) < 0.5 ? 0 : 1;
      const double sign = uniform01(eng) < 0.5 ? -1.0 : 1.0;
      px[axis] = to_byte(px[axis] + sign * 255.0 * spec.cartoon_shift);
      break;
    }
  }
  return out;
}

Sample make_inlier(const SynthSpec& spec, const std::string& id, Engine& eng) {
  Sample s{id, from_gray(base_image(spec, eng)), 0, std::nullopt};
  return s;
}

Sample make_outlier(const SynthSpec& spec, const std::string& id, std::string_view stream, std::uint64_t index) {
  auto eng = make_engine(spec.seed, stream, index);
  const GrayImage base = base_image(spec, eng);
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    auto ceng = make_engine(spec.seed, std::string(stream) + "/corrupt", index * 100 + attempt);
    const GrayImage bad = corrupt(spec, base, ceng);
    GrayImage mask{base.height, base.width, std::vector<std::uint8_t>(base.pixels.size())};
    bool changed = false;
    for (std::size_t i = 0; i < base.pixels.size(); ++i) {
      mask.pixels[i] = bad.pixels[i] != base.pixels[i] ? 255 : 0;
      changed = changed || mask.pixels[i] != 0;
    }
    if (changed) return Sample{id, from_gray(bad), 1, mask_from_gray(mask)};
  }
  throw NumericalError(id + ": corruption left the image unchanged after 100 draws");
}

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04zu", prefix, i);
  return buf;
}

}  // namespace

Dataset generate_synthetic(const SynthSpec& spec_in) {
  SynthSpec spec = spec_in;
  if (spec.kind == SynthKind::cartoon2d) {
    spec.height = 1;
    spec.width = 2;
  }
  spec.validate();
  Dataset ds;
  ds.class_name = to_string(spec.kind);
  for (std::size_t i = 0; i < spec.n_train; ++i) {
    auto eng = make_engine(spec.seed, "synth/train", i);
    ds.train.push_back(make_inlier(spec, numbered("train", i), eng));
  }
  for (std::size_t i = 0; i < spec.n_val; ++i) {
    auto eng = make_engine(spec.seed, "synth/val", i);
    ds.val.push_back(make_inlier(spec, numbered("val", i), eng));
  }
  for (std::size_t i = 0; i < spec.n_val_outliers; ++i)
    ds.val_outliers.push_back(make_outlier(spec, numbered("valout", i), "synth/val_outlier", i));
  for (std::size_t i = 0; i < spec.n_test; ++i) {
    auto eng = make_engine(spec.seed, "synth/test_inlier", i);
    ds.test.push_back(make_inlier(spec, numbered("test", i), eng));
  }
  for (std::size_t i = 0; i < spec.n_test; ++i)
    ds.test.push_back(make_outlier(spec, numbered("test", spec.n_test + i), "synth/test_outlier", i));
  ds.validate();
  return ds;
}

// --- Graymaps -------------------------------------------------------------------

GrayImage to_gray(const Tensor& image) {
  const std::size_t h = image.rank() == 2 ? image.shape()[0] : 1;
  const std::size_t w = image.size() / h;
  GrayImage g{h, w, std::vector<std::uint8_t>(image.size())};
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = image[i];
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("pixel value outside [0, 1]");
    g.pixels[i] = to_byte(255.0 * v);
  }
  return g;
}

Tensor from_gray(const GrayImage& image) {
  std::vector<double> v(image.pixels.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = image.pixels[i] / 255.0;
  return Tensor({image.height, image.width}, std::move(v));
}

Tensor mask_from_gray(const GrayImage& image) {
  std::vector<double> v(image.pixels.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = image.pixels[i] >= 128 ? 1.0 : 0.0;
  return Tensor({image.height, image.width}, std::move(v));
}

namespace {

std::size_t read_header_int(std::istream& is, const std::string& where) {
  for (;;) {
    const int c = is.peek();
    if (c == '#') {
      std::string skip;
      std::getline(is, skip);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      break;
    }
  }
  long long v = -1;
  if (!(is >> v) || v < 0) throw DataError(where + ": malformed graymap header");
  return static_cast<std::size_t>(v);
}

}  // namespace

GrayImage read_pgm(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("missing image file " + path.string());
  std::string magic(2, '\0');
  is.read(magic.data(), 2);
  if (magic != "P5") throw DataError(path.string() + ": not a binary graymap (P5)");
  GrayImage g;
  g.width = read_header_int(is, path.string());
  g.height = read_header_int(is, path.string());
  const std::size_t maxval = read_header_int(is, path.string());
  if (g.width == 0 || g.height == 0) throw DataError(path.string() + ": empty graymap");
  if (maxval == 0 || maxval > 255) throw DataError(path.string() + ": only 8-bit graymaps are supported");
  if (!std::isspace(is.get())) throw DataError(path.string() + ": malformed graymap header");
  g.pixels.resize(g.width * g.height);
  is.read(reinterpret_cast<char*>(g.pixels.data()), static_cast<std::streamsize>(g.pixels.size()));
  if (static_cast<std::size_t>(is.gcount()) != g.pixels.size()) throw DataError(path.string() + ": truncated graymap");
  return g;
}

void write_pgm(const fs::path& path, const GrayImage& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!os) throw DataError("failed writing " + path.string());
}

// --- Manifest ---------------------------------------------------------------------

void write_dataset(const Dataset& dataset, const fs::path& dir) {
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  json j;
  j["class"] = dataset.class_name;
  auto emit = [&](const std::vector<Sample>& split, const char* key) {
    json arr = json::array();
    for (const auto& s : split) {
      json e;
      const std::string image = "images/" + s.id + ".pgm";
      write_pgm(dir / image, to_gray(s.image));
      e["image"] = image;
      e["label"] = s.label;
      if (s.mask) {
        const std::string mask = "masks/" + s.id + ".pgm";
        write_pgm(dir / mask, to_gray(*s.mask));
        e["mask"] = mask;
      }
      arr.push_back(std::move(e));
    }
    j[key] = std::move(arr);
  };
  emit(dataset.train, "train");
  emit(dataset.val, "val");
  emit(dataset.val_outliers, "val_outliers");
  emit(dataset.test, "test");
  std::ofstream os(dir / "manifest.json", std::ios::binary);
  if (!os) throw DataError("cannot write manifest under " + dir.string());
  os << j.dump(2) << '\n';
}

Dataset load_manifest(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("missing manifest " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed manifest: " + e.what());
  }
  const fs::path root = path.parent_path();
  Dataset ds;
  try {
    ds.class_name = j.at("class").get<std::string>();
    auto read_split = [&](const char* key, std::vector<Sample>& out) {
      if (!j.contains(key)) return;
      for (const auto& e : j.at(key)) {
        Sample s;
        const std::string image = e.at("image").get<std::string>();
        s.id = fs::path(image).stem().string();
        s.label = e.at("label").get<int>();
        try {
          s.image = from_gray(read_pgm(root / image));
          if (e.contains("mask") && !e.at("mask").is_null())
            s.mask = mask_from_gray(read_pgm(root / e.at("mask").get<std::string>()));
        } catch (const DataError& err) {
          throw DataError("sample " + s.id + ": " + err.what());
        }
        s.validate();
        out.push_back(std::move(s));
      }
    };
    read_split("train", ds.train);
    read_split("val", ds.val);
    read_split("val_outliers", ds.val_outliers);
    read_split("test", ds.test);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed manifest: " + e.what());
  }
  ds.validate();
  return ds;
}

// --- Heatmaps ---------------------------------------------------------------------

GrayImage render_heatmap(const Tensor& values) {
  if (!values.all_finite()) throw NumericalError("heatmap contains non-finite values");
  const std::size_t h = values.rank() == 2 ? values.shape()[0] : 1;
  GrayImage g{h, values.size() / h, std::vector<std::uint8_t>(values.size(), 0)};
  double m = 0.0;
  for (double v : values.values()) m = std::max(m, v);
  if (m <= 0.0) return g;
  for (std::size_t i = 0; i < values.size(); ++i) g.pixels[i] = to_byte(255.0 * std::max(0.0, values[i]) / m);
  return g;
}

void write_heatmap(const Heatmap& heatmap, const fs::path& base) {
  const Tensor& v = heatmap.values;
  if (!v.all_finite()) throw NumericalError("heatmap contains non-finite values");
  const std::size_t h = v.rank() == 2 ? v.shape()[0] : 1;
  const std::size_t w = v.size() / h;
  fs::path sidecar = base;
  sidecar += ".hm";
  std::ofstream os(sidecar, std::ios::binary);
  if (!os) throw DataError("cannot open " + sidecar.string() + " for writing");
  os << "HM1 " << h << ' ' << w << '\n';
  write_f32_le(os, v.values());
  if (!os) throw DataError("failed writing " + sidecar.string());
  fs::path image = base;
  image += ".pgm";
  write_pgm(image, render_heatmap(v));
}

Tensor read_heatmap(const fs::path& sidecar) {
  std::ifstream is(sidecar, std::ios::binary);
  if (!is) throw DataError("missing heatmap " + sidecar.string());
  std::string line;
  std::getline(is, line);
  std::istringstream ls(line);
  std::string magic;
  std::size_t h = 0, w = 0;
  if (!(ls >> magic >> h >> w) || magic != "HM1" || h == 0 || w == 0)
    throw DataError(sidecar.string() + ": bad HM1 header");
  return Tensor({h, w}, read_f32_le(is, h * w));
}

}  // namespace hanslens
