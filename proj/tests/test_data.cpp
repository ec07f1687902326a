#include <doctest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hanslens/data.hpp"
#include "hanslens/error.hpp"
#include "hanslens/hlw.hpp"
#include "test_util.hpp"

using namespace hanslens;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hanslens_test_data_" + testing::process_tag() + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

SynthSpec small(SynthKind kind) {
  SynthSpec s;
  s.kind = kind;
  s.n_train = 12;
  s.n_val = 4;
  s.n_val_outliers = 3;
  s.n_test = 5;
  s.seed = 7;
  return s;
}

}  // namespace

TEST_CASE("synthetic generation is deterministic") {
  for (auto kind : {SynthKind::stripe, SynthKind::dotted_line, SynthKind::brightness, SynthKind::spatter_noise,
                    SynthKind::cartoon2d}) {
    const auto a = generate_synthetic(small(kind));
    const auto b = generate_synthetic(small(kind));
    REQUIRE(a.test.size() == b.test.size());
    for (std::size_t i = 0; i < a.test.size(); ++i) {
      CHECK(a.test[i].image == b.test[i].image);
      CHECK(a.test[i].mask == b.test[i].mask);
    }
    CHECK_NOTHROW(a.validate());
    auto other = small(kind);
    other.seed = 8;
    CHECK_FALSE(generate_synthetic(other).train[0].image == a.train[0].image);
  }
}

TEST_CASE("synthetic dataset files are byte identical across runs") {
  const auto d1 = scratch("det1"), d2 = scratch("det2");
  write_dataset(generate_synthetic(small(SynthKind::stripe)), d1);
  write_dataset(generate_synthetic(small(SynthKind::stripe)), d2);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(d1)) {
    if (!e.is_regular_file()) continue;
    ++files;
    CHECK(slurp(e.path()) == slurp(d2 / fs::relative(e.path(), d1)));
  }
  CHECK(files == 1 + (12 + 4 + 3 + 10) + (3 + 5));
}

TEST_CASE("masks mark exactly the changed pixels") {
  SUBCASE("brightness changes every pixel") {
    const auto ds = generate_synthetic(small(SynthKind::brightness));
    for (const auto& s : ds.test)
      if (s.label == 1)
        for (double v : s.mask->values()) CHECK(v == 1.0);
  }
  SUBCASE("stripe of width two on 16x16") {
    const auto ds = generate_synthetic(small(SynthKind::stripe));
    for (const auto& s : ds.test) {
      if (s.label != 1) continue;
      CHECK(sum(s.mask->values()) == 32);
      for (std::size_t c = 0; c < 16; ++c) {
        CHECK(s.mask->at(0, c) == 1);
        CHECK(s.mask->at(1, c) == 1);
        CHECK(s.image.at(0, c) == 1.0);
      }
    }
  }
  SUBCASE("inliers never carry anomalous pixels") {
    const auto ds = generate_synthetic(small(SynthKind::dotted_line));
    for (const auto& s : ds.test)
      if (s.label == 0) CHECK((!s.mask || sum(s.mask->values()) == 0));
    for (const auto& s : ds.val_outliers) CHECK(sum(s.mask->values()) >= 1);
  }
  SUBCASE("cartoon points") {
    auto spec = small(SynthKind::cartoon2d);
    spec.n_train = 2000;
    const auto ds = generate_synthetic(spec);
    CHECK(ds.train[0].image.shape() == Shape{1, 2});
    double m0 = 0, m1 = 0;
    for (const auto& s : ds.train) {
      m0 += s.image[0];
      m1 += s.image[1];
    }
    m0 /= 2000;
    m1 /= 2000;
    // Three standard errors plus the 8-bit quantization step.
    const double tol = 3 * 0.05 / std::sqrt(2000.0) + 0.5 / 255;
    CHECK(std::abs(m0 - 0.6) <= tol);
    CHECK(std::abs(m1 - 0.6) <= tol);
    for (const auto& s : ds.test)
      if (s.label == 1) CHECK(sum(s.mask->values()) == 1);
  }
}

TEST_CASE("manifest round trip") {
  const auto dir = scratch("roundtrip");
  const auto ds = generate_synthetic(small(SynthKind::spatter_noise));
  write_dataset(ds, dir);
  const auto back = load_manifest(dir / "manifest.json");
  CHECK(back.class_name == ds.class_name);
  REQUIRE(back.train.size() == ds.train.size());
  REQUIRE(back.test.size() == ds.test.size());
  for (std::size_t i = 0; i < ds.test.size(); ++i) {
    CHECK(back.test[i].id == ds.test[i].id);
    CHECK(back.test[i].image == ds.test[i].image);
    CHECK(back.test[i].label == ds.test[i].label);
    CHECK(back.test[i].mask.has_value() == ds.test[i].mask.has_value());
    if (ds.test[i].mask) CHECK(*back.test[i].mask == *ds.test[i].mask);
  }
}

TEST_CASE("manifest errors") {
  const auto dir = scratch("errors");
  write_dataset(generate_synthetic(small(SynthKind::stripe)), dir);
  nlohmann::json j;
  {
    std::ifstream is(dir / "manifest.json");
    j = nlohmann::json::parse(is);
  }
  auto write_variant = [&](const nlohmann::json& v) {
    std::ofstream os(dir / "variant.json");
    os << v.dump();
  };
  SUBCASE("no test outliers") {
    auto v = j;
    nlohmann::json inl = nlohmann::json::array();
    for (const auto& e : v["test"])
      if (e["label"] == 0) inl.push_back(e);
    v["test"] = inl;
    write_variant(v);
    try {
      load_manifest(dir / "variant.json");
      FAIL("expected an error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("test split requires outliers") != std::string::npos);
    }
  }
  SUBCASE("missing image names the sample") {
    auto v = j;
    v["train"][0]["image"] = "images/nope.pgm";
    write_variant(v);
    try {
      load_manifest(dir / "variant.json");
      FAIL("expected an error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("sample nope") != std::string::npos);
    }
  }
  SUBCASE("mask of the wrong shape") {
    write_pgm(dir / "small_mask.pgm", GrayImage{2, 2, {255, 0, 0, 0}});
    auto v = j;
    for (auto& e : v["test"])
      if (e["label"] == 1) e["mask"] = "small_mask.pgm";
    write_variant(v);
    CHECK_THROWS_AS(load_manifest(dir / "variant.json"), DataError);
  }
  SUBCASE("malformed document") {
    std::ofstream(dir / "variant.json") << "{not json";
    CHECK_THROWS_AS(load_manifest(dir / "variant.json"), DataError);
  }
}

TEST_CASE("graymap normalization") {
  const auto dir = scratch("pgm");
  write_pgm(dir / "a.pgm", GrayImage{1, 3, {0, 128, 255}});
  const auto g = read_pgm(dir / "a.pgm");
  const Tensor t = from_gray(g);
  CHECK(t[2] == 1.0);
  CHECK(t[0] == 0.0);
  const Tensor m = mask_from_gray(GrayImage{1, 3, {0, 127, 128}});
  CHECK(m[1] == 0.0);
  CHECK(m[2] == 1.0);
  std::ofstream(dir / "comment.pgm", std::ios::binary) << "P5\n# made by hand\n2 1\n255\n" << char(10) << char(20);
  CHECK(read_pgm(dir / "comment.pgm").pixels == std::vector<std::uint8_t>{10, 20});
  std::ofstream(dir / "p2.pgm") << "P2\n1 1\n255\n0\n";
  CHECK_THROWS_AS(read_pgm(dir / "p2.pgm"), DataError);
}

TEST_CASE("heatmap files") {
  const auto dir = scratch("heatmap");
  CHECK(render_heatmap(Tensor(Shape{2, 2}, 0.0)).pixels == std::vector<std::uint8_t>{0, 0, 0, 0});
  CHECK(render_heatmap(Tensor(Shape{1, 2}, std::vector<double>{0, 3.5})).pixels == std::vector<std::uint8_t>{0, 255});
  CHECK(render_heatmap(Tensor(Shape{1, 2}, std::vector<double>{-4, 2})).pixels == std::vector<std::uint8_t>{0, 255});
  const Tensor v(Shape{2, 3}, std::vector<double>{0.1, -2, 3e-7, 1.0 / 3, 5, 0});
  write_heatmap(Heatmap{v, "kde", "x"}, dir / "h");
  const Tensor back = read_heatmap(dir / "h.hm");
  CHECK(back.shape() == v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(back[i] == narrow_to_f32(v[i]));
  write_heatmap(Heatmap{back, "kde", "x"}, dir / "h2");
  CHECK(slurp(dir / "h.hm") == slurp(dir / "h2.hm"));
  CHECK(slurp(dir / "h.hm").rfind("HM1 2 3\n", 0) == 0);
  Tensor bad = v;
  bad[0] = std::nan("");
  CHECK_THROWS_AS(write_heatmap(Heatmap{bad, "kde", "x"}, dir / "bad"), NumericalError);
}

TEST_CASE("synth spec validation") {
  auto s = small(SynthKind::brightness);
  s.brightness_offset = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = small(SynthKind::stripe);
  s.stripe_width = 17;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK_THROWS_AS(parse_synth_kind("zigzag"), ConfigError);
  CHECK(parse_synth_kind("dotted_line") == SynthKind::dotted_line);
}
