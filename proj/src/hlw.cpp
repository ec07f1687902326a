#include "hanslens/hlw.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "hanslens/error.hpp"

namespace hanslens {

double narrow_to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void write_f32_le(std::ostream& os, std::span<const double> values) {
  std::vector<char> buf(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
    for (int b = 0; b < 4; ++b) buf[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

std::vector<double> read_f32_le(std::istream& is, std::size_t count) {
  std::vector<char> buf(count * 4);
  is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(is.gcount()) != buf.size())
    throw DataError("truncated float32 payload: expected " + std::to_string(count) + " values");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b)
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i * 4 + b])) << (8 * b);
    out[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return out;
}

namespace {

std::string format_real(double v) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

}  // namespace

void write_hlw(std::ostream& os, std::span<const Layer> layers) {
  os << "HLW1\n";
  for (const auto& layer : layers) {
    if (const auto* l = std::get_if<Linear>(&layer)) {
      os << "linear " << l->out() << ' ' << l->in() << ' ' << (l->bias ? 1 : 0) << '\n';
    } else if (std::holds_alternative<Relu>(layer)) {
      os << "relu\n";
    } else if (const auto* l = std::get_if<SquaredDistance>(&layer)) {
      os << "sqdist " << l->count() << ' ' << l->in() << '\n';
    } else if (const auto* l = std::get_if<NegLogSumExp>(&layer)) {
      os << "neglse " << format_real(l->gamma) << '\n';
    } else if (const auto* l = std::get_if<AveragePool>(&layer)) {
      os << "avgpool " << l->size << '\n';
    }
  }
  os << '\n';
  for (const auto& layer : layers) {
    if (const auto* l = std::get_if<Linear>(&layer)) {
      write_f32_le(os, l->weights.values());
      if (l->bias) write_f32_le(os, l->bias->values());
    } else if (const auto* l = std::get_if<SquaredDistance>(&layer)) {
      write_f32_le(os, l->templates.values());
    }
  }
}

std::vector<Layer> read_hlw(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "HLW1") throw DataError("not an HLW1 file (bad magic)");

  struct Decl {
    std::string kind;
    std::size_t a = 0, b = 0;
    bool bias = false;
    double gamma = 0.0;
  };
  std::vector<Decl> decls;
  for (;;) {
    if (!std::getline(is, line)) throw DataError("HLW1 header is not terminated by a blank line");
    if (line.empty()) break;
    std::istringstream ls(line);
    Decl d;
    ls >> d.kind;
    bool ok = true;
    if (d.kind == "linear") {
      int bias = 0;
      ok = static_cast<bool>(ls >> d.a >> d.b >> bias) && (bias == 0 || bias == 1);
      d.bias = bias == 1;
    } else if (d.kind == "sqdist") {
      ok = static_cast<bool>(ls >> d.a >> d.b);
    } else if (d.kind == "neglse") {
      ok = static_cast<bool>(ls >> d.gamma);
    } else if (d.kind == "avgpool") {
      ok = static_cast<bool>(ls >> d.a);
    } else if (d.kind != "relu") {
      throw DataError("HLW1: unknown layer kind '" + d.kind + "'");
    }
    std::string rest;
    if (!ok || (ls >> rest)) throw DataError("HLW1: malformed layer line '" + line + "'");
    decls.push_back(d);
  }

  std::vector<Layer> layers;
  layers.reserve(decls.size());
  for (const auto& d : decls) {
    if (d.kind == "linear") {
      if (d.a == 0 || d.b == 0) throw DataError("HLW1: linear extents must be positive");
      Linear l{Tensor({d.a, d.b}, read_f32_le(is, d.a * d.b)), std::nullopt};
      if (d.bias) l.bias = Tensor({d.a}, read_f32_le(is, d.a));
      layers.emplace_back(std::move(l));
    } else if (d.kind == "relu") {
      layers.emplace_back(Relu{});
    } else if (d.kind == "sqdist") {
      if (d.a == 0 || d.b == 0) throw DataError("HLW1: sqdist extents must be positive");
      layers.emplace_back(SquaredDistance{Tensor({d.a, d.b}, read_f32_le(is, d.a * d.b))});
    } else if (d.kind == "neglse") {
      if (!(d.gamma > 0.0)) throw DataError("HLW1: neglse stiffness must be positive");
      layers.emplace_back(NegLogSumExp{d.gamma});
    } else {
      if (d.a == 0) throw DataError("HLW1: avgpool size must be positive");
      layers.emplace_back(AveragePool{d.a});
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) throw DataError("HLW1: trailing bytes after payload");
  return layers;
}

void save_hlw(const std::filesystem::path& path, std::span<const Layer> layers) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  write_hlw(os, layers);
  if (!os) throw DataError("failed writing " + path.string());
}

std::vector<Layer> load_hlw(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open weight file " + path.string());
  try {
    return read_hlw(is);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace hanslens
