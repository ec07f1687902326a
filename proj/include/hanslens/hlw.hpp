#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "hanslens/neural.hpp"

namespace hanslens {

// "HLW1" layer-stack weight files: an ASCII header (magic line, one line per
// layer, blank line) followed by little-endian float32 payloads in layer order.
// Values are narrowed to float32 on write and widened to double on read.

void write_hlw(std::ostream& os, std::span<const Layer> layers);
std::vector<Layer> read_hlw(std::istream& is);

void save_hlw(const std::filesystem::path& path, std::span<const Layer> layers);
std::vector<Layer> load_hlw(const std::filesystem::path& path);

// Little-endian float32 helpers shared with the heatmap sidecar.
void write_f32_le(std::ostream& os, std::span<const double> values);
std::vector<double> read_f32_le(std::istream& is, std::size_t count);

// What a value looks like after a float32 round trip.
double narrow_to_f32(double v);

}  // namespace hanslens
