#pragma once

#include <filesystem>

#include "hanslens/detectors.hpp"

namespace hanslens {

// A fitted detector on disk is a directory holding `model.json` (the envelope:
// kind, class, input shape, and gamma / lambda / standardizer where relevant)
// and `model.hlw` with the layer stack. A bag stores its three members in
// subdirectories kde/, autoencoder/ and deep/, each carrying its standardizer.
void save_detector(const Detector& detector, const std::filesystem::path& dir);
Detector load_detector(const std::filesystem::path& dir);

// Kind named in a model directory's envelope without loading weights.
std::string read_detector_kind(const std::filesystem::path& dir);

}  // namespace hanslens
