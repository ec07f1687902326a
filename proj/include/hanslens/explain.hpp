#pragma once

#include "hanslens/detectors.hpp"
#include "hanslens/lrp.hpp"

namespace hanslens {

// Relevance of o(x) propagated back to the input features through the
// detector's neural equivalent.
//
// For a bag, the top average pool hands each member a share of o_bag
// proportional to the positive part of its standardized score (the
// standardization offset is absorbed); when no member is positive the shares
// fall back to the plain proportional pooling rule. Each member then
// propagates its share through its own stack.
Heatmap explain(const Detector& detector, const Tensor& x, const LrpConfig& config = {});

// Member relevance shares at the top pool of a bag, given standardized scores.
std::array<double, 3> bag_relevance_shares(const std::array<double, 3>& standardized,
                                           double bag_score, const LrpConfig& config = {});

}  // namespace hanslens
