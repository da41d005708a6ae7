#pragma once

#include <cstddef>
#include <cstdint>

#include <json.hpp>

#include "driftqa/data.hpp"

namespace driftqa {

// Class geometry inside one latent group.
struct GroupShape {
  double class_offset = 2.0;  // distance of each class mean from the origin
  double spread = 1.0;        // per-axis std of the class-conditional Gaussians
  double label_noise = 0.0;   // probability a label is replaced by a different class
};

/**
 * Two latent groups, each holding one Gaussian cluster per class.
 *
 * Feature 0 is the biasing feature: its mean is -group_offset in the easy
 * group and +group_offset in the hard group, so "x0>0" separates them
 * approximately. Class means sit on a circle in the (x1, x2) plane (on the
 * x1 axis for two classes). Remaining features carry a +/- aux_offset group
 * shift and unit noise.
 */
struct SyntheticSpec {
  std::size_t points = 16000;
  std::size_t dim = 6;
  int classes = 2;
  double hard_fraction = 0.5;
  double group_offset = 2.0;
  double aux_offset = 1.0;
  GroupShape easy{2.0, 1.0, 0.0};
  GroupShape hard{0.5, 0.5, 0.08};
  std::uint64_t seed = 0;
};

Dataset generate_synthetic(const SyntheticSpec& spec);

nlohmann::json to_json(const SyntheticSpec& spec);
// Missing keys keep their defaults.
SyntheticSpec synthetic_from_json(const nlohmann::json& j);

}  // namespace driftqa
