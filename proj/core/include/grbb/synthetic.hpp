#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "grbb/dataset.hpp"

namespace grbb {

enum class SyntheticShape { two_moons, concentric_rings };

std::string to_string(SyntheticShape shape);
SyntheticShape parse_synthetic_shape(const std::string& name);

struct SyntheticSpec {
  std::size_t points_per_class = 200;
  /// Standard deviation of isotropic Gaussian noise.
  double noise = 0.1;
  std::size_t labeled_per_class = 1;
  std::uint64_t seed = 1;
  SyntheticShape shape = SyntheticShape::two_moons;
};

/// Two-class, two-dimensional manifold data in file order.
struct SyntheticData {
  Matrix points;
  std::vector<double> truth;
  std::vector<bool> labeled;
};

/// Two moons: class 0 on (cos t, sin t), class 1 on (1 - cos t, 0.5 - sin t),
/// t uniform on [0, pi]. Rings: class 0 at radius 1, class 1 at radius 2,
/// angle uniform. Rows are shuffled, then `labeled_per_class` rows of each
/// class are chosen at random to keep their label.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Training view: chosen rows labeled, the rest unlabeled.
Dataset training_dataset(const SyntheticData& data, const std::vector<double>& costs = {});

/// Every row labeled with its ground truth.
Dataset ground_truth_dataset(const SyntheticData& data, const std::vector<double>& costs = {});

/// Writes the training CSV and a fully labeled ground-truth CSV with the same rows.
void write_synthetic(const SyntheticData& data, const std::string& features_path, const std::string& truth_path);

}  // namespace grbb
