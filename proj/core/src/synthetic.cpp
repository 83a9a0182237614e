#include "grbb/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "grbb/rng.hpp"

namespace grbb {

std::string to_string(SyntheticShape shape) {
  return shape == SyntheticShape::two_moons ? "two_moons" : "concentric_rings";
}

SyntheticShape parse_synthetic_shape(const std::string& name) {
  if (name == "two_moons" || name == "moons") return SyntheticShape::two_moons;
  if (name == "concentric_rings" || name == "rings") return SyntheticShape::concentric_rings;
  throw std::invalid_argument("unknown synthetic shape '" + name + "' (expected two_moons or concentric_rings)");
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.points_per_class == 0) throw std::invalid_argument("need at least one point per class");
  if (spec.labeled_per_class > spec.points_per_class) {
    throw std::invalid_argument("labeled_per_class exceeds points_per_class");
  }
  if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise)) throw std::invalid_argument("noise must be nonnegative");

  Rng rng(spec.seed);
  const std::size_t total = 2 * spec.points_per_class;
  Matrix raw(static_cast<Eigen::Index>(total), 2);
  std::vector<double> raw_truth(total);
  for (std::size_t i = 0; i < total; ++i) {
    const bool second = i >= spec.points_per_class;
    double x = 0.0;
    double y = 0.0;
    if (spec.shape == SyntheticShape::two_moons) {
      const double t = std::numbers::pi * rng.uniform();
      x = second ? 1.0 - std::cos(t) : std::cos(t);
      y = second ? 0.5 - std::sin(t) : std::sin(t);
    } else {
      const double angle = 2.0 * std::numbers::pi * rng.uniform();
      const double radius = second ? 2.0 : 1.0;
      x = radius * std::cos(angle);
      y = radius * std::sin(angle);
    }
    if (spec.noise > 0.0) {
      x += rng.normal(0.0, spec.noise);
      y += rng.normal(0.0, spec.noise);
    }
    raw(static_cast<Eigen::Index>(i), 0) = x;
    raw(static_cast<Eigen::Index>(i), 1) = y;
    raw_truth[i] = second ? 1.0 : 0.0;
  }

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));

  SyntheticData data;
  data.points.resize(static_cast<Eigen::Index>(total), 2);
  data.truth.resize(total);
  data.labeled.assign(total, false);
  for (std::size_t i = 0; i < total; ++i) {
    data.points.row(static_cast<Eigen::Index>(i)) = raw.row(static_cast<Eigen::Index>(order[i]));
    data.truth[i] = raw_truth[order[i]];
  }

  for (const double cls : {0.0, 1.0}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < total; ++i) {
      if (data.truth[i] == cls) members.push_back(i);
    }
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t k = 0; k < spec.labeled_per_class; ++k) data.labeled[members[k]] = true;
  }
  return data;
}

namespace {

std::vector<double> resolve_costs(const std::vector<double>& costs, const SyntheticData& data) {
  return costs.empty() ? std::vector<double>(static_cast<std::size_t>(data.points.cols()), 1.0) : costs;
}

}  // namespace

Dataset training_dataset(const SyntheticData& data, const std::vector<double>& costs) {
  std::vector<std::optional<double>> labels(data.truth.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (data.labeled[i]) labels[i] = data.truth[i];
  }
  return Dataset::from_rows(data.points, labels, resolve_costs(costs, data));
}

Dataset ground_truth_dataset(const SyntheticData& data, const std::vector<double>& costs) {
  std::vector<std::optional<double>> labels(data.truth.begin(), data.truth.end());
  return Dataset::from_rows(data.points, labels, resolve_costs(costs, data));
}

void write_synthetic(const SyntheticData& data, const std::string& features_path, const std::string& truth_path) {
  save_dataset(training_dataset(data), features_path);
  save_dataset(ground_truth_dataset(data), truth_path);
}

}  // namespace grbb
