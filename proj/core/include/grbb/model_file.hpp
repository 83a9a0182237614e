#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grbb/boosting.hpp"

namespace grbb {

inline constexpr int kModelFormatVersion = 1;

/// Everything needed to reproduce a trained model's predictions and to
/// check it against the data it was trained on.
struct ModelFile {
  Ensemble model;
  TrainConfig config;
  std::vector<double> feature_costs;
  std::uint64_t training_fingerprint = 0;
  int version = kModelFormatVersion;
};

/// Versioned JSON text. Doubles are written in shortest round-trip form, so
/// a saved model predicts bit-identically after loading.
std::string serialize_model(const ModelFile& file);
ModelFile deserialize_model(const std::string& text);

void save_model(const ModelFile& file, const std::string& path);
ModelFile load_model(const std::string& path);

std::string fingerprint_hex(std::uint64_t fingerprint);

}  // namespace grbb
