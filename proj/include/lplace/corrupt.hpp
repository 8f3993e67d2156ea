#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lplace/ingest.hpp"

namespace lplace {

enum class CorruptionKind { kMotionBlur, kCrosstalk, kIncompleteEcho, kFog };

/// One corruption step. `param` is the per-axis jitter sigma (m) for motion
/// blur, the replaced fraction for crosstalk, the drop probability for
/// incomplete echo and the attenuation per meter for fog.
struct Corruption {
  CorruptionKind kind = CorruptionKind::kMotionBlur;
  double param = 0.0;

  static double default_param(CorruptionKind kind);
};

struct CorruptionSpec {
  std::vector<Corruption> steps;  // applied in order
  std::uint64_t seed = 0;
  ClassId noise_class = 5;     // label of crosstalk points
  double sensor_range = 100.0;  // crosstalk points fall inside this sphere

  bool empty() const { return steps.empty(); }
  void validate() const;
};

/// Applies every step in order. Each point draws from a stream keyed by
/// (seed, step, frame_id, point index), so output depends only on the inputs.
/// Fog and crosstalk measure range from the ego origin.
LabeledCloud apply(const LabeledCloud& cloud, const CorruptionSpec& spec);

/// Parses "kind[=param],...[,seed=N]". A kind without a value takes its
/// default. Kinds: motion_blur, crosstalk, incomplete_echo, fog.
CorruptionSpec parse_corruption(const std::string& text);

std::string to_string(CorruptionKind kind);
CorruptionKind corruption_kind_from_string(const std::string& name);
/// Inverse of parse_corruption.
std::string format_corruption(const CorruptionSpec& spec);

}  // namespace lplace
