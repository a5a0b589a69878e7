#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "malclass/labels.hpp"
#include "malclass/report.hpp"

namespace malclass {

/// One API the generator may emit. Argument patterns are either literal text, a
/// '|'-separated list of alternatives (one alternative index is drawn per call and shared by
/// all arguments of that call), or contain the placeholders {hex} (a 32-bit address) and
/// {int} (a small decimal value).
struct ApiTemplate {
  std::string name;
  std::string category;
  std::vector<std::pair<std::string, std::string>> arguments;  ///< (argument name, pattern)
  double weight = 1.0;
};

struct ClassProfile {
  ClassLabel label = ClassLabel::Benign;
  std::vector<ApiTemplate> api_pool;
  std::size_t min_calls = 40;
  std::size_t max_calls = 120;
  double noise_ratio = 0.3;  ///< fraction of calls drawn from the shared background pool
};

struct CorpusSpec {
  std::vector<ClassProfile> profiles;  ///< one per class
  std::vector<ApiTemplate> background_pool;
  std::array<std::size_t, kNumClasses> samples_per_class{};
  std::uint64_t seed = 7;

  void validate() const;  // throws Error(InvalidSpec)
  std::size_t total_samples() const;
};

struct SyntheticSample {
  std::string sample_id;
  std::string json;
  ClassLabel label = ClassLabel::Benign;
};

/// Cuckoo-shaped reports, ordered by class then sample ordinal. Sample i draws from its own
/// generator seeded with derive_seed(spec.seed, i), so output does not depend on threading.
std::vector<SyntheticSample> generate_corpus(const CorpusSpec& spec);

enum class CorpusScale { Tiny, Desk };

/// Throws Error(ConfigError) for names other than "tiny" and "desk".
CorpusScale parse_scale(std::string_view name);

/// tiny: 8 x 20 samples; desk: 8 x 100 samples. Both use noise ratio 0.3.
CorpusSpec default_spec(CorpusScale scale, std::uint64_t seed = 7);

/// Writes reports/<sample_id>.json under `dir` plus manifest.csv; returns the manifest path.
std::filesystem::path write_corpus(const std::filesystem::path& dir, const std::vector<SyntheticSample>& samples);

}  // namespace malclass
