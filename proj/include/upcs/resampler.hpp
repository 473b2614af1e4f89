#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "upcs/persona.hpp"
#include "upcs/rng.hpp"

namespace upcs {

struct RangeBucket {
  int lo = 0;
  int hi = 0;
  double weight = 0.0;
};

// Sampling table for one attribute: either a weighted categorical
// vocabulary or weighted integer-range buckets (bucket by weight, then
// uniform integer within the bucket).
struct AttributeTable {
  enum class Type : std::uint8_t { categorical, range };
  Type type = Type::categorical;
  std::vector<std::pair<std::string, double>> values;  // sorted by name
  std::vector<RangeBucket> buckets;
};

// Per-dimension attribute tables with sampling weights. The experience
// dimension is structurally excluded: a spec carrying a table for it is
// invalid.
struct DistributionSpec {
  std::string version;
  std::string source;  // citation for where the weights come from
  std::map<DimensionKey, std::map<std::string, AttributeTable>> dimensions;
};

DistributionSpec load_distribution(const std::filesystem::path& path);
DistributionSpec parse_distribution(const nlohmann::json& j);
nlohmann::json distribution_to_json(const DistributionSpec& spec);
void validate_distribution(const DistributionSpec& spec);

using SampledValue = std::variant<std::string, int>;

// One draw from the named attribute table. Consumes the rng stream
// deterministically: categorical values are walked in sorted-name
// order, range buckets in file order.
SampledValue sample_attribute(const DistributionSpec& spec, DimensionKey dimension,
                              const std::string& attribute, rng::Stream& stream);

struct RewrittenAttribute {
  std::string persona_id;
  DimensionKey dimension = DimensionKey::personality;
  std::string attribute;
  std::string value;  // string form; ages rendered as decimal
};

struct ResampleReport {
  std::uint64_t seed = 0;
  // "dimension.attribute" -> value -> count over all personas.
  std::map<std::string, std::map<std::string, std::size_t>> frequencies;
  std::vector<RewrittenAttribute> rewritten;

  nlohmann::json to_json() const;
};

// Builds the unbiased set: same personas, same ids, same order, with
// every spec-covered attribute of every present dimension rewritten by
// sampling. Experience is byte-identical to the input; text dimensions
// keep their text and get fresh attribute labels ("name=value");
// external_features structured fields are replaced, free text kept.
// Personas are visited in order, dimensions in key order, attributes in
// sorted-name order, all on one rng stream, so the output is a pure
// function of (set, spec, seed).
std::pair<PersonaSet, ResampleReport> resample_set(const PersonaSet& set,
                                                   const DistributionSpec& spec,
                                                   std::uint64_t seed);

// Identical contract with a caller-supplied spec standing in for the
// bundled default.
std::pair<PersonaSet, ResampleReport> resample_with_custom(const PersonaSet& set,
                                                           const DistributionSpec& custom_spec,
                                                           std::uint64_t seed);

}  // namespace upcs
