#include "upcs/resampler.hpp"

#include <algorithm>
#include <fstream>

#include "upcs/errors.hpp"

namespace upcs {

using nlohmann::json;

namespace {

constexpr std::string_view kSchemaField = "upcs-distribution/1";

double weight_sum(const AttributeTable& table) {
  double sum = 0.0;
  if (table.type == AttributeTable::Type::categorical) {
    for (const auto& [value, weight] : table.values) sum += weight;
  } else {
    for (const auto& bucket : table.buckets) sum += bucket.weight;
  }
  return sum;
}

}  // namespace

void validate_distribution(const DistributionSpec& spec) {
  std::vector<std::string> violations;
  if (spec.dimensions.count(DimensionKey::experience)) {
    violations.push_back("experience must not carry a sampling table");
  }
  for (const auto& [dim, attributes] : spec.dimensions) {
    const std::string dim_name(dimension_name(dim));
    if (attributes.empty()) {
      violations.push_back(dim_name + ": no attributes");
    }
    for (const auto& [attr, table] : attributes) {
      const std::string where = dim_name + "." + attr;
      if (table.type == AttributeTable::Type::categorical) {
        if (table.values.empty()) violations.push_back(where + ": empty vocabulary");
        for (const auto& [value, weight] : table.values) {
          if (weight < 0.0) violations.push_back(where + ": negative weight for " + value);
        }
      } else {
        if (table.buckets.empty()) violations.push_back(where + ": no range buckets");
        for (const auto& bucket : table.buckets) {
          if (bucket.lo > bucket.hi) {
            violations.push_back(where + ": empty bucket [" + std::to_string(bucket.lo) +
                                 ", " + std::to_string(bucket.hi) + "]");
          }
          if (bucket.weight < 0.0) violations.push_back(where + ": negative bucket weight");
        }
      }
      if (!(weight_sum(table) > 0.0)) {
        violations.push_back(where + ": weights must have a positive sum");
      }
      if (dim == DimensionKey::external_features && attr != "age" && attr != "race" &&
          attr != "gender") {
        violations.push_back(where + ": external_features supports age, race, gender");
      }
    }
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

DistributionSpec parse_distribution(const json& j) {
  // "schema" is optional in the file format; reject only a wrong value.
  if (j.contains("schema") && j.at("schema") != kSchemaField) {
    throw ParseError("unsupported distribution schema");
  }
  DistributionSpec spec;
  spec.version = j.value("version", "");
  spec.source = j.value("source", "");
  for (const auto& [dim_name, attributes] : j.at("dimensions").items()) {
    const auto key = dimension_from_name(dim_name);
    if (!key) throw ParseError("unknown dimension: " + dim_name);
    std::map<std::string, AttributeTable> tables;
    for (const auto& [attr_name, table_json] : attributes.items()) {
      AttributeTable table;
      const std::string type = table_json.value("type", "");
      try {
        if (type == "categorical") {
          table.type = AttributeTable::Type::categorical;
          for (const auto& [value, weight] : table_json.at("values").items()) {
            table.values.emplace_back(value, weight.get<double>());
          }
          std::sort(table.values.begin(), table.values.end());
        } else if (type == "range") {
          table.type = AttributeTable::Type::range;
          for (const auto& bucket : table_json.at("buckets")) {
            table.buckets.push_back({bucket.at("lo").get<int>(),
                                     bucket.at("hi").get<int>(),
                                     bucket.at("weight").get<double>()});
          }
        } else {
          throw ParseError(dim_name + "." + attr_name +
                           ": type must be categorical or range");
        }
      } catch (const json::exception& e) {
        throw ParseError(dim_name + "." + attr_name + ": " + e.what());
      }
      tables.emplace(attr_name, std::move(table));
    }
    spec.dimensions.emplace(*key, std::move(tables));
  }
  validate_distribution(spec);
  return spec;
}

DistributionSpec load_distribution(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open distribution file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid distribution JSON: ") + e.what());
  }
  return parse_distribution(j);
}

json distribution_to_json(const DistributionSpec& spec) {
  json dims = json::object();
  for (const auto& [dim, attributes] : spec.dimensions) {
    json tables = json::object();
    for (const auto& [attr, table] : attributes) {
      if (table.type == AttributeTable::Type::categorical) {
        json values = json::object();
        for (const auto& [value, weight] : table.values) values[value] = weight;
        tables[attr] = json{{"type", "categorical"}, {"values", values}};
      } else {
        json buckets = json::array();
        for (const auto& bucket : table.buckets) {
          buckets.push_back(
              {{"lo", bucket.lo}, {"hi", bucket.hi}, {"weight", bucket.weight}});
        }
        tables[attr] = json{{"type", "range"}, {"buckets", buckets}};
      }
    }
    dims[std::string(dimension_name(dim))] = std::move(tables);
  }
  return json{{"schema", kSchemaField},
              {"version", spec.version},
              {"source", spec.source},
              {"dimensions", dims}};
}

SampledValue sample_attribute(const DistributionSpec& spec, DimensionKey dimension,
                              const std::string& attribute, rng::Stream& stream) {
  const auto dim_it = spec.dimensions.find(dimension);
  if (dim_it == spec.dimensions.end()) {
    throw ValidationError(std::string(dimension_name(dimension)) +
                          ": no tables in distribution spec");
  }
  const auto attr_it = dim_it->second.find(attribute);
  if (attr_it == dim_it->second.end()) {
    throw ValidationError(std::string(dimension_name(dimension)) + "." + attribute +
                          ": unknown attribute");
  }
  const AttributeTable& table = attr_it->second;
  const double total = weight_sum(table);
  const double draw = stream.next_unit() * total;

  if (table.type == AttributeTable::Type::categorical) {
    double cumulative = 0.0;
    for (const auto& [value, weight] : table.values) {
      cumulative += weight;
      if (draw < cumulative) return value;
    }
    return table.values.back().first;  // guard against fp edge at the top
  }
  double cumulative = 0.0;
  const RangeBucket* chosen = &table.buckets.back();
  for (const auto& bucket : table.buckets) {
    cumulative += bucket.weight;
    if (draw < cumulative) {
      chosen = &bucket;
      break;
    }
  }
  const auto span = static_cast<std::uint64_t>(chosen->hi - chosen->lo + 1);
  return chosen->lo + static_cast<int>(stream.next_below(span));
}

namespace {

std::string sampled_to_string(const SampledValue& value) {
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  return std::to_string(std::get<int>(value));
}

}  // namespace

std::pair<PersonaSet, ResampleReport> resample_set(const PersonaSet& set,
                                                   const DistributionSpec& spec,
                                                   std::uint64_t seed) {
  if (set.stage != SetStage::incomplete_debiased) {
    throw ValidationError("resample requires a set in stage incomplete_debiased, got " +
                          std::string(stage_name(set.stage)));
  }
  validate_distribution(spec);

  PersonaSet output;
  output.stage = SetStage::unbiased;
  output.personas = set.personas;
  ResampleReport report;
  report.seed = seed;

  rng::Stream stream(seed);
  const std::string provenance_tag = "resample(seed=" + std::to_string(seed) + ")";

  for (Persona& persona : output.personas) {
    persona.provenance.push_back(provenance_tag);
    for (DimensionKey key : kAllDimensions) {
      if (key == DimensionKey::experience) continue;  // preserved exactly
      const auto dim_it = spec.dimensions.find(key);
      if (dim_it == spec.dimensions.end()) continue;
      const auto value_it = persona.dimensions.find(key);
      if (value_it == persona.dimensions.end()) continue;  // absent stays absent

      if (key == DimensionKey::external_features) {
        auto& ext = std::get<ExternalFeatures>(value_it->second);
        for (const auto& [attr, table] : dim_it->second) {
          const SampledValue sampled = sample_attribute(spec, key, attr, stream);
          const std::string rendered = sampled_to_string(sampled);
          if (attr == "age") {
            ext.age = std::get<int>(sampled);
          } else if (attr == "race") {
            ext.race = rendered;
          } else {
            ext.gender = rendered;
          }
          const std::string table_key = std::string(dimension_name(key)) + "." + attr;
          ++report.frequencies[table_key][rendered];
          report.rewritten.push_back({persona.id, key, attr, rendered});
        }
        continue;
      }

      auto& text = std::get<TextDimension>(value_it->second);
      text.attributes.clear();
      for (const auto& [attr, table] : dim_it->second) {
        const SampledValue sampled = sample_attribute(spec, key, attr, stream);
        const std::string rendered = sampled_to_string(sampled);
        text.attributes.push_back(attr + "=" + rendered);
        const std::string table_key = std::string(dimension_name(key)) + "." + attr;
        ++report.frequencies[table_key][rendered];
        report.rewritten.push_back({persona.id, key, attr, rendered});
      }
    }
  }
  return {std::move(output), std::move(report)};
}

std::pair<PersonaSet, ResampleReport> resample_with_custom(const PersonaSet& set,
                                                           const DistributionSpec& custom_spec,
                                                           std::uint64_t seed) {
  return resample_set(set, custom_spec, seed);
}

json ResampleReport::to_json() const {
  json freq = json::object();
  for (const auto& [table_key, counts] : frequencies) {
    json values = json::object();
    for (const auto& [value, count] : counts) values[value] = count;
    freq[table_key] = std::move(values);
  }
  json rewrites = json::array();
  for (const auto& r : rewritten) {
    rewrites.push_back({{"persona_id", r.persona_id},
                        {"dimension", dimension_name(r.dimension)},
                        {"attribute", r.attribute},
                        {"value", r.value}});
  }
  return json{{"schema", "upcs-resample-report/1"},
              {"seed", seed},
              {"frequencies", freq},
              {"rewritten", rewrites}};
}

}  // namespace upcs
