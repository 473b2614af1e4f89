#include "upcs/persona.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "upcs/errors.hpp"

namespace upcs {

using nlohmann::json;

namespace {

constexpr std::string_view kSchema = "upcs-persona/1";

constexpr std::array<std::string_view, 8> kDimensionNames = {
    "personality",        "experience", "hobbies", "special_skills",
    "living_environment", "habits",     "cultural_background",
    "external_features",
};

constexpr std::array<std::string_view, 4> kStageNames = {
    "initial", "incomplete_debiased", "debiased", "unbiased"};

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

}  // namespace

std::string_view dimension_name(DimensionKey key) {
  return kDimensionNames[static_cast<std::size_t>(key)];
}

std::optional<DimensionKey> dimension_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kDimensionNames.size(); ++i) {
    if (kDimensionNames[i] == name) return kAllDimensions[i];
  }
  return std::nullopt;
}

std::string_view stage_name(SetStage stage) {
  return kStageNames[static_cast<std::size_t>(stage)];
}

std::optional<SetStage> stage_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    if (kStageNames[i] == name) return static_cast<SetStage>(i);
  }
  return std::nullopt;
}

std::set<DimensionKey> missing_dimensions(const Persona& p) {
  std::set<DimensionKey> missing;
  for (DimensionKey key : kAllDimensions) {
    if (!p.has(key)) missing.insert(key);
  }
  return missing;
}

std::string persona_text(const Persona& p) {
  std::string out;
  for (DimensionKey key : kAllDimensions) {
    auto it = p.dimensions.find(key);
    if (it == p.dimensions.end()) continue;
    if (!out.empty()) out += '\n';
    out += dimension_name(key);
    out += ": ";
    if (const auto* text = std::get_if<TextDimension>(&it->second)) {
      out += text->text;
      if (!text->attributes.empty()) {
        out += " (";
        for (std::size_t i = 0; i < text->attributes.size(); ++i) {
          if (i) out += ", ";
          out += text->attributes[i];
        }
        out += ')';
      }
    } else {
      const auto& ext = std::get<ExternalFeatures>(it->second);
      std::string parts;
      auto add = [&parts](const std::string& piece) {
        if (!parts.empty()) parts += "; ";
        parts += piece;
      };
      if (ext.age) add("age " + std::to_string(*ext.age));
      if (ext.race) add("race " + *ext.race);
      if (ext.gender) add("gender " + *ext.gender);
      if (ext.free_text) add(*ext.free_text);
      out += parts;
    }
  }
  return out;
}

void validate_persona(const Persona& p) {
  std::vector<std::string> violations;
  if (trim(p.id).empty()) violations.push_back("persona id is empty");
  for (const auto& [key, value] : p.dimensions) {
    const std::string name(dimension_name(key));
    if (key == DimensionKey::external_features) {
      const auto* ext = std::get_if<ExternalFeatures>(&value);
      if (!ext) {
        violations.push_back(p.id + ": " + name + " must hold structured fields");
        continue;
      }
      if (ext->age && (*ext->age < 0 || *ext->age > 130)) {
        violations.push_back(p.id + ": age " + std::to_string(*ext->age) +
                             " outside [0, 130]");
      }
      if (!ext->age && !ext->race && !ext->gender && !ext->free_text) {
        violations.push_back(p.id + ": " + name + " present but has no fields");
      }
    } else {
      const auto* text = std::get_if<TextDimension>(&value);
      if (!text) {
        violations.push_back(p.id + ": " + name + " must hold text");
        continue;
      }
      if (trim(text->text).empty()) {
        violations.push_back(p.id + ": " + name + " text is empty");
      }
    }
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

void validate_set(const PersonaSet& set) {
  std::set<std::string> ids;
  for (const Persona& p : set.personas) {
    validate_persona(p);
    if (!ids.insert(p.id).second) {
      throw IntegrityError("duplicate persona id: " + p.id);
    }
  }
}

namespace {

json dimension_to_json(DimensionKey key, const DimensionValue& value) {
  if (key == DimensionKey::external_features) {
    const auto& ext = std::get<ExternalFeatures>(value);
    json j = json::object();
    if (ext.age) j["age"] = *ext.age;
    if (ext.race) j["race"] = *ext.race;
    if (ext.gender) j["gender"] = *ext.gender;
    if (ext.free_text) j["free_text"] = *ext.free_text;
    return j;
  }
  const auto& text = std::get<TextDimension>(value);
  json j = json::object();
  j["text"] = text.text;
  if (!text.attributes.empty()) j["attributes"] = text.attributes;
  return j;
}

DimensionValue dimension_from_json(DimensionKey key, const json& j) {
  if (!j.is_object()) throw ParseError("dimension value must be an object");
  if (key == DimensionKey::external_features) {
    ExternalFeatures ext;
    if (j.contains("age")) ext.age = j.at("age").get<int>();
    if (j.contains("race")) ext.race = j.at("race").get<std::string>();
    if (j.contains("gender")) ext.gender = j.at("gender").get<std::string>();
    if (j.contains("free_text")) ext.free_text = j.at("free_text").get<std::string>();
    return ext;
  }
  TextDimension text;
  text.text = j.at("text").get<std::string>();
  if (j.contains("attributes")) {
    text.attributes = j.at("attributes").get<std::vector<std::string>>();
  }
  return text;
}

json persona_to_json(const Persona& p) {
  json dims = json::object();
  for (const auto& [key, value] : p.dimensions) {
    dims[std::string(dimension_name(key))] = dimension_to_json(key, value);
  }
  return json{{"id", p.id}, {"dimensions", dims}, {"provenance", p.provenance}};
}

Persona persona_from_json(const json& j) {
  Persona p;
  p.id = j.at("id").get<std::string>();
  for (const auto& [name, value] : j.at("dimensions").items()) {
    auto key = dimension_from_name(name);
    if (!key) throw ParseError("unknown dimension key: " + name);
    p.dimensions.emplace(*key, dimension_from_json(*key, value));
  }
  if (j.contains("provenance")) {
    p.provenance = j.at("provenance").get<std::vector<std::string>>();
  }
  return p;
}

}  // namespace

std::string serialize_set(const PersonaSet& set) {
  std::string out;
  out += json{{"schema", kSchema}, {"stage", stage_name(set.stage)}}.dump();
  out += '\n';
  for (const Persona& p : set.personas) {
    out += persona_to_json(p).dump();
    out += '\n';
  }
  return out;
}

PersonaSet parse_set(std::string_view content) {
  PersonaSet set;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!header_seen) {
      if (!j.is_object() || j.value("schema", "") != kSchema) {
        throw ParseError("missing or unsupported header schema", line_no);
      }
      auto stage = stage_from_name(j.value("stage", ""));
      if (!stage) throw ParseError("unknown stage tag", line_no);
      set.stage = *stage;
      header_seen = true;
      continue;
    }
    try {
      set.personas.push_back(persona_from_json(j));
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad persona record: ") + e.what(), line_no);
    } catch (const ParseError& e) {
      throw e.line() ? e : ParseError(e.what(), line_no);
    }
  }
  if (!header_seen) throw ParseError("empty file: header line required", 1);
  validate_set(set);
  return set;
}

PersonaSet load_set(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_set(buffer.str());
}

void save_set(const PersonaSet& set, const std::filesystem::path& path) {
  validate_set(set);
  const std::string payload = serialize_set(set);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out.good()) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace upcs
