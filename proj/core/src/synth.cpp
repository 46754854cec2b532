#include "oodmol/synth.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include <json.hpp>

#include "oodmol/descriptors.hpp"
#include "oodmol/error.hpp"
#include "oodmol/rng.hpp"

namespace oodmol {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorKind::BadConfig, "unknown key '" + key + "' in " + where);
  }
}

struct Piece {
  bool placeholder = false;
  std::string text;  // literal text or placeholder name
};

// Splits a template into literal runs and "({name})" groups.
std::vector<Piece> split_template(const std::string& tmpl) {
  std::vector<Piece> pieces;
  std::string literal;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const char c = tmpl[i];
    if (c == '}') {
      throw Error(ErrorKind::TemplateParseError, "stray '}' at offset " + std::to_string(i) + " in " + tmpl);
    }
    if (c != '{') {
      literal.push_back(c);
      ++i;
      continue;
    }
    const std::size_t close = tmpl.find('}', i);
    if (close == std::string::npos) {
      throw Error(ErrorKind::TemplateParseError, "unclosed '{' at offset " + std::to_string(i) + " in " + tmpl);
    }
    const std::string name = tmpl.substr(i + 1, close - i - 1);
    if (name.empty() || name.find('{') != std::string::npos) {
      throw Error(ErrorKind::TemplateParseError, "bad placeholder at offset " + std::to_string(i) + " in " + tmpl);
    }
    if (literal.empty() || literal.back() != '(' || close + 1 >= tmpl.size() || tmpl[close + 1] != ')') {
      throw Error(ErrorKind::TemplateParseError,
                  "placeholder {" + name + "} must be wrapped in parentheses in " + tmpl);
    }
    literal.pop_back();
    if (!literal.empty()) pieces.push_back({false, literal});
    literal.clear();
    pieces.push_back({true, name});
    i = close + 2;
  }
  if (!literal.empty()) pieces.push_back({false, literal});
  return pieces;
}

}  // namespace

std::vector<std::string> template_placeholders(const std::string& tmpl) {
  std::vector<std::string> names;
  for (const Piece& p : split_template(tmpl)) {
    if (p.placeholder) names.push_back(p.text);
  }
  return names;
}

std::string expand_template(const std::string& tmpl, const std::vector<std::string>& choices) {
  std::string out;
  std::size_t next = 0;
  for (const Piece& p : split_template(tmpl)) {
    if (!p.placeholder) {
      out += p.text;
      continue;
    }
    if (next >= choices.size()) {
      throw Error(ErrorKind::TemplateParseError, "too few substituents for template " + tmpl);
    }
    const std::string& sub = choices[next++];
    if (!sub.empty()) out += "(" + sub + ")";
  }
  if (next != choices.size()) {
    throw Error(ErrorKind::TemplateParseError, "too many substituents for template " + tmpl);
  }
  return out;
}

double synth_label_mean(const MolGraph& g, double family_offset, const GenConfig& config) {
  return config.coef_polarizability * mean_polarizability(g) + config.coef_rings * g.cyclomatic_number() +
         family_offset + config.coef_flex * std::sin(rotatable_ratio(g) * std::numbers::pi);
}

GenConfig GenConfig::from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::BadConfig, std::string("generator config: ") + e.what());
  }
  if (!root.is_object()) throw Error(ErrorKind::BadConfig, "generator config must be an object");
  reject_unknown(root, {"property", "unit", "noise_sigma", "coefficients", "substituents", "families"},
                 "generator config");
  GenConfig c;
  try {
    c.property = root.value("property", c.property);
    c.unit = root.value("unit", c.unit);
    c.noise_sigma = root.value("noise_sigma", c.noise_sigma);
    if (root.contains("coefficients")) {
      const json& co = root.at("coefficients");
      reject_unknown(co, {"polarizability", "rings", "flex"}, "coefficients");
      c.coef_polarizability = co.value("polarizability", c.coef_polarizability);
      c.coef_rings = co.value("rings", c.coef_rings);
      c.coef_flex = co.value("flex", c.coef_flex);
    }
    for (const auto& [name, list] : root.at("substituents").items()) {
      c.substituents[name] = list.get<std::vector<std::string>>();
      if (c.substituents[name].empty()) {
        throw Error(ErrorKind::BadConfig, "substituent set '" + name + "' is empty");
      }
    }
    for (const json& f : root.at("families")) {
      reject_unknown(f, {"name", "offset", "templates"}, "family");
      SynthFamily fam;
      fam.name = f.at("name").get<std::string>();
      fam.offset = f.at("offset").get<double>();
      for (const json& t : f.at("templates")) {
        reject_unknown(t, {"smiles", "samples"}, "template");
        fam.templates.push_back({t.at("smiles").get<std::string>(), t.at("samples").get<int>()});
      }
      c.families.push_back(std::move(fam));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::BadConfig, std::string("generator config: ") + e.what());
  }
  if (!(c.noise_sigma >= 0.0) || !std::isfinite(c.noise_sigma)) {
    throw Error(ErrorKind::BadConfig, "noise_sigma must be finite and >= 0");
  }
  for (const SynthFamily& fam : c.families) {
    for (const SynthTemplate& t : fam.templates) {
      if (t.samples < 0) throw Error(ErrorKind::BadConfig, "negative sample count in " + t.smiles);
      for (const std::string& name : template_placeholders(t.smiles)) {
        if (!c.substituents.count(name)) {
          throw Error(ErrorKind::TemplateParseError, "unknown substituent set {" + name + "} in " + t.smiles);
        }
      }
    }
  }
  return c;
}

std::string GenConfig::to_json() const {
  json root;
  root["property"] = property;
  root["unit"] = unit;
  root["noise_sigma"] = noise_sigma;
  root["coefficients"] = {{"polarizability", coef_polarizability}, {"rings", coef_rings}, {"flex", coef_flex}};
  root["substituents"] = json::object();
  for (const auto& [name, list] : substituents) root["substituents"][name] = list;
  root["families"] = json::array();
  for (const SynthFamily& fam : families) {
    json f{{"name", fam.name}, {"offset", fam.offset}, {"templates", json::array()}};
    for (const SynthTemplate& t : fam.templates) f["templates"].push_back({{"smiles", t.smiles}, {"samples", t.samples}});
    root["families"].push_back(std::move(f));
  }
  return root.dump(2);
}

Dataset synth_dataset(const GenConfig& config, std::uint64_t seed) {
  Dataset data;
  data.property = config.property;
  data.unit = config.unit;
  data.provenance.kind = "synthetic";
  data.provenance.seed = seed;
  data.provenance.generator_config = config.to_json();

  std::set<std::string> seen;
  for (std::size_t f = 0; f < config.families.size(); ++f) {
    const SynthFamily& fam = config.families[f];
    for (std::size_t t = 0; t < fam.templates.size(); ++t) {
      const SynthTemplate& tmpl = fam.templates[t];
      const std::vector<std::string> names = template_placeholders(tmpl.smiles);
      std::vector<const std::vector<std::string>*> sets;
      std::uint64_t combos = 1;
      for (const std::string& n : names) {
        const auto it = config.substituents.find(n);
        if (it == config.substituents.end()) {
          throw Error(ErrorKind::TemplateParseError, "unknown substituent set {" + n + "} in " + tmpl.smiles);
        }
        sets.push_back(&it->second);
        combos *= it->second.size();
        if (combos > 2'000'000) throw Error(ErrorKind::BadConfig, "too many combinations for " + tmpl.smiles);
      }
      std::vector<std::uint64_t> order(combos);
      for (std::uint64_t i = 0; i < combos; ++i) order[i] = i;
      Rng rng(derive_seed(seed, f, t));
      rng.shuffle(order);

      int taken = 0;
      for (std::uint64_t code : order) {
        if (taken == tmpl.samples) break;
        std::vector<std::string> choice;
        for (const auto* s : sets) {
          choice.push_back((*s)[code % s->size()]);
          code /= s->size();
        }
        const std::string smiles = expand_template(tmpl.smiles, choice);
        MolGraph g;
        try {
          g = parse_smiles(smiles);
        } catch (const Error& e) {
          throw Error(ErrorKind::TemplateParseError, "template " + tmpl.smiles + " expands to invalid '" + smiles +
                                                         "': " + e.what());
        }
        const std::string key = canonical_key(g);
        if (!seen.insert(key).second) continue;
        Molecule m;
        m.id = fam.name + "-" + std::to_string(t) + "-" + std::to_string(taken);
        m.smiles = key;
        m.label = synth_label_mean(g, fam.offset, config) + config.noise_sigma * rng.normal();
        m.graph = parse_smiles(key);
        data.molecules.push_back(std::move(m));
        ++taken;
      }
      if (taken < tmpl.samples) {
        throw Error(ErrorKind::BadConfig, "template " + tmpl.smiles + " yields only " + std::to_string(taken) +
                                              " distinct molecules, " + std::to_string(tmpl.samples) + " requested");
      }
    }
  }
  data.index_scaffolds();
  return data;
}

}  // namespace oodmol
