#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "oodmol/benchgen.hpp"

namespace oodmol {

// A template is a SMILES string with placeholders "{name}" that each sit
// inside their own parentheses, e.g. "c1ccc({R})cc1". Every placeholder is
// filled from the substituent set of the same name; the empty substituent
// drops the whole "({name})" group.
struct SynthTemplate {
  std::string smiles;
  int samples = 0;
};

struct SynthFamily {
  std::string name;
  double offset = 0.0;
  std::vector<SynthTemplate> templates;
};

struct GenConfig {
  std::string property = "value";
  std::string unit = "arb";
  double noise_sigma = 0.05;
  double coef_polarizability = 0.5;
  double coef_rings = 0.1;
  double coef_flex = 0.3;
  std::map<std::string, std::vector<std::string>> substituents;
  std::vector<SynthFamily> families;

  static GenConfig from_json(const std::string& text);
  std::string to_json() const;
};

// Expands one template with the given choice per placeholder (in order of
// appearance). Throws TemplateParseError on malformed templates.
std::string expand_template(const std::string& tmpl, const std::vector<std::string>& choices);

// Placeholder names of `tmpl`, in order of appearance.
std::vector<std::string> template_placeholders(const std::string& tmpl);

// Label law used by the generator (noise excluded).
double synth_label_mean(const MolGraph& g, double family_offset, const GenConfig& config);

// Enumerates substituent combinations per template (seeded order), keeps the
// first `samples` distinct molecules and labels them. Reproducible from seed.
Dataset synth_dataset(const GenConfig& config, std::uint64_t seed);

}  // namespace oodmol
