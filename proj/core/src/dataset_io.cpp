#include "oodmol/dataset_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "oodmol/error.hpp"

namespace oodmol {
namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Dataset parse_dataset_csv(const std::string& text, const std::string& property) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> problems;
  if (!std::getline(in, line)) throw Error(ErrorKind::DatasetParse, "row 0: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split_row(line) != std::vector<std::string>{"id", "smiles", "property", "value"}) {
    throw Error(ErrorKind::DatasetParse, "row 0: header must be id,smiles,property,value");
  }
  Dataset data;
  data.property = property;
  std::set<std::string> ids;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_row(line);
    if (f.size() != 4) {
      problems.push_back("row " + std::to_string(row) + ": expected 4 fields, got " + std::to_string(f.size()));
      continue;
    }
    if (data.property.empty()) data.property = f[2];
    if (f[2] != data.property) continue;
    Molecule m;
    m.id = f[0];
    m.smiles = f[1];
    if (m.id.empty() || !ids.insert(m.id).second) {
      problems.push_back("row " + std::to_string(row) + ": missing or duplicate id '" + m.id + "'");
      continue;
    }
    try {
      std::size_t used = 0;
      m.label = std::stod(f[3], &used);
      if (used != f[3].size() || !std::isfinite(m.label)) throw std::invalid_argument("value");
    } catch (const std::exception&) {
      problems.push_back("row " + std::to_string(row) + ": value '" + f[3] + "' is not a finite number");
      continue;
    }
    try {
      m.graph = parse_smiles(m.smiles);
    } catch (const Error& e) {
      problems.push_back("row " + std::to_string(row) + ": " + e.what());
      continue;
    }
    data.molecules.push_back(std::move(m));
  }
  if (!problems.empty()) {
    std::string msg;
    const std::size_t shown = std::min<std::size_t>(problems.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) msg += (i ? "; " : "") + problems[i];
    if (problems.size() > shown) msg += "; ... " + std::to_string(problems.size() - shown) + " more";
    throw Error(ErrorKind::DatasetParse, msg);
  }
  if (data.molecules.empty()) throw Error(ErrorKind::DatasetParse, "no rows for property '" + data.property + "'");
  data.provenance.kind = "ingested";
  data.index_scaffolds();
  return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path, const std::string& property) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot read dataset " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_dataset_csv(ss.str(), property);
}

std::string format_dataset_csv(const Dataset& data) {
  std::string out = "id,smiles,property,value\n";
  for (const Molecule& m : data.molecules) {
    out += m.id + "," + m.smiles + "," + data.property + "," + format_double(m.label) + "\n";
  }
  return out;
}

}  // namespace oodmol
