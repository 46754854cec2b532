#pragma once

#include <filesystem>
#include <string>

#include "oodmol/benchgen.hpp"

namespace oodmol {

// CSV with header `id,smiles,property,value`, one row per (molecule,
// property). Rows for other properties are skipped; an empty `property`
// selects the first one seen. All bad rows are reported together in one
// DatasetParse error ("row N: ...", 1-based data rows, header is row 0).
Dataset parse_dataset_csv(const std::string& text, const std::string& property = {});
Dataset read_dataset_csv(const std::filesystem::path& path, const std::string& property = {});

std::string format_dataset_csv(const Dataset& data);

}  // namespace oodmol
