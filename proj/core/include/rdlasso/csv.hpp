#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rdlasso/data.hpp"

namespace rdlasso {

/// Column mapping for CSV ingestion. Covariates may be listed explicitly or
/// set to "all remaining columns".
struct ColumnMapping {
  std::string running;
  std::string outcome;
  std::optional<std::string> takeup;
  std::vector<std::string> covariates;
  bool covariates_all_others = false;
};

struct LoadReport {
  Eigen::Index rows_loaded = 0;
  Eigen::Index rows_dropped = 0;  // rows with missing/non-numeric mapped fields
};

/// Parses a UTF-8, comma-separated file with a header row. Rows whose mapped
/// fields are missing or non-numeric are dropped and counted in the report.
/// Throws FileNotFoundError / MissingColumnError / ParseError.
Sample load_csv(const std::string& path, const ColumnMapping& mapping,
                double cutoff, LoadReport* report = nullptr);

}  // namespace rdlasso
