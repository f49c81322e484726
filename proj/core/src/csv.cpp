#include "rdlasso/csv.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "rdlasso/errors.hpp"

namespace rdlasso {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& raw, double& out) {
  const std::string s = trim(raw);
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw MissingColumnError(name);
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

Sample load_csv(const std::string& path, const ColumnMapping& mapping, double cutoff,
                LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "", "empty file: " + path);
  std::vector<std::string> header = split_fields(line);
  for (auto& h : header) h = trim(h);

  const std::size_t i_running = column_index(header, mapping.running);
  const std::size_t i_outcome = column_index(header, mapping.outcome);
  std::size_t i_takeup = 0;
  if (mapping.takeup) i_takeup = column_index(header, *mapping.takeup);

  std::vector<std::size_t> cov_idx;
  std::vector<std::string> cov_names;
  if (mapping.covariates_all_others) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j == i_running || j == i_outcome) continue;
      if (mapping.takeup && j == i_takeup) continue;
      cov_idx.push_back(j);
      cov_names.push_back(header[j]);
    }
  } else {
    for (const std::string& name : mapping.covariates) {
      cov_idx.push_back(column_index(header, name));
      cov_names.push_back(name);
    }
  }

  std::vector<double> xs, ys, ws;
  std::vector<std::vector<double>> zs;
  std::size_t dropped = 0;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError(line_number, "",
                       "row has " + std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(header.size()));
    }
    double x, y, w = 0.0;
    bool ok = parse_double(fields[i_running], x) && parse_double(fields[i_outcome], y);
    if (ok && mapping.takeup) ok = parse_double(fields[i_takeup], w);
    std::vector<double> z(cov_idx.size());
    for (std::size_t j = 0; ok && j < cov_idx.size(); ++j) {
      ok = parse_double(fields[cov_idx[j]], z[j]);
    }
    if (!ok) {
      ++dropped;
      continue;
    }
    xs.push_back(x);
    ys.push_back(y);
    if (mapping.takeup) ws.push_back(w);
    zs.push_back(std::move(z));
  }

  Sample s;
  const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
  s.x = Eigen::Map<Eigen::VectorXd>(xs.data(), n);
  s.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  s.z.resize(n, static_cast<Eigen::Index>(cov_idx.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < cov_idx.size(); ++j) {
      s.z(i, static_cast<Eigen::Index>(j)) = zs[static_cast<std::size_t>(i)][j];
    }
  }
  if (mapping.takeup) {
    s.w = Eigen::Map<Eigen::VectorXd>(ws.data(), n);
  }
  s.cutoff = cutoff;
  s.covariate_names = cov_names;
  if (report) {
    report->rows_loaded = n;
    report->rows_dropped = static_cast<Eigen::Index>(dropped);
  }
  return s;
}

}  // namespace rdlasso
