#include "spvar/io.hpp"

#include "spvar/restrictions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace spvar::io {

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  std::vector<std::string> lines;
  {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) fail(ErrorCategory::data, "empty file: missing header row");
  if (!lines[0].empty() && static_cast<unsigned char>(lines[0][0]) == 0xEF) lines[0] = lines[0].substr(3);  // BOM
  const auto header = split_cells(lines[0]);
  if (lines.size() == 1) fail(ErrorCategory::data, "no observations");

  CsvTable table;
  const auto first_row = split_cells(lines[1]);
  const std::string h0 = lower(header.empty() ? std::string() : header[0]);
  table.has_date_column = h0 == "date" || h0 == "time" || h0 == "period" || h0 == "observation_date" ||
                          (!first_row.empty() && !first_row[0].empty() && !parse_double(first_row[0]));
  const size_t skip = table.has_date_column ? 1 : 0;
  if (header.size() <= skip) fail(ErrorCategory::data, "header has no numeric columns");
  table.columns.assign(header.begin() + static_cast<long>(skip), header.end());
  const auto m = static_cast<Eigen::Index>(table.columns.size());
  const auto T = static_cast<Eigen::Index>(lines.size() - 1);
  table.values.resize(T, m);
  for (Eigen::Index r = 0; r < T; ++r) {
    const auto cells = split_cells(lines[static_cast<size_t>(r + 1)]);
    const std::string where = "row " + std::to_string(r + 1);
    if (cells.size() != header.size())
      fail(ErrorCategory::data, where + ": expected " + std::to_string(header.size()) + " cells, found " +
                                    std::to_string(cells.size()));
    for (Eigen::Index c = 0; c < m; ++c) {
      const std::string& cell = cells[static_cast<size_t>(c) + skip];
      const std::string at = where + ", column " + table.columns[static_cast<size_t>(c)];
      if (cell.empty()) fail(ErrorCategory::data, at + ": empty cell");
      const auto v = parse_double(cell);
      if (!v) fail(ErrorCategory::data, at + ": malformed number '" + cell + "'");
      if (!std::isfinite(*v)) fail(ErrorCategory::data, at + ": non-finite value");
      table.values(r, c) = *v;
    }
  }
  return table;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::data, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

CsvTable load_csv(const std::string& path) { return parse_csv(read_text(path)); }

std::string format_number(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  if (ec != std::errc()) fail(ErrorCategory::numerical, "number formatting failed");
  return std::string(buf, ptr);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCategory::data, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorCategory::data, "write to '" + path + "' failed");
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json matrix_to_json(const Matrix& a) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& field) {
  if (!j.is_array()) fail(ErrorCategory::config, field + ": expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  Matrix a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      fail(ErrorCategory::config, field + ": ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[static_cast<size_t>(c)].is_number()) fail(ErrorCategory::config, field + ": non-numeric entry");
      a(i, c) = row[static_cast<size_t>(c)].get<double>();
    }
  }
  return a;
}

namespace {

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const Json& j, const std::string& field) {
  if (!j.is_array()) fail(ErrorCategory::config, field + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(ErrorCategory::config, field + ": non-numeric entry");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail(ErrorCategory::config, where + ": missing field '" + key + "'");
  return j.at(key);
}

}  // namespace

Json to_json(const ParamsDocument& doc) {
  const PvarParams& p = doc.params;
  const PvarSpec& spec = p.spec;
  Json j;
  j["seasons"] = spec.num_seasons;
  j["variables"] = spec.var_names;
  j["orders"] = spec.orders;
  Json intercepts = Json::array();
  Json coeffs = Json::array();
  Json sigma = Json::array();
  for (int s = 1; s <= spec.num_seasons; ++s) {
    intercepts.push_back(vector_to_json(p.intercept(s)));
    Json lags = Json::array();
    for (int i = 1; i <= spec.order(s); ++i) lags.push_back(matrix_to_json(p.coeff_or_zero(s, i)));
    coeffs.push_back(std::move(lags));
    sigma.push_back(matrix_to_json(p.cov(s)));
  }
  j["intercepts"] = std::move(intercepts);
  j["coeffs"] = std::move(coeffs);
  j["sigma"] = std::move(sigma);
  if (doc.fit) {
    const FitSummary& f = *doc.fit;
    Json fit;
    fit["beta"] = vector_to_json(f.beta);
    fit["gamma"] = vector_to_json(f.gamma);
    fit["free_counts"] = f.free_counts;
    fit["effective_n"] = f.effective_n;
    fit["stationarity_margin"] = f.stationarity_margin;
    fit["stationary"] = f.stationarity_margin < 1.0 - kStationarityTolerance;
    fit["restrictions"] = f.restrictions;
    fit["free_params"] = f.gamma.size();
    j["fit"] = std::move(fit);
  }
  return j;
}

ParamsDocument params_from_json(const Json& j) {
  const std::string where = "params";
  const int S = require(j, "seasons", where).get<int>();
  const auto names = require(j, "variables", where).get<std::vector<std::string>>();
  std::vector<int> orders;
  const Json& jo = require(j, "orders", where);
  if (jo.is_number_integer())
    orders.assign(static_cast<size_t>(S), jo.get<int>());
  else
    orders = jo.get<std::vector<int>>();
  ParamsDocument doc;
  const PvarSpec spec = PvarSpec::make(S, static_cast<int>(names.size()), orders, names);
  doc.params = PvarParams::zeros(spec);
  const Json& ji = require(j, "intercepts", where);
  const Json& jc = require(j, "coeffs", where);
  const Json& js = require(j, "sigma", where);
  if (ji.size() != static_cast<size_t>(S) || jc.size() != static_cast<size_t>(S) || js.size() != static_cast<size_t>(S))
    fail(ErrorCategory::config, where + ": intercepts, coeffs and sigma need one entry per season");
  for (int s = 1; s <= S; ++s) {
    const auto i = static_cast<size_t>(s - 1);
    const std::string at = where + ".season " + std::to_string(s);
    doc.params.intercept(s) = vector_from_json(ji[i], at + ".intercepts");
    if (jc[i].size() != static_cast<size_t>(spec.order(s)))
      fail(ErrorCategory::config, at + ": expected " + std::to_string(spec.order(s)) + " coefficient matrices");
    for (int lag = 1; lag <= spec.order(s); ++lag)
      doc.params.coeff(s, lag) = matrix_from_json(jc[i][static_cast<size_t>(lag - 1)], at + ".coeffs");
    doc.params.cov(s) = matrix_from_json(js[i], at + ".sigma");
  }
  doc.params.validate_shapes();
  if (j.contains("fit")) {
    const Json& jf = j.at("fit");
    FitSummary f;
    f.beta = vector_from_json(require(jf, "beta", "fit"), "fit.beta");
    f.gamma = vector_from_json(require(jf, "gamma", "fit"), "fit.gamma");
    f.free_counts = require(jf, "free_counts", "fit").get<std::vector<int>>();
    f.effective_n = require(jf, "effective_n", "fit").get<int>();
    f.stationarity_margin = require(jf, "stationarity_margin", "fit").get<double>();
    f.restrictions = jf.value("restrictions", std::string());
    doc.fit = std::move(f);
  }
  return doc;
}

ParamsDocument make_document(const FitResult& fit, const std::string& restrictions) {
  ParamsDocument doc;
  doc.params = fit.params;
  doc.fit = FitSummary{fit.beta, fit.gamma, fit.free_counts, fit.effective_n, fit.stationarity_margin, restrictions};
  return doc;
}

}  // namespace spvar::io
