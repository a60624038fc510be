#ifndef SPVAR_IO_HPP
#define SPVAR_IO_HPP

#include "spvar/common.hpp"
#include "spvar/estimation.hpp"
#include "spvar/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spvar::io {

using Json = nlohmann::json;

struct CsvTable {
  std::vector<std::string> columns;  ///< numeric columns only
  Matrix values;
  bool has_date_column = false;
};

/// Header row, optional leading date column, numeric cells only. Errors name the data row (1-based) and column.
CsvTable parse_csv(const std::string& text);
CsvTable load_csv(const std::string& path);

/// 17 significant digits, locale independent ("%.17g" semantics).
std::string format_number(double x);

/// Writes text with LF line endings.
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

struct FitSummary {
  Vector beta;
  Vector gamma;
  std::vector<int> free_counts;
  int effective_n = 0;
  double stationarity_margin = 0.0;
  std::string restrictions;
};

struct ParamsDocument {
  PvarParams params;
  std::optional<FitSummary> fit;
};

Json matrix_to_json(const Matrix& a);
Matrix matrix_from_json(const Json& j, const std::string& field);

Json to_json(const ParamsDocument& doc);
ParamsDocument params_from_json(const Json& j);

ParamsDocument make_document(const FitResult& fit, const std::string& restrictions);

}  // namespace spvar::io

#endif  // SPVAR_IO_HPP
