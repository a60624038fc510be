#include "spvar/io.hpp"
#include "spvar/panel.hpp"
#include "spvar/restrictions.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

using namespace spvar;
using spvar::testing::max_abs;

namespace {

std::string three_column_file(int rows, int blank_row = 0) {
  std::ostringstream os;
  os << "date,IP,INF,FFR\n";
  for (int r = 1; r <= rows; ++r) {
    os << 1968 + (r - 1) / 12 << "-" << (r - 1) % 12 + 1 << "-01," << 0.01 * r << ",";
    if (r != blank_row) os << 0.5 * r;
    os << "," << r << "\n";
  }
  return os.str();
}

std::string error_text(const std::string& csv) {
  try {
    io::parse_csv(csv);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("monthly file with a date column") {
  const auto table = io::parse_csv(three_column_file(624));
  CHECK(table.has_date_column);
  CHECK(table.columns == std::vector<std::string>{"IP", "INF", "FFR"});
  REQUIRE(table.values.rows() == 624);
  CHECK(table.values(16, 2) == 17.0);
  const auto panel = make_panel(table.values, PvarSpec::uniform(12, 3, 0));
  CHECK(panel.length() == 624);
  CHECK(panel.cycles() == 52);
}

TEST_CASE("CSV validation messages") {
  const std::string blank = error_text(three_column_file(30, 17));
  CHECK(blank.find("row 17, column INF: empty cell") != std::string::npos);
  CHECK(error_text("a,b\n").find("no observations") != std::string::npos);
  CHECK(error_text("").find("missing header") != std::string::npos);
  CHECK(error_text("a,b\n1,x\n").find("row 1, column b: malformed number 'x'") != std::string::npos);
  CHECK(error_text("a,b\n1,nan\n").find("non-finite") != std::string::npos);
  CHECK(error_text("a,b\n1,2,3\n").find("row 1: expected 2 cells") != std::string::npos);
  try {
    io::parse_csv("a\n\n");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::data);
  }
}

TEST_CASE("CSV parsing details") {
  const auto t = io::parse_csv("\xEF\xBB\xBF" "x,y\r\n1,+2.5\r\n-3e-2,4\r\n\r\n");
  CHECK_FALSE(t.has_date_column);
  CHECK(t.values.rows() == 2);
  CHECK(t.values(0, 1) == 2.5);
  CHECK(t.values(1, 0) == -0.03);
  const auto quoted = io::parse_csv("\"when\",\"v\"\n\"2001-01\",1.5\n");
  CHECK(quoted.has_date_column);
  CHECK(quoted.columns == std::vector<std::string>{"v"});
}

TEST_CASE("numbers use 17 significant digits and a decimal point") {
  CHECK(io::format_number(0.1) == "0.10000000000000001");
  CHECK(io::format_number(-2.0) == "-2");
  CHECK(io::format_number(1.0 / 3.0) == "0.33333333333333331");
  CHECK(io::format_number(1e-300) == "1e-300");
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = std::normal_distribution<double>(0.0, 1e3)(rng);
    CHECK(std::stod(io::format_number(x)) == x);
  }
}

TEST_CASE("FNV-1a reference values") {
  CHECK(io::fnv1a_hex("") == "cbf29ce484222325");
  CHECK(io::fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(io::fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("text files round trip with LF endings") {
  const auto path = (std::filesystem::temp_directory_path() / "spvar_io_text.txt").string();
  io::write_text(path, "a\nb\n");
  CHECK(io::read_text(path) == "a\nb\n");
  std::remove(path.c_str());
  CHECK_THROWS_AS(io::read_text(path), Error);
}

TEST_CASE("params documents round trip byte for byte") {
  Rng rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    auto p = spvar::testing::random_instance(rng);
    for (int s = 1; s <= p.spec.num_seasons; ++s) p.cov(s) = spvar::testing::random_spd(rng, p.spec.num_vars);
    const io::ParamsDocument doc{p, std::nullopt};
    const std::string once = io::to_json(doc).dump(2);
    const auto back = io::params_from_json(io::Json::parse(once));
    CHECK(io::to_json(back).dump(2) == once);
    for (int s = 1; s <= p.spec.num_seasons; ++s) {
      CHECK(back.params.intercept(s) == p.intercept(s));
      CHECK(back.params.cov(s) == p.cov(s));
      for (int i = 1; i <= p.spec.order(s); ++i) CHECK(back.params.coeff_or_zero(s, i) == p.coeff_or_zero(s, i));
    }
  }
}

TEST_CASE("fitted documents keep the fit summary") {
  Rng rng(4);
  const auto spec = PvarSpec::uniform(2, 2, 1);
  const auto truth = spvar::testing::random_stationary(rng, spec, 0.6);
  Matrix raw = spvar::testing::random_matrix(rng, 2 * 30, 2);
  for (int r = 1; r < raw.rows(); ++r)
    raw.row(r) += (truth.coeff_or_zero(wrap_season(r + 1, 2), 1) * raw.row(r - 1).transpose()).transpose();
  const auto restr = build_restrictions(unrestricted_pattern(spec));
  const auto fit = fit_constrained(build_design(make_panel(raw, spec), spec), restr);
  const auto doc = io::make_document(fit, "unrestricted");
  const std::string text = io::to_json(doc).dump(2);
  const auto back = io::params_from_json(io::Json::parse(text));
  REQUIRE(back.fit.has_value());
  CHECK(back.fit->beta == fit.beta);
  CHECK(back.fit->gamma == fit.gamma);
  CHECK(back.fit->free_counts == fit.free_counts);
  CHECK(back.fit->restrictions == "unrestricted");
  CHECK(io::to_json(back).dump(2) == text);
}

TEST_CASE("params documents are validated") {
  auto j = io::to_json({PvarParams::zeros(PvarSpec::uniform(2, 1, 1)), std::nullopt});
  auto missing = j;
  missing.erase("sigma");
  CHECK_THROWS_AS(io::params_from_json(missing), Error);
  CHECK_THROWS_AS(io::matrix_from_json(io::Json::parse("[[1,2],[3]]"), "x"), Error);
  CHECK_THROWS_AS(io::matrix_from_json(io::Json::parse("[[1,\"a\"]]"), "x"), Error);
  const Matrix a = io::matrix_from_json(io::Json::parse("[[1,2],[3,4]]"), "x");
  CHECK(a(1, 0) == 3.0);
  CHECK(io::matrix_to_json(a).dump() == "[[1.0,2.0],[3.0,4.0]]");
}
