#include "spvar/cli.hpp"

#include "spvar/diagnostics.hpp"
#include "spvar/parallel.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

namespace spvar {

int default_threads() {
  if (const char* env = std::getenv("SPVAR_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

}  // namespace spvar

namespace spvar::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorCategory::config, where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) fail(ErrorCategory::config, where + ": unknown key '" + it.key() + "'");
}

std::string field(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

template <typename T>
T get_or(const Json& j, const std::string& key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    fail(ErrorCategory::config, "config field '" + field(where, key) + "' has the wrong type");
  }
}

template <typename T>
T get_required(const Json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) fail(ErrorCategory::config, "config field '" + field(where, key) + "' is required");
  return get_or<T>(j, key, where, T{});
}

EntryRule parse_code(const Json& c, const std::string& where) {
  if (c.is_number()) return EntryRule::fixed(c.get<double>());
  if (!c.is_string()) fail(ErrorCategory::config, where + ": restriction code must be a string or a number");
  const auto s = c.get<std::string>();
  if (s == "S" || s == "seasonal") return EntryRule::seasonal();
  if (s == "C" || s == "constant") return EntryRule::constant();
  if (s == "0" || s == "zero") return EntryRule::zero();
  fail(ErrorCategory::config, where + ": unknown restriction code '" + s + "' (use S, C, 0 or a number)");
}

int variable_index(const Json& v, const PvarSpec& spec, const std::string& where) {
  if (v.is_number_integer()) {
    const int i = v.get<int>();
    if (i < 1 || i > spec.num_vars) fail(ErrorCategory::config, where + ": variable index out of range");
    return i;
  }
  if (v.is_string()) {
    const auto name = v.get<std::string>();
    for (int i = 0; i < spec.num_vars; ++i)
      if (spec.var_names[static_cast<size_t>(i)] == name) return i + 1;
    fail(ErrorCategory::config, where + ": unknown variable '" + name + "'");
  }
  fail(ErrorCategory::config, where + ": expected a variable name or 1-based index");
}

std::vector<ZeroEntry> parse_zeros(const Json& j, const std::string& where) {
  std::vector<ZeroEntry> out;
  if (!j.is_array()) fail(ErrorCategory::config, where + ": expected a list of [row, col] pairs");
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      fail(ErrorCategory::config, where + ": expected [row, col] pairs of 1-based integers");
    out.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return out;
}

BootstrapMethod parse_method(const std::string& s) {
  if (s == "seasonal_block") return BootstrapMethod::seasonal_block;
  if (s == "mbb_standardized") return BootstrapMethod::mbb_standardized;
  if (s == "seasonal_iid") return BootstrapMethod::seasonal_iid;
  if (s == "iid_standardized") return BootstrapMethod::iid_standardized;
  fail(ErrorCategory::config, "config field 'bootstrap.method': unknown method '" + s + "'");
}

const char* method_name(BootstrapMethod m) {
  switch (m) {
    case BootstrapMethod::seasonal_block: return "seasonal_block";
    case BootstrapMethod::mbb_standardized: return "mbb_standardized";
    case BootstrapMethod::seasonal_iid: return "seasonal_iid";
    case BootstrapMethod::iid_standardized: return "iid_standardized";
  }
  return "";
}

CiMethod parse_ci(const std::string& s) {
  if (s == "median_adjusted") return CiMethod::median_adjusted;
  if (s == "percentile") return CiMethod::percentile;
  if (s == "hall_percentile") return CiMethod::hall_percentile;
  fail(ErrorCategory::config, "config field 'bootstrap.ci_method': unknown method '" + s + "'");
}

const char* ci_name(CiMethod m) {
  switch (m) {
    case CiMethod::median_adjusted: return "median_adjusted";
    case CiMethod::percentile: return "percentile";
    case CiMethod::hall_percentile: return "hall_percentile";
  }
  return "";
}

ShockMap parse_shock_map(const std::string& s, const std::string& where) {
  if (s == "impact") return ShockMap::impact;
  if (s == "inverse_impact") return ShockMap::inverse_impact;
  fail(ErrorCategory::config, "config field '" + where + "': expected 'impact' or 'inverse_impact'");
}

const char* shock_map_name(ShockMap m) { return m == ShockMap::impact ? "impact" : "inverse_impact"; }

std::vector<NamedClip> parse_clip(const Json& j, const std::string& where) {
  std::vector<NamedClip> out;
  if (!j.is_array()) fail(ErrorCategory::config, where + ": expected a list");
  for (const auto& e : j) {
    check_keys(e, {"variable", "lower"}, where);
    out.push_back({get_required<std::string>(e, "variable", where), get_or<double>(e, "lower", where, 0.0)});
  }
  return out;
}

Json clip_json(const std::vector<NamedClip>& clip) {
  Json out = Json::array();
  for (const auto& c : clip) out.push_back({{"variable", c.variable}, {"lower", c.lower}});
  return out;
}

std::vector<ClipRule> resolve_clip(const std::vector<NamedClip>& clip, const PvarSpec& spec) {
  std::vector<ClipRule> out;
  for (const auto& c : clip) out.push_back({variable_index(Json(c.variable), spec, "clip"), c.lower});
  return out;
}

std::string resolve(const RunConfig& cfg, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(cfg.base_dir) / path).string();
}

}  // namespace

RestrictionPattern pattern_from_json(const Json& j, const PvarSpec& spec) {
  const std::string where = "config field 'restrictions'";
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "unrestricted") return unrestricted_pattern(spec);
    if (name == "var_collapse") return var_collapse_pattern(spec);
    if (name == "peersman_pattern") return peersman_pattern(spec, PeersmanVariant::as_displayed);
    if (name == "peersman_pattern_ffr_nonseasonal") return peersman_pattern(spec, PeersmanVariant::ffr_nonseasonal);
    fail(ErrorCategory::config, where + ": unknown preset '" + name + "'");
  }
  check_keys(j, {"default", "intercept", "lags", "entries"}, where);
  const int m = spec.num_vars;
  RestrictionPattern pattern(spec, j.contains("default") ? parse_code(j.at("default"), where + ".default")
                                                         : EntryRule::seasonal());
  if (j.contains("intercept")) {
    const Json& ji = j.at("intercept");
    if (!ji.is_array() || static_cast<int>(ji.size()) != m)
      fail(ErrorCategory::config, where + ".intercept: expected " + std::to_string(m) + " codes");
    for (int r = 0; r < m; ++r) pattern.set_intercept_all(r, parse_code(ji[static_cast<size_t>(r)], where + ".intercept"));
  }
  if (j.contains("lags")) {
    const Json& jl = j.at("lags");
    if (!jl.is_array() || static_cast<int>(jl.size()) > spec.max_order())
      fail(ErrorCategory::config, where + ".lags: at most " + std::to_string(spec.max_order()) + " lag grids");
    for (size_t lag = 0; lag < jl.size(); ++lag) {
      const std::string at = where + ".lags[" + std::to_string(lag + 1) + "]";
      const Json& grid = jl[lag];
      if (!grid.is_array() || static_cast<int>(grid.size()) != m)
        fail(ErrorCategory::config, at + ": expected " + std::to_string(m) + " rows");
      for (int r = 0; r < m; ++r) {
        const Json& row = grid[static_cast<size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != m)
          fail(ErrorCategory::config, at + ": expected " + std::to_string(m) + " codes per row");
        for (int c = 0; c < m; ++c)
          pattern.set_coeff_all(static_cast<int>(lag + 1), r, c, parse_code(row[static_cast<size_t>(c)], at));
      }
    }
  }
  if (j.contains("entries")) {
    for (const auto& e : j.at("entries")) {
      const std::string at = where + ".entries";
      check_keys(e, {"season", "term", "lag", "row", "col", "code"}, at);
      const auto term = get_required<std::string>(e, "term", at);
      const EntryRule rule = parse_code(e.contains("code") ? e.at("code") : Json(), at);
      const int row = get_required<int>(e, "row", at) - 1;
      std::vector<int> seasons;
      if (e.contains("season"))
        seasons.push_back(get_required<int>(e, "season", at));
      else
        for (int s = 1; s <= spec.num_seasons; ++s) seasons.push_back(s);
      for (int s : seasons) {
        if (term == "intercept") {
          pattern.intercept(s, row) = rule;
        } else if (term == "lag") {
          const int lag = get_required<int>(e, "lag", at);
          if (lag <= spec.order(s)) pattern.coeff(s, lag, row, get_required<int>(e, "col", at) - 1) = rule;
        } else {
          fail(ErrorCategory::config, at + ": term must be 'intercept' or 'lag'");
        }
      }
    }
  }
  pattern.description = "custom";
  return pattern;
}

IdentScheme scheme_from_json(const Json& j, const PvarSpec& spec) {
  const std::string where = "config field 'identification'";
  if (j.is_string()) {
    if (j.get<std::string>() == "cholesky") return IdentScheme::cholesky();
    fail(ErrorCategory::config, where + ": unknown preset '" + j.get<std::string>() + "'");
  }
  check_keys(j, {"scheme", "short_zeros", "long_zeros", "normalize"}, where);
  IdentScheme scheme;
  const auto kind = get_or<std::string>(j, "scheme", "identification", "short_long");
  if (kind == "cholesky")
    scheme.kind = IdentKind::cholesky;
  else if (kind == "short_long")
    scheme.kind = IdentKind::short_long;
  else
    fail(ErrorCategory::config, where + ".scheme: expected 'cholesky' or 'short_long'");
  if (j.contains("short_zeros")) scheme.short_zeros = parse_zeros(j.at("short_zeros"), where + ".short_zeros");
  if (j.contains("long_zeros")) scheme.long_zeros = parse_zeros(j.at("long_zeros"), where + ".long_zeros");
  if (j.contains("normalize")) {
    const Json& n = j.at("normalize");
    check_keys(n, {"variable", "shock", "size"}, where + ".normalize");
    if (!n.contains("variable") || !n.contains("shock"))
      fail(ErrorCategory::config, where + ".normalize: needs 'variable' and 'shock'");
    ImpactNormalization norm;
    norm.variable = variable_index(n.at("variable"), spec, where + ".normalize.variable");
    const Json& shock = n.at("shock");
    if (!shock.is_number_integer()) fail(ErrorCategory::config, where + ".normalize.shock: expected a 1-based index");
    norm.shock = shock.get<int>();
    norm.size = get_or<double>(n, "size", "identification.normalize", 1.0);
    scheme.impact_normalization = norm;
  }
  scheme.validate(spec.num_vars);
  return scheme;
}

RunConfig parse_config(const Json& j, const std::string& base_dir) {
  check_keys(j, {"data", "seasons", "variables", "orders", "presample", "diff_log", "restrictions", "identification",
                 "horizon", "bootstrap", "sigma", "diagnostics", "output", "simulation", "coverage"},
             "config");
  RunConfig cfg;
  cfg.base_dir = base_dir;
  cfg.data = get_or<std::string>(j, "data", "", "");
  cfg.seasons = get_required<int>(j, "seasons", "");
  if (cfg.seasons < 1) fail(ErrorCategory::config, "config field 'seasons' must be >= 1");
  cfg.variables = get_or<std::vector<std::string>>(j, "variables", "", {});
  if (j.contains("orders")) {
    const Json& o = j.at("orders");
    if (o.is_number_integer())
      cfg.orders.assign(static_cast<size_t>(cfg.seasons), o.get<int>());
    else
      cfg.orders = get_or<std::vector<int>>(j, "orders", "", {});
    if (static_cast<int>(cfg.orders.size()) != cfg.seasons)
      fail(ErrorCategory::config, "config field 'orders' needs one order per season");
    for (int p : cfg.orders)
      if (p < 0) fail(ErrorCategory::config, "config field 'orders' must be nonnegative");
  } else {
    cfg.orders.assign(static_cast<size_t>(cfg.seasons), 1);
  }
  if (j.contains("presample")) {
    const Json& p = j.at("presample");
    const std::string policy = p.is_string() ? p.get<std::string>() : get_or<std::string>(p, "policy", "presample", "consume");
    if (p.is_object()) check_keys(p, {"policy", "rows"}, "config field 'presample'");
    if (policy == "consume") {
      cfg.presample = PresamplePolicy::consume;
    } else if (policy == "require") {
      cfg.presample = PresamplePolicy::require;
      cfg.presample_rows = p.is_object() ? get_required<int>(p, "rows", "presample") : 0;
    } else {
      fail(ErrorCategory::config, "config field 'presample.policy': expected 'consume' or 'require'");
    }
  }
  cfg.diff_log = get_or<std::vector<std::string>>(j, "diff_log", "", {});
  if (j.contains("restrictions")) cfg.restrictions = j.at("restrictions");
  if (j.contains("identification")) cfg.identification = j.at("identification");
  cfg.horizon = get_or<int>(j, "horizon", "", 24);
  if (cfg.horizon < 0) fail(ErrorCategory::config, "config field 'horizon' must be >= 0");

  if (j.contains("bootstrap")) {
    const Json& b = j.at("bootstrap");
    check_keys(b, {"method", "b", "L", "alpha", "ci_method", "seed"}, "config field 'bootstrap'");
    cfg.bootstrap.method = parse_method(get_or<std::string>(b, "method", "bootstrap", "seasonal_block"));
    cfg.bootstrap.block_len = get_or<int>(b, "b", "bootstrap", 7);
    cfg.bootstrap.replicates = get_or<int>(b, "L", "bootstrap", 499);
    cfg.bootstrap.alpha = get_or<double>(b, "alpha", "bootstrap", 0.32);
    cfg.bootstrap.ci_method = parse_ci(get_or<std::string>(b, "ci_method", "bootstrap", "median_adjusted"));
    cfg.bootstrap.seed = get_or<std::uint64_t>(b, "seed", "bootstrap", 1);
  } else {
    cfg.bootstrap.block_len = 7;
  }
  if (j.contains("sigma")) {
    const Json& s = j.at("sigma");
    check_keys(s, {"divisor", "fallback_to_cycles"}, "config field 'sigma'");
    const auto div = get_or<std::string>(s, "divisor", "sigma", "df_corrected");
    if (div == "df_corrected")
      cfg.sigma.divisor = SigmaDivisor::df_corrected;
    else if (div == "cycles")
      cfg.sigma.divisor = SigmaDivisor::cycles;
    else
      fail(ErrorCategory::config, "config field 'sigma.divisor': expected 'df_corrected' or 'cycles'");
    cfg.sigma.fallback_to_cycles = get_or<bool>(s, "fallback_to_cycles", "sigma", false);
  }
  if (j.contains("diagnostics")) {
    const Json& d = j.at("diagnostics");
    check_keys(d, {"max_lag", "bandwidth"}, "config field 'diagnostics'");
    cfg.max_lag = get_or<int>(d, "max_lag", "diagnostics", 36);
    cfg.bandwidth = get_or<int>(d, "bandwidth", "diagnostics", 2);
  }
  cfg.output = get_or<std::string>(j, "output", "", "out");
  if (j.contains("simulation")) {
    const Json& s = j.at("simulation");
    check_keys(s, {"params", "garch", "cycles", "clip", "shock_map"}, "config field 'simulation'");
    SimulationSettings sim;
    sim.params = get_required<std::string>(s, "params", "simulation");
    sim.garch = get_or<std::string>(s, "garch", "simulation", "G0");
    GarchSpec::preset(sim.garch);
    sim.cycles = get_or<int>(s, "cycles", "simulation", 50);
    if (s.contains("clip")) sim.clip = parse_clip(s.at("clip"), "config field 'simulation.clip'");
    sim.shock_map = parse_shock_map(get_or<std::string>(s, "shock_map", "simulation", "impact"), "simulation.shock_map");
    cfg.simulation = sim;
  }
  if (j.contains("coverage")) {
    const Json& c = j.at("coverage");
    check_keys(c, {"dgp", "garch", "mc_reps", "cycles", "horizons", "nominal", "clip", "shock_map", "label"},
               "config field 'coverage'");
    CoverageSettings cov;
    cov.dgp = get_required<std::string>(c, "dgp", "coverage");
    cov.garch = get_or<std::string>(c, "garch", "coverage", "G0");
    GarchSpec::preset(cov.garch);
    cov.mc_reps = get_or<int>(c, "mc_reps", "coverage", 500);
    cov.cycles = get_or<int>(c, "cycles", "coverage", 50);
    cov.horizons = get_or<std::vector<int>>(c, "horizons", "coverage", {0});
    cov.nominal = get_or<double>(c, "nominal", "coverage", 1.0 - cfg.bootstrap.alpha);
    if (c.contains("clip")) cov.clip = parse_clip(c.at("clip"), "config field 'coverage.clip'");
    cov.shock_map = parse_shock_map(get_or<std::string>(c, "shock_map", "coverage", "impact"), "coverage.shock_map");
    cov.label = get_or<std::string>(c, "label", "coverage", cov.garch);
    cfg.coverage = cov;
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  Json j;
  try {
    j = Json::parse(io::read_text(path));
  } catch (const Json::parse_error& e) {
    fail(ErrorCategory::config, "config '" + path + "' is not valid JSON: " + e.what());
  } catch (const Error& e) {
    fail(ErrorCategory::config, e.what());
  }
  const auto parent = fs::path(path).parent_path();
  return parse_config(j, parent.empty() ? "." : parent.string());
}

Json canonical_json(const RunConfig& c) {
  Json j;
  j["data"] = c.data;
  j["seasons"] = c.seasons;
  j["variables"] = c.variables;
  j["orders"] = c.orders;
  j["presample"] = {{"policy", c.presample == PresamplePolicy::consume ? "consume" : "require"},
                    {"rows", c.presample_rows}};
  j["diff_log"] = c.diff_log;
  j["restrictions"] = c.restrictions;
  j["identification"] = c.identification;
  j["horizon"] = c.horizon;
  j["bootstrap"] = {{"method", method_name(c.bootstrap.method)},
                    {"b", c.bootstrap.block_len},
                    {"L", c.bootstrap.replicates},
                    {"alpha", c.bootstrap.alpha},
                    {"ci_method", ci_name(c.bootstrap.ci_method)},
                    {"seed", c.bootstrap.seed}};
  j["sigma"] = {{"divisor", c.sigma.divisor == SigmaDivisor::df_corrected ? "df_corrected" : "cycles"},
                {"fallback_to_cycles", c.sigma.fallback_to_cycles}};
  j["diagnostics"] = {{"max_lag", c.max_lag}, {"bandwidth", c.bandwidth}};
  if (c.simulation) {
    const auto& s = *c.simulation;
    j["simulation"] = {{"params", s.params},
                       {"garch", s.garch},
                       {"cycles", s.cycles},
                       {"clip", clip_json(s.clip)},
                       {"shock_map", shock_map_name(s.shock_map)}};
  }
  if (c.coverage) {
    const auto& s = *c.coverage;
    j["coverage"] = {{"dgp", s.dgp},         {"garch", s.garch},       {"mc_reps", s.mc_reps},
                     {"cycles", s.cycles},   {"horizons", s.horizons}, {"nominal", s.nominal},
                     {"clip", clip_json(s.clip)}, {"shock_map", shock_map_name(s.shock_map)}, {"label", s.label}};
  }
  return j;
}

std::string config_hash(const RunConfig& config) { return io::fnv1a_hex(canonical_json(config).dump()); }

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::precondition: return 2;
    case ErrorCategory::data: return 3;
    case ErrorCategory::numerical: return 4;
  }
  return 1;
}

namespace {

struct LoadedData {
  PvarSpec spec;
  TimeSeriesPanel panel;
  std::string data_hash;
};

LoadedData load_data(const RunConfig& cfg) {
  if (cfg.data.empty()) fail(ErrorCategory::config, "config field 'data' is required for this command");
  const std::string path = resolve(cfg, cfg.data);
  const std::string text = io::read_text(path);
  io::CsvTable table = io::parse_csv(text);

  std::vector<std::string> names = cfg.variables.empty() ? table.columns : cfg.variables;
  Matrix raw(table.values.rows(), static_cast<Eigen::Index>(names.size()));
  for (size_t v = 0; v < names.size(); ++v) {
    const auto it = std::find(table.columns.begin(), table.columns.end(), names[v]);
    if (it == table.columns.end()) fail(ErrorCategory::data, "column '" + names[v] + "' not found in " + path);
    raw.col(static_cast<Eigen::Index>(v)) = table.values.col(it - table.columns.begin());
  }
  if (!cfg.diff_log.empty()) {
    // Differencing loses one row; dropping a whole cycle keeps row 1 in season 1.
    const int S = cfg.seasons;
    if (raw.rows() <= S) fail(ErrorCategory::data, "too few rows for diff_log");
    Matrix diffed = raw.bottomRows(raw.rows() - S);
    for (const auto& name : cfg.diff_log) {
      const auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) fail(ErrorCategory::config, "config field 'diff_log': unknown variable '" + name + "'");
      const auto c = static_cast<Eigen::Index>(it - names.begin());
      for (Eigen::Index t = S; t < raw.rows(); ++t) {
        if (!(raw(t, c) > 0.0) || !(raw(t - 1, c) > 0.0))
          fail(ErrorCategory::data, "row " + std::to_string(t + 1) + ", column " + name + ": diff_log needs positive values");
        diffed(t - S, c) = std::log(raw(t, c)) - std::log(raw(t - 1, c));
      }
    }
    raw = std::move(diffed);
  }
  LoadedData out;
  out.spec = PvarSpec::make(cfg.seasons, static_cast<int>(names.size()), cfg.orders, names);
  out.panel = make_panel(raw, out.spec, cfg.presample, cfg.presample_rows);
  out.data_hash = io::fnv1a_hex(text);
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) {
    for (size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
  }
  CsvWriter& cell(const std::string& s) {
    os_ << (first_ ? "" : ",") << s;
    first_ = false;
    return *this;
  }
  CsvWriter& cell(double v) { return cell(io::format_number(v)); }
  CsvWriter& cell(int v) { return cell(std::to_string(v)); }
  void end_row() {
    os_ << '\n';
    first_ = true;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
  bool first_ = true;
};

struct Context {
  const RunConfig& cfg;
  fs::path out_dir;
  std::string command;
  int threads = 1;
  std::string data_hash;
  std::vector<std::string> outputs;
  std::ostream& out;

  void write(const std::string& name, const std::string& text) {
    io::write_text((out_dir / name).string(), text);
    outputs.push_back(name);
  }

  void write_manifest() {
    Json m;
    m["command"] = command;
    m["config_hash"] = config_hash(cfg);
    m["data_hash"] = data_hash;
    m["seed"] = cfg.bootstrap.seed;
    m["version"] = kVersion;
    m["outputs"] = outputs;
    io::write_text((out_dir / "manifest.json").string(), m.dump(2) + "\n");
  }
};

struct FittedModel {
  LoadedData data;
  RestrictionSet restr;
  FitResult fit;
};

FittedModel fit_model(const RunConfig& cfg) {
  FittedModel fm;
  fm.data = load_data(cfg);
  const RestrictionPattern pattern = pattern_from_json(cfg.restrictions, fm.data.spec);
  fm.restr = build_restrictions(pattern);
  check_full_column_rank(fm.restr);
  FitOptions opts;
  opts.sigma = cfg.sigma;
  fm.fit = fit_constrained(build_design(fm.data.panel, fm.data.spec), fm.restr, opts);
  return fm;
}

void write_irf_rows(CsvWriter& w, const IrfSet& irf, const PvarSpec& spec, int s, int k, int i, int j) {
  w.cell(s).cell(k).cell(spec.var_names[static_cast<size_t>(i)]).cell(j + 1).cell(irf.at(s, k)(i, j));
}

void cmd_fit(Context& ctx) {
  const FittedModel fm = fit_model(ctx.cfg);
  ctx.data_hash = fm.data.data_hash;
  const auto doc = io::make_document(fm.fit, fm.restr.provenance);
  ctx.write("params.json", io::to_json(doc).dump(2) + "\n");
  ctx.out << "free parameters M = " << fm.restr.free_params() << ", effective cycles N = " << fm.fit.effective_n
          << ", stationarity margin = " << io::format_number(fm.fit.stationarity_margin)
          << (fm.fit.stationary() ? "" : " (NOT periodically stationary)") << "\n";
  if (fm.restr.provenance.rfind("peersman_pattern", 0) == 0)
    ctx.out << "note: the restricted PVAR(9) grid counts its own free parameters (" << fm.restr.free_params()
            << "); the reported total of 234 does not match a literal count of the displayed pattern\n";
}

void cmd_identify(Context& ctx) {
  const FittedModel fm = fit_model(ctx.cfg);
  ctx.data_hash = fm.data.data_hash;
  const IdentScheme scheme = scheme_from_json(ctx.cfg.identification, fm.data.spec);
  const StructuralFit sf = identify(fm.fit, scheme);
  Json j;
  Json h0 = Json::array();
  for (const auto& h : sf.h0) h0.push_back(io::matrix_to_json(h));
  j["h0"] = std::move(h0);
  if (!sf.longrun.empty()) {
    Json lr = Json::array();
    for (const auto& d : sf.longrun) lr.push_back(io::matrix_to_json(d));
    j["longrun"] = std::move(lr);
  }
  ctx.write("structural.json", j.dump(2) + "\n");
  std::vector<std::string> header{"t", "season"};
  for (int i = 1; i <= fm.data.spec.num_vars; ++i) header.push_back("w" + std::to_string(i));
  CsvWriter w(header);
  for (Eigen::Index t = 0; t < sf.shocks.rows(); ++t) {
    w.cell(static_cast<int>(t + 1)).cell(wrap_season(t + 1, fm.data.spec.num_seasons));
    for (Eigen::Index c = 0; c < sf.shocks.cols(); ++c) w.cell(sf.shocks(t, c));
    w.end_row();
  }
  ctx.write("shocks.csv", w.str());
}

IrfSet point_sirf(const FittedModel& fm, const IdentScheme& scheme, int horizon) {
  const auto h0 = identify_impact(fm.fit.params, scheme);
  return structural_irf(impulse_responses(fm.fit.params, horizon), h0, scheme.impact_normalization);
}

void cmd_irf(Context& ctx) {
  const FittedModel fm = fit_model(ctx.cfg);
  ctx.data_hash = fm.data.data_hash;
  const IdentScheme scheme = scheme_from_json(ctx.cfg.identification, fm.data.spec);
  const IrfSet sirf = point_sirf(fm, scheme, ctx.cfg.horizon);
  const PvarSpec& spec = fm.data.spec;
  CsvWriter w({"season", "horizon", "response", "shock", "value"});
  for (int s = 1; s <= spec.num_seasons; ++s)
    for (int k = 0; k <= ctx.cfg.horizon; ++k)
      for (int j = 0; j < spec.num_vars; ++j)
        for (int i = 0; i < spec.num_vars; ++i) {
          write_irf_rows(w, sirf, spec, s, k, i, j);
          w.end_row();
        }
  ctx.write("irf.csv", w.str());
}

void cmd_bootstrap(Context& ctx) {
  const FittedModel fm = fit_model(ctx.cfg);
  ctx.data_hash = fm.data.data_hash;
  const PvarSpec& spec = fm.data.spec;
  const IdentScheme scheme = scheme_from_json(ctx.cfg.identification, spec);
  const IrfSet sirf = point_sirf(fm, scheme, ctx.cfg.horizon);
  const BootstrapConfig& boot = ctx.cfg.bootstrap;
  FitOptions opts;
  opts.sigma = ctx.cfg.sigma;
  const BootstrapDraws draws =
      bootstrap_engine(fm.data.panel, fm.fit, fm.restr, scheme, ctx.cfg.horizon, boot, opts, ctx.threads);
  const IrfBands bands = irf_bands(sirf, draws.sirf_draws, boot.alpha, boot.ci_method);
  ctx.out << "block length b = " << boot.effective_block() << ", T = " << fm.data.panel.length()
          << ", b^3/T = " << io::format_number(block_regime_ratio(boot.effective_block(), fm.data.panel.length()))
          << ", failed replicates = " << draws.failure_count << "/" << boot.replicates << "\n";
  CsvWriter w({"season", "horizon", "response", "shock", "value", "lower", "upper", "ci_method"});
  for (int s = 1; s <= spec.num_seasons; ++s)
    for (int k = 0; k <= ctx.cfg.horizon; ++k)
      for (int j = 0; j < spec.num_vars; ++j)
        for (int i = 0; i < spec.num_vars; ++i) {
          write_irf_rows(w, sirf, spec, s, k, i, j);
          w.cell(bands.lower.at(s, k)(i, j)).cell(bands.upper.at(s, k)(i, j)).cell(std::string(ci_name(boot.ci_method)));
          w.end_row();
        }
  ctx.write("bands.csv", w.str());
}

io::ParamsDocument load_params(const RunConfig& cfg, const std::string& path) {
  const std::string full = resolve(cfg, path);
  try {
    return io::params_from_json(Json::parse(io::read_text(full)));
  } catch (const Json::exception& e) {
    fail(ErrorCategory::config, "cannot read parameters from '" + full + "': " + e.what());
  }
}

void cmd_simulate(Context& ctx) {
  if (!ctx.cfg.simulation) fail(ErrorCategory::config, "config field 'simulation' is required for simulate");
  const auto& sim = *ctx.cfg.simulation;
  const auto doc = load_params(ctx.cfg, sim.params);
  const PvarParams& dgp = doc.params;
  dgp.validate();
  const IdentScheme scheme = scheme_from_json(ctx.cfg.identification, dgp.spec);
  const auto h0 = identify_impact(dgp, scheme);
  Rng rng(sub_seed(ctx.cfg.bootstrap.seed, 0));
  const TimeSeriesPanel panel = simulate_with_burn_in(dgp, h0, GarchSpec::preset(sim.garch), sim.cycles, rng,
                                                      resolve_clip(sim.clip, dgp.spec), sim.shock_map);
  // Emit whole presample cycles so the file round-trips through the consume policy.
  const int lead = consumed_cycles(dgp.spec) * dgp.spec.num_seasons;
  CsvWriter w(dgp.spec.var_names);
  const Matrix& pre = panel.presample;
  for (Eigen::Index t = pre.rows() - lead; t < pre.rows(); ++t) {
    for (Eigen::Index c = 0; c < pre.cols(); ++c) w.cell(pre(t, c));
    w.end_row();
  }
  for (Eigen::Index t = 0; t < panel.data.rows(); ++t) {
    for (Eigen::Index c = 0; c < panel.data.cols(); ++c) w.cell(panel.data(t, c));
    w.end_row();
  }
  ctx.write("simulated.csv", w.str());
}

void cmd_coverage(Context& ctx) {
  if (!ctx.cfg.coverage) fail(ErrorCategory::config, "config field 'coverage' is required for coverage");
  const auto& cov = *ctx.cfg.coverage;
  const auto doc = load_params(ctx.cfg, cov.dgp);
  doc.params.validate();
  const PvarSpec& spec = doc.params.spec;
  CoverageConfig cc;
  cc.dgp = doc.params;
  cc.scheme = scheme_from_json(ctx.cfg.identification, spec);
  cc.h0 = identify_impact(doc.params, cc.scheme);
  cc.garch = GarchSpec::preset(cov.garch);
  cc.mc_reps = cov.mc_reps;
  cc.cycles = cov.cycles;
  cc.restrictions = build_restrictions(pattern_from_json(ctx.cfg.restrictions, spec));
  cc.bootstrap = ctx.cfg.bootstrap;
  cc.horizons = cov.horizons;
  cc.nominal = cov.nominal;
  cc.clip_rules = resolve_clip(cov.clip, spec);
  cc.shock_map = cov.shock_map;
  cc.fit_options.sigma = ctx.cfg.sigma;
  cc.label = cov.label;
  const CoverageTable table = coverage_experiment(cc, ctx.threads);
  CsvWriter w({"spec", "b", "N", "season", "shock", "response", "horizon", "coverage", "mc_se", "failures"});
  double worst = 0.0;
  for (const auto& cell : table.cells) {
    w.cell(table.label).cell(table.block_len).cell(table.cycles).cell(cell.season).cell(cell.shock);
    w.cell(spec.var_names[static_cast<size_t>(cell.response - 1)]).cell(cell.horizon).cell(cell.coverage);
    w.cell(cell.mc_se).cell(cell.failures);
    w.end_row();
    worst = std::max(worst, std::abs(cell.coverage - cc.nominal));
  }
  ctx.write("coverage.csv", w.str());
  ctx.out << table.cells.size() << " cells, nominal " << io::format_number(cc.nominal)
          << ", largest deviation " << io::format_number(worst) << "\n";
}

void cmd_diagnose(Context& ctx) {
  const FittedModel fm = fit_model(ctx.cfg);
  ctx.data_hash = fm.data.data_hash;
  const PvarSpec& spec = fm.data.spec;
  const int S = spec.num_seasons;
  const int lag = ctx.cfg.max_lag;
  const Matrix& y = fm.data.panel.data;
  const Matrix demeaned = seasonal_demean(y, S);

  CsvWriter acf({"series", "transform", "season", "lag", "value"});
  CsvWriter sd({"series", "transform", "frequency", "value"});
  for (int v = 0; v < spec.num_vars; ++v) {
    for (const bool demean : {false, true}) {
      const Vector col = demean ? demeaned.col(v) : y.col(v);
      const std::span<const double> x(col.data(), static_cast<size_t>(col.size()));
      const std::string name = spec.var_names[static_cast<size_t>(v)];
      const std::string tr = demean ? "seasonal_demeaned" : "raw";
      const auto rho = sample_acf(x, lag);
      for (int h = 0; h <= lag; ++h) {
        acf.cell(name).cell(tr).cell(std::string("all")).cell(h).cell(rho[static_cast<size_t>(h)]);
        acf.end_row();
      }
      const Matrix pacf = periodic_acf(x, S, lag);
      for (int s = 1; s <= S; ++s)
        for (int h = 0; h <= lag; ++h) {
          acf.cell(name).cell(tr).cell(s).cell(h).cell(pacf(s - 1, h));
          acf.end_row();
        }
      const auto est = spectral_density(x, ctx.cfg.bandwidth);
      for (size_t k = 0; k < est.freqs.size(); ++k) {
        sd.cell(name).cell(tr).cell(est.freqs[k]).cell(est.values[k]);
        sd.end_row();
      }
    }
  }
  ctx.write("acf.csv", acf.str());
  ctx.write("sd.csv", sd.str());

  const IdentScheme scheme = scheme_from_json(ctx.cfg.identification, spec);
  const StructuralFit sf = identify(fm.fit, scheme);
  CsvWriter wh({"series", "transform", "lag", "value", "flagged"});
  for (const auto& row : whiteness_summary(sf.shocks, lag)) {
    wh.cell("w" + std::to_string(row.component)).cell(std::string(row.squared ? "squared" : "level")).cell(row.lag);
    wh.cell(row.acf).cell(row.flagged ? 1 : 0);
    wh.end_row();
  }
  ctx.write("whiteness.csv", wh.str());
}

}  // namespace

int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structural periodic VAR estimation, bootstrap bands and coverage experiments", "spvar"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> block;
  std::optional<int> replicates;
  std::optional<double> alpha;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"fit", "restricted least-squares fit; writes params.json"},
      {"identify", "structural impact matrices; writes structural.json and shocks.csv"},
      {"irf", "structural impulse responses; writes irf.csv"},
      {"bootstrap-ci", "bootstrap confidence bands; writes bands.csv"},
      {"simulate", "simulate a structural PVAR path; writes simulated.csv"},
      {"coverage", "Monte Carlo coverage of bootstrap bands; writes coverage.csv"},
      {"diagnose", "ACF, spectral density and whiteness tables"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "master seed override");
    sub->add_option("--b", block, "block length override");
    sub->add_option("--L", replicates, "bootstrap replicates override");
    sub->add_option("--alpha", alpha, "band level override (0.32 gives 68% bands)");
    sub->add_option("--out", out_dir, "output directory override");
    sub->add_option("--threads", threads, "worker threads (default: SPVAR_THREADS or 1)");
  }
  std::vector<std::string> args(argv.rbegin(), argv.rend());
  if (!args.empty()) args.pop_back();  // program name
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: config: " << e.what() << "\n";
    return 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    RunConfig cfg = load_config(config_path);
    if (seed) cfg.bootstrap.seed = *seed;
    if (block) cfg.bootstrap.block_len = *block;
    if (replicates) cfg.bootstrap.replicates = *replicates;
    if (alpha) cfg.bootstrap.alpha = *alpha;
    if (out_dir)
      cfg.output = fs::absolute(*out_dir).string();
    else
      cfg.output = resolve(cfg, cfg.output);
    if (!(cfg.bootstrap.alpha > 0.0 && cfg.bootstrap.alpha < 1.0))
      fail(ErrorCategory::config, "alpha must lie in (0, 1)");
    if (cfg.bootstrap.replicates < 1) fail(ErrorCategory::config, "L must be >= 1");
    if (cfg.bootstrap.block_len < 1) fail(ErrorCategory::config, "b must be >= 1");
    fs::create_directories(cfg.output);
    Context ctx{cfg, fs::path(cfg.output), command, threads.value_or(default_threads()), "", {}, out};
    if (command == "fit") cmd_fit(ctx);
    else if (command == "identify") cmd_identify(ctx);
    else if (command == "irf") cmd_irf(ctx);
    else if (command == "bootstrap-ci") cmd_bootstrap(ctx);
    else if (command == "simulate") cmd_simulate(ctx);
    else if (command == "coverage") cmd_coverage(ctx);
    else if (command == "diagnose") cmd_diagnose(ctx);
    ctx.write_manifest();
    return 0;
  } catch (const Error& e) {
    err << "error: " << category_name(e.category()) << ": " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const fs::filesystem_error& e) {
    err << "error: data: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace spvar::cli
