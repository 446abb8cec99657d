// diskstat: exact, asymptotic and Monte Carlo disk-counting statistics for
// the Mittag-Leffler random normal matrix ensemble with merging radii.
//
// Subcommands:
//   mgf       exact log moment generating function over an n-grid
//   coeffs    four-term expansion coefficients C1..C4 with error estimates
//   converge  exact-vs-asymptotic residuals and the fitted decay exponent
//   sample    Monte Carlo validation against exact and asymptotic values
//   moments   closed-form cumulant coefficient tables and the CLT matrix
//
// Exit codes: 0 success, 2 configuration validation error, 3 numerical
// failure. Identical invocations produce identical output bytes.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "diskstat/diskstat.hpp"

namespace {

using ordered_json = nlohmann::ordered_json;
using namespace diskstat;

struct RunConfig {
  double b = 1.0;
  double alpha = 0.0;
  long long n = 1000;
  std::vector<long long> n_grid;
  std::string regime = "bulk";
  double r = 0.5;
  std::vector<double> offsets{0.0};
  std::vector<double> u{0.1};
  double rel_tol = 1e-10;
  unsigned long long seed = 1;
  long long replicas = 20000;
  std::string format = "csv";
  std::string out;
  int threads = 1;
  bool print_config = false;
};

struct Cell {
  enum class Kind { Number, Text, Empty } kind = Kind::Empty;
  double num = 0.0;
  std::string text;

  Cell() = default;
  Cell(double v) : kind(Kind::Number), num(v) {}
  Cell(const char* s) : kind(Kind::Text), text(s) {}
  Cell(std::string s) : kind(Kind::Text), text(std::move(s)) {}
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

std::string format_num(double v, int sig_digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", sig_digits, v);
  return buf;
}

std::string to_csv(const Table& t, const std::vector<std::string>& trailer) {
  std::string s;
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (c) s += ',';
    s += t.columns[c];
  }
  s += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) s += ',';
      switch (row[c].kind) {
        case Cell::Kind::Number: s += format_num(row[c].num, 12); break;
        case Cell::Kind::Text: s += row[c].text; break;
        case Cell::Kind::Empty: break;
      }
    }
    s += '\n';
  }
  for (const auto& line : trailer) {
    s += "# " + line + '\n';
  }
  return s;
}

ordered_json config_json(const std::string& command, const RunConfig& cfg) {
  ordered_json j;
  j["command"] = command;
  j["b"] = cfg.b;
  j["alpha"] = cfg.alpha;
  if (!cfg.n_grid.empty()) {
    j["n_grid"] = cfg.n_grid;
  } else {
    j["n"] = cfg.n;
  }
  j["regime"] = cfg.regime;
  if (cfg.regime == "bulk") j["r"] = cfg.r;
  j["offsets"] = cfg.offsets;
  j["u"] = cfg.u;
  j["rel_tol"] = cfg.rel_tol;
  j["seed"] = cfg.seed;
  j["replicas"] = cfg.replicas;
  j["format"] = cfg.format;
  j["out"] = cfg.out;
  j["threads"] = cfg.threads;
  return j;
}

std::string to_json(const std::string& command, const RunConfig& cfg, const Table& t,
                    const ordered_json& extras) {
  ordered_json j;
  j["command"] = command;
  j["config"] = config_json(command, cfg);
  j["columns"] = t.columns;
  ordered_json rows = ordered_json::array();
  for (const auto& row : t.rows) {
    ordered_json r = ordered_json::array();
    for (const auto& cell : row) {
      switch (cell.kind) {
        case Cell::Kind::Number: r.push_back(cell.num); break;
        case Cell::Kind::Text: r.push_back(cell.text); break;
        case Cell::Kind::Empty: r.push_back(nullptr); break;
      }
    }
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  for (auto it = extras.begin(); it != extras.end(); ++it) {
    j[it.key()] = it.value();
  }
  return j.dump(2) + "\n";
}

void emit(const RunConfig& cfg, const std::string& payload) {
  if (cfg.out.empty()) {
    std::cout << payload;
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open output path --out " + cfg.out);
  f << payload;
}

// range checks with messages naming the offending flag
void validate_common(const RunConfig& cfg, bool needs_radius_cfg, bool needs_u = true) {
  if (!(cfg.b > 0.0)) throw std::invalid_argument("--b must be > 0");
  if (!(cfg.alpha > -1.0)) throw std::invalid_argument("--alpha must be > -1");
  if (cfg.regime != "bulk" && cfg.regime != "edge") {
    throw std::invalid_argument("--regime must be 'bulk' or 'edge'");
  }
  if (cfg.format != "csv" && cfg.format != "json") {
    throw std::invalid_argument("--format must be 'csv' or 'json'");
  }
  if (!(cfg.rel_tol > 0.0 && cfg.rel_tol < 1.0)) {
    throw std::invalid_argument("--rel-tol must lie in (0,1)");
  }
  if (cfg.threads < 1) throw std::invalid_argument("--threads must be >= 1");
  if (needs_radius_cfg) {
    if (cfg.offsets.empty()) throw std::invalid_argument("--offsets must be nonempty");
    if (!strictly_increasing(cfg.offsets)) {
      throw std::invalid_argument("--offsets must be strictly increasing");
    }
    if (needs_u && cfg.u.size() != cfg.offsets.size()) {
      throw std::invalid_argument("--u must have one entry per offset in --offsets");
    }
    if (needs_u && !all_finite(cfg.u)) {
      throw std::invalid_argument("--u entries must be finite");
    }
    if (cfg.regime == "bulk" &&
        !(cfg.r > 0.0 && cfg.r < std::pow(cfg.b, -1.0 / (2.0 * cfg.b)))) {
      throw std::invalid_argument("--r must lie in (0, b^{-1/(2b)}) for the bulk regime");
    }
  }
}

MergeConfig merge_config(const RunConfig& cfg) {
  MergeConfig mc;
  mc.regime = cfg.regime == "bulk" ? Regime::Bulk : Regime::Edge;
  mc.base_radius = cfg.r;
  mc.offsets = cfg.offsets;
  return mc;
}

std::vector<long long> effective_grid(const RunConfig& cfg) {
  if (!cfg.n_grid.empty()) return cfg.n_grid;
  return {cfg.n};
}

QuadratureSpec quad_spec(const RunConfig& cfg) {
  QuadratureSpec spec;
  spec.rel_tol = cfg.rel_tol;
  spec.abs_tol = std::min(1e-13, cfg.rel_tol);
  return spec;
}

// ---- subcommands ----

int cmd_mgf(const RunConfig& cfg) {
  validate_common(cfg, true);
  for (long long n : effective_grid(cfg)) {
    if (n < 1) throw std::invalid_argument("--n / --n-grid entries must be >= 1");
  }
  Table t;
  t.columns = {"n"};
  for (std::size_t l = 1; l <= cfg.u.size(); ++l) t.columns.push_back("u" + std::to_string(l));
  t.columns.push_back("log_mgf");
  const MergeConfig mc = merge_config(cfg);
  for (long long n : effective_grid(cfg)) {
    EnsembleParams params{cfg.b, cfg.alpha, n};
    const auto rs = radii(params, mc);
    const double v = log_mgf_exact(params, rs, cfg.u, cfg.threads);
    std::vector<Cell> row;
    row.emplace_back(static_cast<double>(n));
    for (double uu : cfg.u) row.emplace_back(uu);
    row.emplace_back(v);
    t.rows.push_back(std::move(row));
  }
  emit(cfg, cfg.format == "csv" ? to_csv(t, {}) : to_json("mgf", cfg, t, {}));
  return 0;
}

int cmd_coeffs(const RunConfig& cfg) {
  validate_common(cfg, true);
  Table t;
  t.columns = {"C1", "C2", "C3", "C4", "err1", "err2", "err3", "err4"};
  const auto c = expansion_coeffs(cfg.b, cfg.alpha, merge_config(cfg), cfg.u, quad_spec(cfg));
  std::vector<Cell> row;
  for (int k = 0; k < 4; ++k) row.emplace_back(c.c[k]);
  for (int k = 0; k < 4; ++k) row.emplace_back(c.err[k]);
  t.rows.push_back(std::move(row));
  emit(cfg, cfg.format == "csv" ? to_csv(t, {}) : to_json("coeffs", cfg, t, {}));
  return 0;
}

int cmd_converge(const RunConfig& cfg) {
  validate_common(cfg, true);
  const auto grid = effective_grid(cfg);
  if (grid.size() < 4) {
    throw std::invalid_argument("--n-grid needs at least 4 points for a convergence fit");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 2) throw std::invalid_argument("--n-grid entries must be >= 2");
    if (i > 0 && grid[i] <= grid[i - 1]) {
      throw std::invalid_argument("--n-grid must be strictly increasing");
    }
  }
  // geometric check (integer rounding tolerated)
  const double ratio0 = static_cast<double>(grid[1]) / static_cast<double>(grid[0]);
  for (std::size_t i = 2; i < grid.size(); ++i) {
    const double ratio = static_cast<double>(grid[i]) / static_cast<double>(grid[i - 1]);
    if (std::abs(ratio / ratio0 - 1.0) > 0.2) {
      throw std::invalid_argument("--n-grid must be (approximately) geometric");
    }
  }

  const MergeConfig mc = merge_config(cfg);
  const auto coeffs = expansion_coeffs(cfg.b, cfg.alpha, mc, cfg.u, quad_spec(cfg));

  Table t;
  t.columns = {"n", "exact", "asymptotic", "residual", "normalized_residual"};
  std::vector<double> ln_n, ln_r;
  for (long long n : grid) {
    EnsembleParams params{cfg.b, cfg.alpha, n};
    const auto rs = radii(params, mc);
    const double exact = log_mgf_exact(params, rs, cfg.u, cfg.threads);
    const double asym = eval_expansion(coeffs, static_cast<double>(n));
    const double res = exact - asym;
    const double lg = std::log(static_cast<double>(n));
    const double normalized = std::abs(res) * static_cast<double>(n) / (lg * lg);
    t.rows.push_back({Cell(static_cast<double>(n)), Cell(exact), Cell(asym), Cell(res),
                      Cell(normalized)});
    if (std::abs(res) > 1e-14) {
      ln_n.push_back(lg);
      ln_r.push_back(std::log(std::abs(res)));
    }
  }
  // log-log least squares slope of |residual| vs n
  double exponent = std::numeric_limits<double>::quiet_NaN();
  if (ln_n.size() >= 2) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < ln_n.size(); ++i) {
      sx += ln_n[i];
      sy += ln_r[i];
      sxx += ln_n[i] * ln_n[i];
      sxy += ln_n[i] * ln_r[i];
    }
    const double nn = static_cast<double>(ln_n.size());
    exponent = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  }
  ordered_json extras;
  if (std::isnan(exponent)) {
    extras["fitted_exponent"] = nullptr;
  } else {
    extras["fitted_exponent"] = exponent;
  }
  emit(cfg, cfg.format == "csv"
                ? to_csv(t, {"fitted_exponent=" + format_num(exponent, 12)})
                : to_json("converge", cfg, t, extras));
  return 0;
}

int cmd_sample(const RunConfig& cfg) {
  validate_common(cfg, true);
  if (cfg.n < 1) throw std::invalid_argument("--n must be >= 1");
  if (cfg.replicas < 100) throw std::invalid_argument("--replicas must be >= 100");

  const MergeConfig mc = merge_config(cfg);
  EnsembleParams params{cfg.b, cfg.alpha, cfg.n};
  const auto rs = radii(params, mc);
  const auto batch =
      sample_counts(params, rs, static_cast<std::size_t>(cfg.replicas), cfg.seed, cfg.threads);
  const ClosedFormMoments cf(cfg.b, cfg.alpha, mc, quad_spec(cfg));
  const auto sigma = clt_covariance(cfg.b, cfg.alpha, mc, quad_spec(cfg));
  const std::size_t m = rs.size();
  const double nd = static_cast<double>(cfg.n);

  Table t;
  t.columns = {"statistic", "l", "k", "empirical", "stderr", "exact", "asymptotic", "z_exact"};
  auto push = [&](const std::string& stat, std::size_t l, std::optional<std::size_t> k,
                  CumulantEstimate est, double exact, double asym) {
    std::vector<Cell> row;
    row.emplace_back(stat);
    row.emplace_back(static_cast<double>(l + 1));
    if (k) {
      row.emplace_back(static_cast<double>(*k + 1));
    } else {
      row.emplace_back();
    }
    row.emplace_back(est.value);
    row.emplace_back(est.stderr_);
    row.emplace_back(exact);
    row.emplace_back(asym);
    row.emplace_back(est.stderr_ > 0.0 ? (est.value - exact) / est.stderr_ : 0.0);
    t.rows.push_back(std::move(row));
  };

  for (std::size_t l = 0; l < m; ++l) {
    std::vector<int> jv(m, 0);
    jv[l] = 1;
    push("mean", l, std::nullopt, empirical_cumulants(batch, jv),
         mean_exact(params, rs[l]), cf.mean(l).eval(nd));
    jv[l] = 2;
    push("variance", l, std::nullopt, empirical_cumulants(batch, jv),
         variance_exact(params, rs[l]), cf.variance(l).eval(nd));
  }
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t k = l + 1; k < m; ++k) {
      std::vector<int> jv(m, 0);
      jv[l] = 1;
      jv[k] = 1;
      push("covariance", l, k, empirical_cumulants(batch, jv),
           covariance_exact(params, rs[l], rs[k]), cf.covariance(l, k).eval(nd));
    }
  }
  // standardized-moment diagnostics: per-column mean and variance of the
  // CLT normalization (limits 0 and 1), then pair correlations vs Sigma
  {
    const auto z = standardize(batch, mc, mc.regime);
    const auto norm = clt_normalization(params, mc);
    const auto reps = batch.replicas;
    for (std::size_t l = 0; l < m; ++l) {
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t i = 0; i < reps; ++i) {
        s1 += z[i * m + l];
        s2 += z[i * m + l] * z[i * m + l];
      }
      const double zmean = s1 / static_cast<double>(reps);
      const double zvar =
          (s2 - reps * zmean * zmean) / (static_cast<double>(reps) - 1.0);
      CumulantEstimate zm{zmean, std::sqrt(zvar / static_cast<double>(reps))};
      push("std_mean", l, std::nullopt, zm,
           (mean_exact(params, rs[l]) - norm.center[l]) / norm.scale[l], 0.0);
      CumulantEstimate zv{zvar,
                          zvar * std::sqrt(2.0 / (static_cast<double>(reps) - 1.0))};
      push("std_variance", l, std::nullopt, zv,
           variance_exact(params, rs[l]) / (norm.scale[l] * norm.scale[l]), 1.0);
    }
  }
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t k = l + 1; k < m; ++k) {
      const auto corr = empirical_correlation(batch, l, k);
      const double exact_corr =
          covariance_exact(params, rs[l], rs[k]) /
          std::sqrt(variance_exact(params, rs[l]) * variance_exact(params, rs[k]));
      push("std_correlation", l, k, corr, exact_corr, sigma[l * m + k]);
    }
  }
  emit(cfg, cfg.format == "csv" ? to_csv(t, {}) : to_json("sample", cfg, t, {}));
  return 0;
}

int cmd_moments(const RunConfig& cfg) {
  validate_common(cfg, true, /*needs_u=*/false);
  const MergeConfig mc = merge_config(cfg);
  const ClosedFormMoments cf(cfg.b, cfg.alpha, mc, quad_spec(cfg));
  const auto sigma = clt_covariance(cfg.b, cfg.alpha, mc, quad_spec(cfg));
  const std::size_t m = cfg.offsets.size();

  Table t;
  t.columns = {"statistic", "l", "k", "n_coef", "sqrtn_coef", "const_coef",
               "invsqrtn_coef", "value"};
  auto push_exp = [&](const std::string& stat, std::size_t l, std::optional<std::size_t> k,
                      const MomentExpansion& e) {
    std::vector<Cell> row;
    row.emplace_back(stat);
    row.emplace_back(static_cast<double>(l + 1));
    if (k) {
      row.emplace_back(static_cast<double>(*k + 1));
    } else {
      row.emplace_back();
    }
    row.emplace_back(e.n_coef);
    row.emplace_back(e.sqrtn_coef);
    row.emplace_back(e.const_coef);
    row.emplace_back(e.invsqrtn_coef);
    row.emplace_back();
    t.rows.push_back(std::move(row));
  };
  for (std::size_t l = 0; l < m; ++l) push_exp("mean", l, std::nullopt, cf.mean(l));
  for (std::size_t l = 0; l < m; ++l) push_exp("variance", l, std::nullopt, cf.variance(l));
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t k = l + 1; k < m; ++k) {
      push_exp("covariance", l, k, cf.covariance(l, k));
    }
  }
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t k = l + 1; k < m; ++k) {
      std::vector<Cell> row;
      row.emplace_back("clt_sigma");
      row.emplace_back(static_cast<double>(l + 1));
      row.emplace_back(static_cast<double>(k + 1));
      for (int skip = 0; skip < 4; ++skip) row.emplace_back();
      row.emplace_back(sigma[l * m + k]);
      t.rows.push_back(std::move(row));
    }
  }
  emit(cfg, cfg.format == "csv" ? to_csv(t, {}) : to_json("moments", cfg, t, {}));
  return 0;
}

void add_common_options(CLI::App* sub, RunConfig& cfg, bool sampling) {
  sub->add_option("--b", cfg.b, "potential exponent b > 0")->capture_default_str();
  sub->add_option("--alpha", cfg.alpha, "point charge exponent alpha > -1")
      ->capture_default_str();
  sub->add_option("--n", cfg.n, "number of points")->capture_default_str();
  sub->add_option("--n-grid", cfg.n_grid, "comma-separated n values (overrides --n)")
      ->delimiter(',');
  sub->add_option("--regime", cfg.regime, "merging regime: bulk or edge")
      ->capture_default_str();
  sub->add_option("--r", cfg.r, "bulk base radius in (0, b^{-1/(2b)})")
      ->capture_default_str();
  sub->add_option("--offsets", cfg.offsets,
                  "comma-separated merge offsets s1 < s2 < ... (units of n^{-1/2})")
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--u", cfg.u, "comma-separated fugacities, one per offset")
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--rel-tol", cfg.rel_tol, "quadrature relative tolerance")
      ->capture_default_str();
  if (sampling) {
    sub->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
    sub->add_option("--replicas", cfg.replicas, "Monte Carlo replicas")
        ->capture_default_str();
  }
  sub->add_option("--format", cfg.format, "output format: csv or json")
      ->capture_default_str();
  sub->add_option("--out", cfg.out, "output path (default: stdout)");
  sub->add_option("--threads", cfg.threads, "worker thread cap")
      ->envname("DISKSTAT_THREADS")
      ->capture_default_str();
  sub->add_flag("--print-config", cfg.print_config,
                "print the effective configuration as JSON and exit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"disk counting statistics for the Mittag-Leffler ensemble"};
  app.require_subcommand(1);
  // option defaults per subcommand come from INI sections ([mgf], [coeffs], ...);
  // command-line flags take precedence over the file
  app.set_config("--config", "", "read option defaults from an INI file");

  RunConfig cfg;
  auto* mgf = app.add_subcommand("mgf", "exact log-MGF over an n-grid");
  add_common_options(mgf, cfg, false);
  auto* coeffs = app.add_subcommand("coeffs", "expansion coefficients C1..C4");
  add_common_options(coeffs, cfg, false);
  auto* converge = app.add_subcommand("converge", "exact vs asymptotic residuals");
  add_common_options(converge, cfg, false);
  auto* sample = app.add_subcommand("sample", "Monte Carlo validation");
  add_common_options(sample, cfg, true);
  auto* moments = app.add_subcommand("moments", "closed-form cumulant coefficients");
  add_common_options(moments, cfg, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (cfg.print_config) {
      std::cout << config_json(command, cfg).dump(2) << "\n";
      return 0;
    }
    if (command == "mgf") return cmd_mgf(cfg);
    if (command == "coeffs") return cmd_coeffs(cfg);
    if (command == "converge") return cmd_converge(cfg);
    if (command == "sample") return cmd_sample(cfg);
    if (command == "moments") return cmd_moments(cfg);
    std::cerr << "unknown subcommand " << command << "\n";
    return 2;
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::domain_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  }
}
