#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "carbmon/arma.hpp"
#include "carbmon/calibration.hpp"
#include "carbmon/diagnostics.hpp"
#include "carbmon/errors.hpp"
#include "carbmon/flux_data.hpp"
#include "carbmon/monitor.hpp"
#include "carbmon/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitReject = 3;
constexpr int kExitData = 4;
constexpr int kExitNumerical = 5;

int exit_code_for(carbmon::errc code) {
  switch (code) {
    case carbmon::errc::non_convergence:
    case carbmon::errc::numerical_underflow:
      return kExitNumerical;
    default:
      return kExitData;
  }
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Shortest decimal that parses back to the same double; used for labels
// such as alpha where 17 significant digits would be noise.
std::string shortest(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string f2(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

double parse_num(std::string_view s, const std::string& what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    carbmon::raise(carbmon::errc::invalid_argument,
                   "cannot parse " + what + " '" + std::string(s) + "'");
  }
  return v;
}

std::vector<double> parse_alpha_list(const std::string& text) {
  std::vector<double> alphas;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::size_t end = comma == std::string::npos ? text.size() : comma;
    alphas.push_back(
        parse_num(std::string_view(text).substr(pos, end - pos), "alpha"));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return alphas;
}

// Horizon flags accept either a positive year count or the word
// "indefinite"; the latter is only usable with a boundary family whose
// f(t)/sqrt(t) diverges.
int resolve_horizon(const std::string& text, const std::string& f_kind) {
  if (text == "indefinite") {
    if (!carbmon::f_kind_supports_indefinite(f_kind)) {
      carbmon::raise(carbmon::errc::invalid_horizon,
                     "boundary family '" + f_kind +
                         "' cannot control size on an indefinite horizon "
                         "(f(t)/sqrt(t) must diverge); give a finite horizon");
    }
    return carbmon::kIndefiniteProxyHorizon;
  }
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    carbmon::raise(carbmon::errc::invalid_horizon,
                   "horizon must be a year count or 'indefinite', got '" +
                       text + "'");
  }
  return v;
}

std::string_view trim_ws(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

// Reads option defaults from the key=value file named by --config and
// appends them to args as --key=value tokens, skipping every key the
// command line already sets. Keys are the long option names of the invoked
// subcommand without the leading dashes; '#' starts a comment; boolean
// flags take true/false.
void inject_config_defaults(std::vector<std::string>& args, CLI::App& app) {
  // The leaf subcommand owns the options the file may set.
  CLI::App* target = &app;
  std::size_t opts_begin = 0;
  while (opts_begin < args.size()) {
    CLI::App* next = nullptr;
    for (CLI::App* sub :
         target->get_subcommands([](const CLI::App*) { return true; })) {
      if (sub->get_name() == args[opts_begin]) {
        next = sub;
        break;
      }
    }
    if (next == nullptr) break;
    target = next;
    ++opts_begin;
  }
  if (target == &app) return;

  std::string path;
  for (std::size_t i = opts_begin; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    }
  }
  if (path.empty()) return;

  std::ifstream file(path);
  if (!file) {
    carbmon::raise(carbmon::errc::io_error, "cannot open config file " + path);
  }

  const auto given_on_cli = [&](const std::string& flag) {
    for (std::size_t i = opts_begin; i < args.size(); ++i) {
      if (args[i] == flag || args[i].rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };

  std::string line;
  int lineno = 0;
  while (std::getline(file, line)) {
    ++lineno;
    const std::string_view body = trim_ws(line);
    if (body.empty() || body.front() == '#') continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string_view::npos) {
      carbmon::raise(carbmon::errc::invalid_argument,
                     "config file " + path + " line " +
                         std::to_string(lineno) + ": expected key=value");
    }
    const std::string key(trim_ws(body.substr(0, eq)));
    std::string_view value = trim_ws(body.substr(eq + 1));
    if (value.size() >= 2 &&
        ((value.front() == '"' && value.back() == '"') ||
         (value.front() == '\'' && value.back() == '\''))) {
      value = value.substr(1, value.size() - 2);
    }
    if (key == "config") {
      carbmon::raise(carbmon::errc::invalid_argument,
                     "config files cannot nest (line " +
                         std::to_string(lineno) + ")");
    }
    const std::string flag = "--" + key;
    CLI::Option* opt = target->get_option_no_throw(flag);
    if (opt == nullptr) {
      carbmon::raise(carbmon::errc::invalid_argument,
                     "unknown config key '" + key + "' for '" +
                         target->get_display_name(true) + "'");
    }
    if (given_on_cli(flag)) continue;
    if (opt->get_expected_min() == 0) {
      if (value == "true" || value == "1" || value == "yes" ||
          value == "on") {
        args.push_back(flag);
      } else if (value != "false" && value != "0" && value != "no" &&
                 value != "off") {
        carbmon::raise(carbmon::errc::invalid_argument,
                       "config key '" + key + "' is a flag; use true/false");
      }
    } else if (opt->get_expected_min() > 1) {
      args.push_back(flag);
      std::string_view rest = value;
      while (!rest.empty()) {
        const std::size_t sp = rest.find(' ');
        args.push_back(std::string(trim_ws(rest.substr(0, sp))));
        if (sp == std::string_view::npos) break;
        rest = trim_ws(rest.substr(sp + 1));
      }
    } else {
      args.push_back(flag + "=" + std::string(value));
    }
  }
}

// Writes to --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) {
        carbmon::raise(carbmon::errc::io_error,
                       "cannot open output file " + path);
      }
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

carbmon::Vintage load_data(const std::string& path, const std::string& label) {
  return carbmon::load_vintage(path, label);
}

// Calibrated constant for (T, alpha, f, B, seed): cache hit, or a fresh
// Monte Carlo run stored back to the cache.
carbmon::BoundarySpec resolve_boundary(int horizon, double alpha,
                                       const std::string& f_kind,
                                       std::uint64_t replications,
                                       std::uint64_t seed, int threads,
                                       const std::string& cache_path,
                                       double preset_c) {
  if (preset_c > 0.0) {
    carbmon::BoundarySpec spec;
    spec.horizon = horizon;
    spec.alpha = alpha;
    spec.f_kind = f_kind;
    spec.c = preset_c;
    spec.replications = 0;
    spec.seed = seed;
    return spec;
  }
  if (!cache_path.empty()) {
    const auto hit = carbmon::cache_lookup(cache_path, horizon, alpha, f_kind,
                                           replications, seed);
    if (hit) {
      carbmon::BoundarySpec spec;
      spec.horizon = horizon;
      spec.alpha = alpha;
      spec.f_kind = f_kind;
      spec.c = *hit;
      spec.replications = replications;
      spec.seed = seed;
      return spec;
    }
  }
  carbmon::BoundarySpec spec = carbmon::calibrate(horizon, alpha, f_kind,
                                                  replications, seed, threads);
  if (!cache_path.empty()) carbmon::cache_store(cache_path, spec);
  return spec;
}

// --- ingest ---------------------------------------------------------------

struct IngestOpts {
  std::string data;
  std::string label;
  std::string format = "text";
  std::string out;
  bool echo = false;
};

int run_ingest(const IngestOpts& o) {
  const carbmon::Vintage v = load_data(o.data, o.label);
  const carbmon::BudgetImbalanceSeries bi = carbmon::budget_imbalance(v);
  Output out(o.out);

  if (o.echo) {
    carbmon::serialize_vintage(v, out.stream());
    return kExitOk;
  }
  if (o.format == "csv") {
    out.stream() << "year,imbalance\n";
    for (std::size_t i = 0; i < bi.values.size(); ++i) {
      out.stream() << bi.years[i] << ',' << g17(bi.values[i]) << '\n';
    }
    return kExitOk;
  }
  const carbmon::Moments m = carbmon::descriptive_stats(bi.values);
  out.stream() << "vintage " << v.label() << ": " << v.size()
               << " years, " << v.first_year() << "-" << v.last_year() << '\n'
               << "budget imbalance: mean " << f2(m.mean) << ", std "
               << f2(m.std_dev) << " GtC/yr\n";
  return kExitOk;
}

// --- diagnose ---------------------------------------------------------------

struct DiagnoseOpts {
  std::string data;
  std::string series = "both";
  std::string format = "text";
  std::string out;
};

struct DiagRow {
  std::string name;
  std::size_t n = 0;
  carbmon::DiagnosticsReport report;
  double phi = 0.0;
  double sigma = 0.0;
};

DiagRow make_row(const std::string& name, std::span<const double> x) {
  DiagRow row;
  row.name = name;
  row.n = x.size();
  row.report = carbmon::diagnose(x);
  const carbmon::Ar1Fit fit = carbmon::fit_ar1(x);
  row.phi = fit.phi;
  row.sigma = fit.sigma;
  return row;
}

int run_diagnose(const DiagnoseOpts& o) {
  const carbmon::Vintage v = load_data(o.data, "");
  const carbmon::BudgetImbalanceSeries bi = carbmon::budget_imbalance(v);
  const carbmon::Ar1Fit fit = carbmon::fit_ar1(bi.values);

  std::vector<DiagRow> rows;
  if (o.series == "imbalance" || o.series == "both") {
    rows.push_back(make_row("imbalance", bi.values));
  }
  if (o.series == "residuals" || o.series == "both") {
    rows.push_back(make_row("residuals", fit.residuals));
  }
  if (rows.empty()) {
    carbmon::raise(carbmon::errc::invalid_argument,
                   "--series must be imbalance, residuals, or both");
  }

  Output out(o.out);
  if (o.format == "csv") {
    out.stream()
        << "series,n,mean,std,skew,kurt,phi,sigma,jb,ks,ad,dw,q1,q5\n";
    for (const DiagRow& r : rows) {
      const auto& rep = r.report;
      out.stream() << r.name << ',' << r.n << ',' << g17(rep.moments.mean)
                   << ',' << g17(rep.moments.std_dev) << ','
                   << g17(rep.moments.skew) << ',' << g17(rep.moments.kurt)
                   << ',' << g17(r.phi) << ',' << g17(r.sigma) << ','
                   << g17(rep.jb) << ',' << g17(rep.ks) << ',' << g17(rep.ad)
                   << ',' << g17(rep.dw) << ',' << g17(rep.q.at(1)) << ','
                   << g17(rep.q.at(5)) << '\n';
    }
    return kExitOk;
  }

  char buf[200];
  out.stream() << "series       n   Mean    Std   Skew   Kurt    phi  sigma"
                  "      N     KS     AD     DW   Q(1)   Q(5)\n";
  for (const DiagRow& r : rows) {
    const auto& rep = r.report;
    std::snprintf(buf, sizeof(buf),
                  "%-10s %3zu %6.2f %6.2f %6.2f %6.2f %6.2f %6.2f %6.2f "
                  "%6.2f %6.2f %6.2f %6.2f %6.2f\n",
                  r.name.c_str(), r.n, rep.moments.mean, rep.moments.std_dev,
                  rep.moments.skew, rep.moments.kurt, r.phi, r.sigma, rep.jb,
                  rep.ks, rep.ad, rep.dw, rep.q.at(1), rep.q.at(5));
    out.stream() << buf;
  }
  for (const DiagRow& r : rows) {
    out.stream() << r.name << ": "
                 << (r.report.gaussianity_rejected()
                         ? "Gaussianity rejected at 5%"
                         : "no Gaussianity rejection at 5%")
                 << (r.report.ad_underflow ? " (AD tail underflow clamped)"
                                           : "")
                 << '\n';
  }
  return kExitOk;
}

// --- fit ---------------------------------------------------------------

struct FitOpts {
  std::string data;
  int k = 0;  // 0 = full series
  int p = 1;
  int q = 0;
  std::vector<int> select;  // p_max q_max
  std::string format = "text";
  std::string out;
};

int run_fit(const FitOpts& o) {
  const carbmon::Vintage v = load_data(o.data, "");
  const carbmon::BudgetImbalanceSeries bi = carbmon::budget_imbalance(v);
  std::span<const double> y(bi.values);
  if (o.k > 0) {
    if (std::size_t(o.k) > y.size()) {
      carbmon::raise(carbmon::errc::window_mismatch,
                     "fit window " + std::to_string(o.k) +
                         " exceeds series length " +
                         std::to_string(y.size()));
    }
    y = y.first(std::size_t(o.k));
  }

  Output out(o.out);
  int p = o.p, q = o.q;
  carbmon::BicSelection sel;
  if (!o.select.empty()) {
    sel = carbmon::bic_select(y, o.select[0], o.select[1]);
    p = sel.p;
    q = sel.q;
  }
  const carbmon::ArmaFit fit = carbmon::fit_arma(y, p, q);
  const std::vector<double> innov =
      carbmon::arma_innovations(y, fit.phi, fit.psi);
  std::vector<double> std_resid(innov.size());
  for (std::size_t i = 0; i < innov.size(); ++i) {
    std_resid[i] = innov[i] / fit.sigma;
  }
  const carbmon::DiagnosticsReport resid_report =
      carbmon::diagnose(std_resid);

  if (o.format == "csv") {
    out.stream() << "key,value\n";
    out.stream() << "n," << y.size() << '\n';
    out.stream() << "p," << p << '\n' << "q," << q << '\n';
    for (std::size_t i = 0; i < fit.phi.size(); ++i) {
      out.stream() << "phi_" << i + 1 << ',' << g17(fit.phi[i]) << '\n';
    }
    for (std::size_t i = 0; i < fit.psi.size(); ++i) {
      out.stream() << "psi_" << i + 1 << ',' << g17(fit.psi[i]) << '\n';
    }
    out.stream() << "sigma," << g17(fit.sigma) << '\n';
    out.stream() << "loglik," << g17(fit.loglik) << '\n';
    out.stream() << "bic," << g17(fit.bic) << '\n';
    out.stream() << "resid_jb," << g17(resid_report.jb) << '\n';
    out.stream() << "resid_ks," << g17(resid_report.ks) << '\n';
    out.stream() << "resid_ad," << g17(resid_report.ad) << '\n';
    out.stream() << "resid_dw," << g17(resid_report.dw) << '\n';
    out.stream() << "resid_q1," << g17(resid_report.q.at(1)) << '\n';
    out.stream() << "resid_q5," << g17(resid_report.q.at(5)) << '\n';
    if (!o.select.empty()) {
      for (const carbmon::BicCell& cell : sel.grid) {
        out.stream() << "bic_" << cell.p << '_' << cell.q << ','
                     << (cell.converged ? g17(cell.bic) : "skipped") << '\n';
      }
    }
    return kExitOk;
  }

  out.stream() << "ARMA(" << p << ',' << q << ") fit on " << y.size()
               << " observations\n";
  for (std::size_t i = 0; i < fit.phi.size(); ++i) {
    out.stream() << "  phi_" << i + 1 << " = " << f2(fit.phi[i]) << '\n';
  }
  for (std::size_t i = 0; i < fit.psi.size(); ++i) {
    out.stream() << "  psi_" << i + 1 << " = " << f2(fit.psi[i]) << '\n';
  }
  out.stream() << "  sigma = " << f2(fit.sigma) << '\n'
               << "  loglik = " << f2(fit.loglik)
               << ", bic = " << f2(fit.bic) << '\n';
  if (!fit.phi.empty() && std::abs(fit.phi.front()) >= 1.0) {
    out.stream() << "warning: |phi| >= 1; stationarity assumption breached\n";
  }
  if (!o.select.empty()) {
    out.stream() << "selected by BIC over (0.." << o.select[0] << ") x (0.."
                 << o.select[1] << ")\n";
    for (const std::string& w : sel.warnings) {
      out.stream() << "warning: " << w << '\n';
    }
  }
  out.stream() << "residual diagnostics: N " << f2(resid_report.jb) << ", KS "
               << f2(resid_report.ks) << ", AD " << f2(resid_report.ad)
               << ", DW " << f2(resid_report.dw) << ", Q(1) "
               << f2(resid_report.q.at(1)) << ", Q(5) "
               << f2(resid_report.q.at(5)) << '\n'
               << "  "
               << (resid_report.gaussianity_rejected()
                       ? "Gaussianity rejected at 5%"
                       : "no Gaussianity rejection at 5%")
               << '\n';
  return kExitOk;
}

// --- calibrate ---------------------------------------------------------------

struct CalibrateOpts {
  std::string horizon = "30";
  double alpha = 0.05;
  std::string f_kind = "sqrt";
  std::uint64_t replications = carbmon::kDefaultReplications;
  std::uint64_t seed = carbmon::kDefaultSeed;
  int threads = 0;
  std::string cache;
  std::string format = "text";
  std::string out;
};

int run_calibrate(const CalibrateOpts& o) {
  const int horizon = resolve_horizon(o.horizon, o.f_kind);
  const carbmon::BoundarySpec spec =
      resolve_boundary(horizon, o.alpha, o.f_kind, o.replications, o.seed,
                       o.threads, o.cache, 0.0);
  Output out(o.out);
  if (o.format == "csv") {
    out.stream() << "T,alpha,f,B,seed,c\n"
                 << spec.horizon << ',' << shortest(spec.alpha) << ','
                 << spec.f_kind << ',' << spec.replications << ',' << spec.seed
                 << ',' << g17(spec.c) << '\n';
  } else {
    out.stream() << "c = " << f2(spec.c) << "  (T = " << spec.horizon
                 << ", alpha = " << shortest(spec.alpha) << ", f = " << spec.f_kind
                 << ", B = " << spec.replications << ", seed = " << spec.seed
                 << ")\n";
  }
  return kExitOk;
}

// --- table ---------------------------------------------------------------

struct TableOpts {
  std::string horizon = "30";
  std::string alphas = "0.05,0.10,0.32";
  int years = 10;
  int start_year = 2020;
  std::string f_kind = "sqrt";
  std::uint64_t replications = carbmon::kDefaultReplications;
  std::uint64_t seed = carbmon::kDefaultSeed;
  int threads = 0;
  std::string cache;
  std::string format = "csv";
  std::string out;
};

int run_table(const TableOpts& o) {
  const int horizon = resolve_horizon(o.horizon, o.f_kind);
  const std::vector<double> alphas = parse_alpha_list(o.alphas);

  carbmon::CriticalValueTable table;
  if (o.cache.empty()) {
    table = carbmon::critical_value_table(horizon, alphas, o.years,
                                          o.replications, o.seed,
                                          o.start_year, o.threads);
  } else {
    // Row constants resolved one by one through the cache; single-row
    // calibration and the shared-sample table use the same streams, so the
    // numbers are identical either way.
    if (o.years < 1 || o.years > horizon) {
      carbmon::raise(carbmon::errc::invalid_horizon,
                     "years must lie in [1, horizon], got " +
                         std::to_string(o.years));
    }
    table.horizon = horizon;
    table.years = o.years;
    table.start_year = o.start_year;
    table.f_kind = o.f_kind;
    table.replications = o.replications;
    table.seed = o.seed;
    table.alphas = alphas;
    for (double alpha : alphas) {
      const carbmon::BoundarySpec row =
          resolve_boundary(horizon, alpha, o.f_kind, o.replications, o.seed,
                           o.threads, o.cache, 0.0);
      table.constants.push_back(row.c);
      std::vector<double> cells;
      for (int t = 1; t <= o.years; ++t) {
        cells.push_back(carbmon::boundary_value(row, t));
      }
      table.cells.push_back(std::move(cells));
    }
  }

  Output out(o.out);
  const bool csv = o.format == "csv";
  if (csv) {
    out.stream() << "alpha";
    for (int t = 0; t < table.years; ++t) {
      out.stream() << ',' << table.start_year + t;
    }
    out.stream() << '\n';
    for (std::size_t r = 0; r < table.alphas.size(); ++r) {
      out.stream() << shortest(table.alphas[r]);
      for (double cell : table.cells[r]) out.stream() << ',' << g17(cell);
      out.stream() << '\n';
    }
    return kExitOk;
  }
  out.stream() << "alpha ";
  for (int t = 0; t < table.years; ++t) {
    out.stream() << "  " << table.start_year + t;
  }
  out.stream() << '\n';
  char buf[32];
  for (std::size_t r = 0; r < table.alphas.size(); ++r) {
    std::snprintf(buf, sizeof(buf), "%-6.2f", table.alphas[r]);
    out.stream() << buf;
    for (double cell : table.cells[r]) {
      std::snprintf(buf, sizeof(buf), "  %4.2f", cell);
      out.stream() << buf;
    }
    out.stream() << '\n';
  }
  return kExitOk;
}

// --- monitor ---------------------------------------------------------------

struct MonitorInitOpts {
  std::string data;
  std::string state;
  int k = 61;
  double alpha = 0.05;
  std::string horizon = "30";
  std::string f_kind = "sqrt";
  double c = 0.0;
  std::uint64_t replications = carbmon::kDefaultReplications;
  std::uint64_t seed = carbmon::kDefaultSeed;
  int threads = 0;
  std::string cache;
  bool no_gauss_check = false;
};

void write_state_file(const carbmon::MonitorState& state,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    carbmon::raise(carbmon::errc::io_error,
                   "cannot open state file " + path);
  }
  carbmon::save_state(state, out);
  if (!out) {
    carbmon::raise(carbmon::errc::io_error,
                   "cannot write state file " + path);
  }
}

carbmon::MonitorState read_state_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    carbmon::raise(carbmon::errc::io_error,
                   "cannot open state file " + path);
  }
  return carbmon::load_state(in);
}

int run_monitor_init(const MonitorInitOpts& o) {
  const int horizon = resolve_horizon(o.horizon, o.f_kind);
  carbmon::MonitorConfig config;
  config.k_window = o.k;
  config.boundary = resolve_boundary(horizon, o.alpha, o.f_kind,
                                     o.replications, o.seed, o.threads,
                                     o.cache, o.c);
  config.gaussianity_check = !o.no_gauss_check;

  const carbmon::Vintage v = load_data(o.data, "");
  const carbmon::MonitorState state = carbmon::init_monitor(config, v);
  write_state_file(state, o.state);
  std::cout << carbmon::status_report(state);
  std::cout << "state written to " << o.state << '\n';
  return kExitOk;
}

struct MonitorStepOpts {
  std::string state;
  std::string data;
  std::string state_out;
};

int run_monitor_step(const MonitorStepOpts& o) {
  carbmon::MonitorState state = read_state_file(o.state);
  const carbmon::Vintage v = load_data(o.data, "");
  const carbmon::StepRecord record = carbmon::step(state, v);
  write_state_file(state, o.state_out.empty() ? o.state : o.state_out);

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "year %d: innovation %.4f, z %.4f, boundary %.4f -> %s\n",
                record.year, record.innovation, record.z, record.boundary,
                record.reject ? "REJECT" : "continue");
  std::cout << buf;
  if (record.gauss_warn) {
    std::cout << "warning: refit residuals reject Gaussianity at 5%\n";
  }
  if (state.status == carbmon::MonitorStatus::horizon_exhausted) {
    std::cout << "monitoring horizon exhausted; no rejection\n";
  }
  return record.reject ? kExitReject : kExitOk;
}

struct MonitorStatusOpts {
  std::string state;
};

int run_monitor_status(const MonitorStatusOpts& o) {
  const carbmon::MonitorState state = read_state_file(o.state);
  std::cout << carbmon::status_report(state);
  return kExitOk;
}

// --- simulate ---------------------------------------------------------------

struct SimulateOpts {
  int dgp = 1;
  double phi = -2.0;    // sentinel: take from preset
  double sigma = -1.0;  // sentinel: take from preset
  int k = 61;
  std::string horizon = "30";
  double alpha = 0.05;
  std::string f_kind = "sqrt";
  double g = 0.0692;
  double m = 0.0;
  double e_base = 9.7;
  int tau_offset = 1;
  std::uint64_t replications = 10000;
  std::uint64_t cal_replications = carbmon::kDefaultReplications;
  std::uint64_t seed = carbmon::kDefaultSeed;
  int threads = 0;
  double c = 0.0;
  std::string cache;
  std::string sweep;
  bool detections = false;
  std::string format = "text";
  std::string out;
};

struct Sweep {
  double start = 0.0, step = 0.0, stop = 0.0;
};

Sweep parse_sweep(const std::string& text) {
  std::string_view s(text);
  if (s.rfind("m=", 0) == 0) s.remove_prefix(2);
  const std::size_t c1 = s.find(':');
  const std::size_t c2 = c1 == std::string_view::npos
                             ? std::string_view::npos
                             : s.find(':', c1 + 1);
  if (c1 == std::string_view::npos || c2 == std::string_view::npos) {
    carbmon::raise(carbmon::errc::invalid_argument,
                   "--sweep expects m=START:STEP:STOP");
  }
  Sweep sw;
  sw.start = parse_num(s.substr(0, c1), "sweep start");
  sw.step = parse_num(s.substr(c1 + 1, c2 - c1 - 1), "sweep step");
  sw.stop = parse_num(s.substr(c2 + 1), "sweep stop");
  if (sw.step <= 0.0 || sw.stop < sw.start) {
    carbmon::raise(carbmon::errc::invalid_argument,
                   "--sweep needs STEP > 0 and STOP >= START");
  }
  return sw;
}

void print_power_text(std::ostream& os, const carbmon::ScenarioSpec& spec,
                      const carbmon::BoundarySpec& boundary,
                      const carbmon::PowerReport& rep) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "phi = %g, sigma = %g, K = %d, T = %d, alpha = %g, g = %g, "
                "m = %g, replications = %llu, seed = %llu\n",
                spec.phi, spec.sigma, spec.k_window, spec.horizon, spec.alpha,
                spec.g, spec.m,
                static_cast<unsigned long long>(spec.replications),
                static_cast<unsigned long long>(spec.seed));
  os << buf;
  std::snprintf(buf, sizeof(buf), "boundary c = %.5f\n", boundary.c);
  os << buf;
  std::snprintf(buf, sizeof(buf), "rejection rate = %.4f\n",
                rep.rejection_rate);
  os << buf;
  if (rep.rejection_rate > 0.0) {
    std::snprintf(buf, sizeof(buf),
                  "detection time (years): mean %.2f, min %.0f, q25 %.2f, "
                  "median %.2f, q75 %.2f, max %.0f\n",
                  rep.mean_detection_time, rep.min_detection,
                  rep.q25_detection, rep.median_detection, rep.q75_detection,
                  rep.max_detection);
    os << buf;
  }
}

int run_simulate(const SimulateOpts& o) {
  carbmon::ScenarioSpec spec;
  const carbmon::DgpParams preset = carbmon::dgp_preset(o.dgp);
  spec.phi = o.phi > -2.0 ? o.phi : preset.phi;
  spec.sigma = o.sigma >= 0.0 ? o.sigma : preset.sigma;
  spec.k_window = o.k;
  spec.horizon = resolve_horizon(o.horizon, o.f_kind);
  spec.alpha = o.alpha;
  spec.g = o.g;
  spec.m = o.m;
  spec.e_base = o.e_base;
  spec.tau_offset = o.tau_offset;
  spec.replications = o.replications;
  spec.seed = o.seed;

  const carbmon::BoundarySpec boundary =
      resolve_boundary(spec.horizon, spec.alpha, o.f_kind, o.cal_replications,
                       o.seed, o.threads, o.cache, o.c);

  Output out(o.out);
  const bool csv = o.format == "csv";

  if (!o.sweep.empty()) {
    const Sweep sw = parse_sweep(o.sweep);
    if (csv) {
      out.stream() << "m,rejection_rate,mean_detection_time\n";
    } else {
      out.stream() << "     m   power   mean detection (years)\n";
    }
    // Half-step slack so STOP itself is kept despite rounding drift.
    for (double m = sw.start; m <= sw.stop + sw.step * 0.5; m += sw.step) {
      carbmon::ScenarioSpec cell = spec;
      cell.m = std::min(m, 1.0);
      const carbmon::PowerReport rep =
          carbmon::run_experiment(cell, boundary, o.threads);
      if (csv) {
        out.stream() << g17(cell.m) << ',' << g17(rep.rejection_rate) << ','
                     << g17(rep.mean_detection_time) << '\n';
      } else {
        char buf[120];
        std::snprintf(buf, sizeof(buf), "%6.2f  %6.4f   %.2f\n", cell.m,
                      rep.rejection_rate, rep.mean_detection_time);
        out.stream() << buf;
      }
    }
    return kExitOk;
  }

  const carbmon::PowerReport rep =
      carbmon::run_experiment(spec, boundary, o.threads);
  if (o.detections) {
    out.stream() << "replication,detection_year\n";
    for (std::size_t i = 0; i < rep.detection_years.size(); ++i) {
      out.stream() << i + 1 << ',' << rep.detection_years[i] << '\n';
    }
    return kExitOk;
  }
  if (csv) {
    out.stream() << "rejection_rate,mean_detection_time,min,q25,median,q75,"
                    "max\n"
                 << g17(rep.rejection_rate) << ','
                 << g17(rep.mean_detection_time) << ',' << g17(rep.min_detection)
                 << ',' << g17(rep.q25_detection) << ','
                 << g17(rep.median_detection) << ',' << g17(rep.q75_detection)
                 << ',' << g17(rep.max_detection) << '\n';
    return kExitOk;
  }
  print_power_text(out.stream(), spec, boundary, rep);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "carbmon: sequential monitoring of the global carbon budget imbalance "
      "for systematic emission under-reporting"};
  app.name("carbmon");
  app.require_subcommand(1);
  app.get_formatter()->column_width(34);

  int rc = kExitOk;

  IngestOpts ingest;
  auto* c_ingest = app.add_subcommand(
      "ingest", "Parse and validate a flux vintage CSV");
  c_ingest->add_option("--data", ingest.data, "Vintage CSV file")
      ->required()
      ->check(CLI::ExistingFile);
  c_ingest->add_option("--label", ingest.label,
                       "Vintage label (default: file stem)");
  c_ingest
      ->add_option("--format", ingest.format,
                   "Output format: text summary or imbalance csv")
      ->check(CLI::IsMember({"text", "csv"}))
      ->capture_default_str();
  c_ingest->add_option("--out", ingest.out, "Write output to a file");
  auto* echo_flag = c_ingest->add_flag(
      "--echo", ingest.echo, "Echo the vintage back as round-trip CSV");
  echo_flag->excludes("--format");
  c_ingest->callback([&] { rc = run_ingest(ingest); });

  DiagnoseOpts diagnose;
  auto* c_diag = app.add_subcommand(
      "diagnose",
      "Descriptive statistics and the diagnostic battery for a vintage");
  c_diag->add_option("--data", diagnose.data, "Vintage CSV file")
      ->required()
      ->check(CLI::ExistingFile);
  c_diag
      ->add_option("--series", diagnose.series,
                   "Rows to print: imbalance, residuals, or both")
      ->check(CLI::IsMember({"imbalance", "residuals", "both"}))
      ->capture_default_str();
  c_diag->add_option("--format", diagnose.format, "text (2 dp) or csv")
      ->check(CLI::IsMember({"text", "csv"}))
      ->capture_default_str();
  c_diag->add_option("--out", diagnose.out, "Write output to a file");
  c_diag->callback([&] { rc = run_diagnose(diagnose); });

  FitOpts fit;
  auto* c_fit = app.add_subcommand(
      "fit", "Fit the stationary null model to the budget imbalance");
  c_fit->add_option("--data", fit.data, "Vintage CSV file")
      ->required()
      ->check(CLI::ExistingFile);
  c_fit->add_option("--k", fit.k, "Fit window: first K observations (0 = all)")
      ->capture_default_str();
  c_fit->add_option("--p", fit.p, "AR order")->capture_default_str();
  c_fit->add_option("--q", fit.q, "MA order")->capture_default_str();
  c_fit
      ->add_option("--select", fit.select,
                   "BIC order selection over 0..P_MAX x 0..Q_MAX")
      ->expected(2);
  c_fit->add_option("--format", fit.format, "text or csv")
      ->check(CLI::IsMember({"text", "csv"}))
      ->capture_default_str();
  c_fit->add_option("--out", fit.out, "Write output to a file");
  c_fit->callback([&] { rc = run_fit(fit); });

  CalibrateOpts calibrate;
  auto* c_cal = app.add_subcommand(
      "calibrate", "Monte Carlo calibration of the boundary constant c");
  c_cal
      ->add_option("--horizon", calibrate.horizon,
                   "Monitoring horizon T in years, or 'indefinite'")
      ->capture_default_str();
  c_cal->add_option("--alpha", calibrate.alpha, "Overall size in (0, 0.5]")
      ->capture_default_str();
  c_cal->add_option("--f", calibrate.f_kind, "Boundary family")
      ->capture_default_str();
  c_cal
      ->add_option("--replications", calibrate.replications,
                   "Monte Carlo replications B")
      ->capture_default_str();
  c_cal->add_option("--seed", calibrate.seed, "RNG seed")
      ->capture_default_str();
  c_cal->add_option("--threads", calibrate.threads,
                    "Worker threads (0 = hardware)")
      ->capture_default_str();
  c_cal->add_option("--cache", calibrate.cache,
                    "Constant cache file (lookup before, store after)");
  c_cal->add_option("--format", calibrate.format, "text or csv")
      ->check(CLI::IsMember({"text", "csv"}))
      ->capture_default_str();
  c_cal->add_option("--out", calibrate.out, "Write output to a file");
  c_cal->callback([&] { rc = run_calibrate(calibrate); });

  TableOpts table;
  auto* c_table = app.add_subcommand(
      "table", "Critical-value table c * f(t) with calendar-year columns");
  c_table
      ->add_option("--horizon", table.horizon,
                   "Monitoring horizon T in years, or 'indefinite'")
      ->capture_default_str();
  c_table
      ->add_option("--alpha", table.alphas,
                   "Comma-separated list of overall sizes")
      ->capture_default_str();
  c_table->add_option("--years", table.years, "Number of year columns")
      ->capture_default_str();
  c_table
      ->add_option("--start-year", table.start_year,
                   "Calendar label of the first monitored year")
      ->capture_default_str();
  c_table->add_option("--f", table.f_kind, "Boundary family")
      ->capture_default_str();
  c_table
      ->add_option("--replications", table.replications,
                   "Monte Carlo replications B")
      ->capture_default_str();
  c_table->add_option("--seed", table.seed, "RNG seed")->capture_default_str();
  c_table
      ->add_option("--threads", table.threads, "Worker threads (0 = hardware)")
      ->capture_default_str();
  c_table->add_option("--cache", table.cache,
                      "Critical-value cache file (per-row reads and writes)");
  c_table->add_option("--format", table.format, "csv or text (2 dp)")
      ->check(CLI::IsMember({"text", "csv"}))
      ->capture_default_str();
  c_table->add_option("--out", table.out, "Write output to a file");
  c_table->callback([&] { rc = run_table(table); });

  auto* c_mon = app.add_subcommand(
      "monitor", "Sequential test: init on a break-free window, then one "
                 "step per annual vintage");
  c_mon->require_subcommand(1);

  MonitorInitOpts mon_init;
  auto* c_mi = c_mon->add_subcommand(
      "init", "Initialize from a vintage with exactly K observations");
  c_mi->add_option("--data", mon_init.data, "Initial vintage CSV (length K)")
      ->required()
      ->check(CLI::ExistingFile);
  c_mi->add_option("--state", mon_init.state, "State file to create")
      ->required();
  c_mi->add_option("--k", mon_init.k, "Break-free window length K")
      ->capture_default_str();
  c_mi->add_option("--alpha", mon_init.alpha, "Overall size in (0, 0.5]")
      ->capture_default_str();
  c_mi
      ->add_option("--horizon", mon_init.horizon,
                   "Monitoring horizon T in years, or 'indefinite'")
      ->capture_default_str();
  c_mi->add_option("--f", mon_init.f_kind, "Boundary family")
      ->capture_default_str();
  c_mi->add_option("--c", mon_init.c,
                   "Precalibrated boundary constant (skips calibration)");
  c_mi
      ->add_option("--replications", mon_init.replications,
                   "Calibration replications B")
      ->capture_default_str();
  c_mi->add_option("--seed", mon_init.seed, "Calibration RNG seed")
      ->capture_default_str();
  c_mi
      ->add_option("--threads", mon_init.threads,
                   "Worker threads (0 = hardware)")
      ->capture_default_str();
  c_mi->add_option("--cache", mon_init.cache, "Constant cache file");
  c_mi->add_flag("--no-gauss-check", mon_init.no_gauss_check,
                 "Skip the residual Gaussianity battery");
  c_mi->callback([&] { rc = run_monitor_init(mon_init); });

  MonitorStepOpts mon_step;
  auto* c_ms = c_mon->add_subcommand(
      "step", "Advance by one vintage (exit 3 on rejection)");
  c_ms->add_option("--state", mon_step.state, "State file (updated in place)")
      ->required()
      ->check(CLI::ExistingFile);
  c_ms->add_option("--data", mon_step.data,
                   "Current vintage CSV (length K + steps + 1)")
      ->required()
      ->check(CLI::ExistingFile);
  c_ms->add_option("--state-out", mon_step.state_out,
                   "Write updated state here instead of in place");
  c_ms->callback([&] { rc = run_monitor_step(mon_step); });

  MonitorStatusOpts mon_status;
  auto* c_mt = c_mon->add_subcommand("status", "Print the step table and "
                                               "current status");
  c_mt->add_option("--state", mon_status.state, "State file")
      ->required()
      ->check(CLI::ExistingFile);
  c_mt->callback([&] { rc = run_monitor_status(mon_status); });

  SimulateOpts simulate;
  auto* c_sim = app.add_subcommand(
      "simulate", "Size/power experiments over the full monitoring pipeline");
  c_sim->add_option("--dgp", simulate.dgp, "Parameter preset 1|2|3")
      ->check(CLI::IsMember({1, 2, 3}))
      ->capture_default_str();
  c_sim->add_option("--phi", simulate.phi, "AR coefficient (overrides --dgp)");
  c_sim->add_option("--sigma", simulate.sigma,
                    "Innovation std (overrides --dgp)");
  c_sim->add_option("--k", simulate.k, "Break-free window length K")
      ->capture_default_str();
  c_sim
      ->add_option("--horizon", simulate.horizon,
                   "Monitoring horizon T in years")
      ->capture_default_str();
  c_sim->add_option("--alpha", simulate.alpha, "Overall size in (0, 0.5]")
      ->capture_default_str();
  c_sim->add_option("--f", simulate.f_kind, "Boundary family")
      ->capture_default_str();
  c_sim->add_option("--g", simulate.g, "Annual abatement fraction")
      ->capture_default_str();
  c_sim->add_option("--m", simulate.m, "Misreporting parameter in [0, 1]")
      ->capture_default_str();
  c_sim->add_option("--e-base", simulate.e_base,
                    "Baseline-year emissions (GtC/yr)")
      ->capture_default_str();
  c_sim
      ->add_option("--tau-offset", simulate.tau_offset,
                   "Steps after K at which the break starts")
      ->capture_default_str();
  c_sim
      ->add_option("--replications", simulate.replications,
                   "Experiment replications")
      ->capture_default_str();
  c_sim
      ->add_option("--cal-replications", simulate.cal_replications,
                   "Boundary calibration replications B")
      ->capture_default_str();
  c_sim->add_option("--seed", simulate.seed, "Master RNG seed")
      ->capture_default_str();
  c_sim
      ->add_option("--threads", simulate.threads,
                   "Worker threads (0 = hardware)")
      ->capture_default_str();
  c_sim->add_option("--c", simulate.c,
                    "Precalibrated boundary constant (skips calibration)");
  c_sim->add_option("--cache", simulate.cache, "Constant cache file");
  c_sim->add_option("--sweep", simulate.sweep,
                    "Power curve over m=START:STEP:STOP");
  c_sim->add_flag("--detections", simulate.detections,
                  "Emit per-replication detection years as CSV");
  c_sim->add_option("--format", simulate.format, "text or csv")
      ->check(CLI::IsMember({"text", "csv"}))
      ->capture_default_str();
  c_sim->add_option("--out", simulate.out, "Write output to a file");
  c_sim->callback([&] { rc = run_simulate(simulate); });

  // Every leaf subcommand reads defaults from a plain key=value file via
  // --config; values given on the command line override the file.
  std::string config_path;
  const std::function<void(CLI::App*)> add_config = [&](CLI::App* cmd) {
    const auto subs = cmd->get_subcommands([](const CLI::App*) {
      return true;
    });
    if (subs.empty()) {
      cmd->add_option("--config", config_path,
                      "Read option defaults from a key=value file "
                      "('#' comments; command-line flags override)");
      return;
    }
    for (CLI::App* sub : subs) add_config(sub);
  };
  add_config(&app);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    inject_config_defaults(args, app);
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help and friends
    }
    std::cerr << "error: Usage: " << e.what() << '\n';
    return kExitUsage;
  } catch (const carbmon::error& e) {
    std::cerr << "error: " << carbmon::errc_name(e.code()) << ": "
              << e.detail() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << '\n';
    return kExitNumerical;
  }
  return rc;
}
