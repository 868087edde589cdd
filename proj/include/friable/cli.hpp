#pragma once

// Command layer behind the friable executable: smooth approximant search and
// grid tabulation of psi / rho / alpha / Kloosterman averages / dispersion
// reports, written as JSON or CSV.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "friable/diophantine.hpp"
#include "friable/dispersion.hpp"
#include "friable/errors.hpp"
#include "friable/expsums.hpp"
#include "friable/smooth.hpp"

namespace friable::cli {

enum class Command { search, psi, rho, alpha, kloosterman, dispersion };
enum class Format { json, csv };

enum ExitCode : int { kOk = 0, kFailure = 1, kEmpty = 2, kBudget = 3, kBadConfig = 4 };

inline Command parse_command(std::string_view s) {
  if (s == "search") return Command::search;
  if (s == "psi") return Command::psi;
  if (s == "rho") return Command::rho;
  if (s == "alpha") return Command::alpha;
  if (s == "kloosterman") return Command::kloosterman;
  if (s == "dispersion") return Command::dispersion;
  throw PreconditionError("unknown command: " + std::string(s));
}

inline Format parse_format(std::string_view s) {
  if (s == "json") return Format::json;
  if (s == "csv") return Format::csv;
  throw PreconditionError("unknown format: " + std::string(s));
}

// "inf" or a real.
inline double parse_real_or_inf(std::string_view s) {
  if (s == "inf" || s == "infinity" || s == "+inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(std::string(s), &used);
  } catch (const std::exception&) {
    throw PreconditionError("not a real number: " + std::string(s));
  }
  detail::require(used == s.size(), "not a real number: " + std::string(s));
  return v;
}

struct RunConfig {
  Command command = Command::search;
  std::string alpha_spec = "quad:1,1,5,2";
  Rational theta{1, 4};
  double C = kDefaultSmoothExponent;
  std::int64_t q_min = 2;
  std::int64_t q_max = 1000;
  std::optional<double> Y;  // overrides (log X)^C
  double eta = 0.05;
  double delta = 0.1;
  std::uint64_t budget = kDefaultBudget;
  std::string output_path;  // empty: standard output
  Format format = Format::json;
  bool timing = false;
  std::size_t member_cap = 0;  // members written per convergent; 0 = all

  // grids for the tabulating commands
  std::vector<double> x, y, u, M, N, R;
  std::vector<std::int64_t> q, a;
  std::string report = "type2";  // dispersion: sigma | bilinear | type1 | type2

  void validate() const {
    detail::require(budget > 0, "budget must be positive");
    if (command == Command::search) {
      detail::require(theta_admissible(theta), "theta must lie in (0, 6/17)");
      detail::require(C > 0, "C must be positive");
      (void)parse_alpha(alpha_spec);
    }
    if (command == Command::dispersion)
      detail::require(report == "sigma" || report == "bilinear" || report == "type1" || report == "type2",
                      "report must be one of sigma, bilinear, type1, type2");
  }
};

// ---------------------------------------------------------------------------
// Row tables and their JSON / CSV forms

using Cell = std::variant<std::monostate, bool, std::int64_t, std::uint64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string cell_text(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>)
          return "";
        else if constexpr (std::is_same_v<T, bool>)
          return v ? "true" : "false";
        else if constexpr (std::is_same_v<T, double>)
          return format_real(v);
        else if constexpr (std::is_same_v<T, std::string>)
          return v;
        else
          return std::to_string(v);
      },
      c);
}

inline nlohmann::ordered_json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> nlohmann::ordered_json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>)
          return nullptr;
        else if constexpr (std::is_same_v<T, double>)
          return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(format_real(v));
        else
          return v;
      },
      c);
}

inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << csv_quote(t.columns[i]);
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_quote(cell_text(row[i]));
    os << "\n";
  }
}

inline nlohmann::ordered_json table_json(const Table& t) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = cell_json(row[i]);
    arr.push_back(std::move(obj));
  }
  return arr;
}

// ---------------------------------------------------------------------------
// search

struct SearchMember {
  std::uint64_t n;
  long double dist;    // ||n alpha|| (upper bound for decimal alpha)
  double n_pow;        // n^{-theta}
  std::uint64_t lpf;   // P+(n)
  bool within_bound;   // ||n alpha|| <= R/q + 4X/q^2
  bool strong;         // ||n alpha|| < n^{-theta}
};

struct SearchResult {
  std::int64_t q = 0, a = 0;
  double X = 0, R = 0, Y = 0;
  double bound = 0;
  std::vector<SearchMember> members;
  std::size_t violations = 0;  // members breaking an invariant
  std::size_t strong_count = 0;
};

inline std::vector<SearchResult> cmd_search(const RunConfig& cfg) {
  cfg.validate();
  const AlphaSpec alpha = parse_alpha(cfg.alpha_spec);
  std::vector<SearchResult> out;
  if (cfg.q_max < cfg.q_min) return out;
  for (const auto& conv : convergents_up_to(alpha, cfg.q_max)) {
    if (conv.q < std::max<std::int64_t>(cfg.q_min, 2)) continue;
    const auto ap = derive_params(std::uint64_t(conv.q), cfg.theta, cfg.C, cfg.Y);
    const double work = std::floor(ap.R) * (15 * ap.X / 4 / double(conv.q) + 1);
    detail::require<BudgetError>(work <= double(cfg.budget), "search: candidate count exceeds budget");
    SearchResult res;
    res.q = conv.q;
    res.a = conv.a;
    res.X = ap.X;
    res.R = ap.R;
    res.Y = ap.Y;
    res.bound = ap.connection_bound();
    const double th = cfg.theta.value();
    for (const auto& t : target_members(ap, conv.a)) {
      SearchMember m;
      m.n = t.n;
      m.lpf = t.lpf;
      m.dist = dist_upper(std::int64_t(t.n), alpha);
      m.n_pow = std::pow(double(t.n), -th);
      m.within_bound = m.dist <= (long double)res.bound;
      m.strong = m.dist < (long double)m.n_pow;
      const bool ok = m.within_bound && double(t.lpf) <= ap.Y && std::gcd(t.n, ap.q) == 1;
      if (!ok) ++res.violations;
      if (m.strong) ++res.strong_count;
      res.members.push_back(m);
    }
    out.push_back(std::move(res));
  }
  return out;
}

inline nlohmann::ordered_json search_json(const std::vector<SearchResult>& results, std::size_t member_cap) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    nlohmann::ordered_json j;
    j["q"] = r.q;
    j["a"] = r.a;
    j["X"] = r.X;
    j["R"] = r.R;
    j["Y"] = cell_json(r.Y);
    j["bound"] = r.bound;
    j["members_total"] = r.members.size();
    j["violations"] = r.violations;
    j["strong_count"] = r.strong_count;
    auto ms = nlohmann::ordered_json::array();
    const std::size_t shown = member_cap ? std::min(member_cap, r.members.size()) : r.members.size();
    for (std::size_t i = 0; i < shown; ++i) {
      const auto& m = r.members[i];
      ms.push_back({{"n", m.n}, {"dist", double(m.dist)}, {"n_pow_neg_theta", m.n_pow}, {"lpf", m.lpf},
                    {"within_bound", m.within_bound}, {"strong", m.strong}});
    }
    j["members"] = std::move(ms);
    arr.push_back(std::move(j));
  }
  return arr;
}

inline Table search_table(const std::vector<SearchResult>& results, std::size_t member_cap) {
  Table t;
  t.columns = {"q", "a", "X", "R", "Y", "bound", "n", "dist", "n_pow_neg_theta", "lpf", "within_bound", "strong"};
  for (const auto& r : results) {
    const std::size_t shown = member_cap ? std::min(member_cap, r.members.size()) : r.members.size();
    for (std::size_t i = 0; i < shown; ++i) {
      const auto& m = r.members[i];
      t.rows.push_back({r.q, r.a, r.X, r.R, r.Y, r.bound, m.n, double(m.dist), m.n_pow, m.lpf, m.within_bound,
                        m.strong});
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// tabulation

inline Table tabulate_psi(const RunConfig& cfg) {
  Table t;
  t.columns = {"x", "y", "psi", "x_rho_u", "ratio"};
  for (double x : cfg.x)
    for (double y : cfg.y) {
      detail::require<BudgetError>(x <= double(cfg.budget), "psi: x exceeds budget");
      const auto v = psi(x, y);
      Cell approx, ratio;
      if (y >= 2 && x >= 1) {
        const double u = y >= x ? 0.0 : std::log(x) / std::log(y);
        const double xr = x * dickman_rho(u);
        approx = xr;
        ratio = double(v) / xr;
      }
      t.rows.push_back({x, y, v, approx, ratio});
    }
  return t;
}

inline Table tabulate_rho(const RunConfig& cfg) {
  Table t;
  t.columns = {"u", "rho"};
  for (double u : cfg.u) t.rows.push_back({u, dickman_rho(u)});
  return t;
}

inline Table tabulate_alpha(const RunConfig& cfg) {
  Table t;
  t.columns = {"x", "y", "alpha", "doubling_factor", "iterations"};
  for (double x : cfg.x)
    for (double y : cfg.y) {
      const auto s = saddle_alpha(x, y);
      t.rows.push_back({x, y, s.alpha, std::exp2(s.alpha), std::int64_t(s.iterations)});
    }
  return t;
}

inline Table tabulate_kloosterman(const RunConfig& cfg) {
  Table t;
  t.columns = {"M", "x", "a", "q", "y", "kl", "z", "bound_rhs"};
  for (double M : cfg.M)
    for (double x : cfg.x)
      for (std::int64_t a : cfg.a)
        for (std::int64_t q : cfg.q)
          for (double y : cfg.y) {
            const double kl = kl_smooth_average(M, x, a, std::uint64_t(q), y, cfg.budget);
            Cell z, rhs;
            if (y >= 2 && y < x) {
              const double zz = optimal_z(M, x, y);
              z = zz;
              rhs = kloos_bound_rhs({M, x, a, std::uint64_t(q), y, zz, cfg.eta});
            }
            t.rows.push_back({M, x, a, q, y, kl, z, rhs});
          }
  return t;
}

inline std::vector<SumReport> dispersion_reports(const RunConfig& cfg) {
  std::vector<SumReport> out;
  if (cfg.report == "sigma") {
    for (std::int64_t q : cfg.q)
      for (std::int64_t a : cfg.a) {
        const auto ap = derive_params(std::uint64_t(q), cfg.theta, cfg.C, cfg.Y);
        const double work = std::floor(ap.R) * (15 * ap.X / 4 / double(q) + 1);
        detail::require<BudgetError>(work <= double(cfg.budget), "sigma: candidate count exceeds budget");
        out.push_back(sigma_qR(ap, a));
      }
    return out;
  }
  for (std::int64_t q : cfg.q)
    for (std::int64_t a : cfg.a)
      for (double R : cfg.R)
        for (double M : cfg.M)
          for (double N : cfg.N) {
            DispersionParams p;
            p.M = M;
            p.N = N;
            p.q = q;
            p.a = a;
            p.R = R;
            p.Y = cfg.Y.value_or(std::numeric_limits<double>::infinity());
            p.eta = cfg.eta;
            p.delta = cfg.delta;
            if (cfg.report == "bilinear")
              out.push_back(bilinear_B(p, cfg.budget));
            else if (cfg.report == "type1")
              out.push_back(type1_report(p, cfg.budget));
            else
              out.push_back(type2_report(p, cfg.budget));
          }
  return out;
}

inline std::string join_warnings(const std::vector<std::string>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "; " : "") + w[i];
  return s;
}

inline Table dispersion_table(const std::vector<SumReport>& reps) {
  Table t;
  t.columns = {"params", "value", "main_term", "ratio", "truncation_error", "runtime_ms", "warnings"};
  for (const auto& r : reps)
    t.rows.push_back({r.params.dump(), r.value, r.main_term, r.ratio, r.truncation_error, r.runtime_ms,
                      join_warnings(r.warnings)});
  return t;
}

// Runs one command into `os`; returns the exit code for an empty result or success.
inline int run(const RunConfig& cfg, std::ostream& os) {
  cfg.validate();
  bool empty = false;
  if (cfg.command == Command::search) {
    const auto results = cmd_search(cfg);
    empty = results.empty();
    if (cfg.format == Format::json)
      os << search_json(results, cfg.member_cap).dump(2) << "\n";
    else
      write_csv(os, search_table(results, cfg.member_cap));
  } else if (cfg.command == Command::dispersion) {
    auto reps = dispersion_reports(cfg);
    if (!cfg.timing)
      for (auto& r : reps) r.runtime_ms = 0;
    empty = reps.empty();
    if (cfg.format == Format::json) {
      auto arr = nlohmann::json::array();
      for (const auto& r : reps) arr.push_back(r.to_json());
      os << arr.dump(2) << "\n";
    } else {
      write_csv(os, dispersion_table(reps));
    }
  } else {
    Table t;
    switch (cfg.command) {
      case Command::psi: t = tabulate_psi(cfg); break;
      case Command::rho: t = tabulate_rho(cfg); break;
      case Command::alpha: t = tabulate_alpha(cfg); break;
      case Command::kloosterman: t = tabulate_kloosterman(cfg); break;
      default: break;
    }
    empty = t.rows.empty();
    if (cfg.format == Format::json)
      os << table_json(t).dump(2) << "\n";
    else
      write_csv(os, t);
  }
  return empty ? kEmpty : kOk;
}

// Exit code for an exception escaping run().
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const BudgetError*>(&e) || dynamic_cast<const CapacityError*>(&e)) return kBudget;
  if (dynamic_cast<const std::invalid_argument*>(&e)) return kBadConfig;
  return kFailure;
}

}  // namespace friable::cli
