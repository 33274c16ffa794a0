#include "hmmilm/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include "hmmilm/error.hpp"

namespace hmmilm {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& fields) {
  std::string s;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) s += ',';
    s += fields[k];
  }
  return s;
}

std::string format_int(long long v) { return std::to_string(v); }
std::string format_bool(bool b) { return b ? "1" : "0"; }

ParamId parse_param(std::string_view text, int line) {
  const auto id = param_from_name(text);
  if (!id) throw DataError("unknown parameter '" + std::string(text) + "'", line);
  return *id;
}

CsvTable make_table(std::vector<std::string> header) {
  CsvTable t;
  t.header = std::move(header);
  return t;
}

void add_row(CsvTable& t, std::vector<std::string> row) {
  t.rows.push_back(std::move(row));
  t.lines.push_back(static_cast<int>(t.rows.size()) + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// Plain CSV

CsvTable read_csv(std::istream& in, const std::vector<std::string>& expected_header) {
  CsvTable table;
  std::string line;
  int number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      table.header = split(line);
      if (!expected_header.empty() && table.header != expected_header)
        throw DataError("unexpected header '" + line + "', expected '" + join(expected_header) + "'", number);
      have_header = true;
      continue;
    }
    if (line.empty()) continue;
    auto fields = split(line);
    if (fields.size() != table.header.size())
      throw DataError("expected " + std::to_string(table.header.size()) + " fields, found " +
                          std::to_string(fields.size()),
                      number);
    table.rows.push_back(std::move(fields));
    table.lines.push_back(number);
  }
  if (!have_header) {
    if (expected_header.empty()) throw DataError("empty CSV input without a header", 1);
    table.header = expected_header;
  }
  return table;
}

CsvTable read_csv_file(const std::filesystem::path& path, const std::vector<std::string>& expected_header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return read_csv(in, expected_header);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_csv(std::ostream& out, const CsvTable& table) {
  out << join(table.header) << '\n';
  for (const auto& row : table.rows) out << join(row) << '\n';
}

void write_csv_file(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_csv(out, table);
  if (!out) throw Error("failed writing " + path.string());
}

std::string format_double(double x) {
  if (std::isnan(x)) return "NA";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(std::string_view text, int line) {
  if (text == "NA") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw DataError("not a number: '" + std::string(text) + "'", line);
  return v;
}

long long parse_int(std::string_view text, int line) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw DataError("not an integer: '" + std::string(text) + "'", line);
  return v;
}

bool parse_bool(std::string_view text, int line) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw DataError("not a boolean: '" + std::string(text) + "'", line);
}

// ---------------------------------------------------------------------------
// Inputs

ObservationMatrix detections_from_table(const CsvTable& table, int n, int horizon, bool single_detection) {
  ObservationMatrix y(n, horizon);
  std::set<int> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const int line = table.lines[r];
    const long long id = parse_int(table.rows[r][0], line);
    const long long t = parse_int(table.rows[r][1], line);
    if (id < 0 || id >= n)
      throw DataError("individual " + std::to_string(id) + " outside 0.." + std::to_string(n - 1), line);
    if (t < 1 || t > horizon)
      throw DataError("detection time " + std::to_string(t) + " outside 1.." + std::to_string(horizon), line);
    const int i = static_cast<int>(id);
    if (y(i, static_cast<int>(t))) throw DataError("duplicate detection for individual " + std::to_string(id), line);
    if (single_detection && seen.count(i))
      throw DataError("second detection for individual " + std::to_string(id) + " under a single-detection model",
                      line);
    seen.insert(i);
    y.set(i, static_cast<int>(t), true);
  }
  return y;
}

CsvTable detections_to_table(const ObservationMatrix& y) {
  CsvTable t = make_table({"id", "t"});
  for (int i = 0; i < y.individuals(); ++i)
    for (int k = 1; k <= y.horizon(); ++k)
      if (y(i, k)) add_row(t, {format_int(i), format_int(k)});
  return t;
}

std::vector<Point> points_from_table(const CsvTable& table) {
  std::vector<Point> pts;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const int line = table.lines[r];
    const long long id = parse_int(table.rows[r][0], line);
    if (id != static_cast<long long>(r))
      throw DataError("id gap: expected " + std::to_string(r) + ", found " + std::to_string(id), line);
    const double x = parse_double(table.rows[r][1], line);
    const double yv = parse_double(table.rows[r][2], line);
    if (!std::isfinite(x) || !std::isfinite(yv)) throw DataError("coordinates must be finite", line);
    pts.push_back({x, yv});
  }
  return pts;
}

CsvTable points_to_table(std::span<const Point> points) {
  CsvTable t = make_table({"id", "x", "y"});
  for (std::size_t i = 0; i < points.size(); ++i)
    add_row(t, {format_int(static_cast<long long>(i)), format_double(points[i].x), format_double(points[i].y)});
  return t;
}

std::vector<std::uint8_t> covariates_from_table(const CsvTable& table, int horizon) {
  if (static_cast<int>(table.rows.size()) != horizon + 1)
    throw DataError("covariates need one row for each t = 0.." + std::to_string(horizon) + ", found " +
                    std::to_string(table.rows.size()));
  std::vector<std::uint8_t> w;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const int line = table.lines[r];
    if (parse_int(table.rows[r][0], line) != static_cast<long long>(r))
      throw DataError("covariate rows must list t = 0.." + std::to_string(horizon) + " in order", line);
    const long long v = parse_int(table.rows[r][1], line);
    if (v != 0 && v != 1) throw DataError("W must be 0 or 1", line);
    w.push_back(static_cast<std::uint8_t>(v));
  }
  return w;
}

CsvTable covariates_to_table(const std::vector<std::uint8_t>& w) {
  CsvTable t = make_table({"t", "W"});
  for (std::size_t k = 0; k < w.size(); ++k) add_row(t, {format_int(static_cast<long long>(k)), format_int(w[k])});
  return t;
}

IngestedData ingest(const std::filesystem::path& detections_path, const std::optional<GridSpec>& grid,
                    const std::optional<std::filesystem::path>& population_path,
                    const std::optional<std::filesystem::path>& covariates_path, int horizon,
                    const NeighborhoodRule& rule, bool single_detection, std::optional<int> individuals) {
  if (horizon < 1) throw ConfigError("horizon T must be at least 1");
  const int sources = (grid ? 1 : 0) + (population_path ? 1 : 0) + (individuals ? 1 : 0);
  if (sources != 1) throw ConfigError("give exactly one of a grid, a population file or an individual count");

  IngestedData out;
  if (grid) {
    if (rule.kind == NeighborhoodRule::Kind::Radius)
      out.population = radius_neighbors(build_grid(*grid), rule.radius);
    else if (rule.kind == NeighborhoodRule::Kind::Complete)
      out.population = complete_graph(grid->rows * grid->cols, build_grid(*grid));
    else
      out.population = queen_neighbors(*grid, rule.order);
  } else if (population_path) {
    auto pts = points_from_table(read_csv_file(*population_path, {"id", "x", "y"}));
    if (pts.empty()) throw DataError("population file lists no individuals");
    switch (rule.kind) {
      case NeighborhoodRule::Kind::Radius:
        out.population = radius_neighbors(std::move(pts), rule.radius);
        break;
      case NeighborhoodRule::Kind::Complete:
        out.population = complete_graph(static_cast<int>(pts.size()), std::move(pts));
        break;
      case NeighborhoodRule::Kind::Queen:
        throw ConfigError("queen neighbourhoods need a grid; use complete or radius with a population file");
    }
  } else {
    if (*individuals < 1) throw ConfigError("population must contain at least one individual");
    out.population = complete_graph(*individuals);
  }
  const auto table = read_csv_file(detections_path, {"id", "t"});
  try {
    out.detections = detections_from_table(table, out.population.size(), horizon, single_detection);
  } catch (const DataError& e) {
    throw DataError(detections_path.string() + ": " + e.what());
  }
  if (covariates_path) {
    try {
      out.covariates.ward_closed = covariates_from_table(read_csv_file(*covariates_path, {"t", "W"}), horizon);
    } catch (const DataError& e) {
      throw DataError(covariates_path->string() + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Outputs

CsvTable states_to_table(const StateMatrix& s) {
  CsvTable t = make_table({"id", "t", "state"});
  for (int i = 0; i < s.individuals(); ++i)
    for (int k = 0; k <= s.horizon(); ++k) add_row(t, {format_int(i), format_int(k), format_int(static_cast<int>(s(i, k)))});
  return t;
}

StateMatrix states_from_table(const CsvTable& table) {
  int n = 0;
  int horizon = -1;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    n = std::max<int>(n, static_cast<int>(parse_int(table.rows[r][0], table.lines[r])) + 1);
    horizon = std::max<int>(horizon, static_cast<int>(parse_int(table.rows[r][1], table.lines[r])));
  }
  if (horizon < 0) return {};
  if (table.rows.size() != static_cast<std::size_t>(n) * (horizon + 1))
    throw DataError("state table must list every (id, t) exactly once");
  StateMatrix s(n, horizon);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const int line = table.lines[r];
    const auto i = static_cast<int>(parse_int(table.rows[r][0], line));
    const auto k = static_cast<int>(parse_int(table.rows[r][1], line));
    if (static_cast<std::size_t>(i) * (horizon + 1) + k != r) throw DataError("state rows out of order", line);
    const long long st = parse_int(table.rows[r][2], line);
    if (st < 1 || st > 3) throw DataError("state must be 1, 2 or 3", line);
    s(i, k) = static_cast<DiseaseState>(st);
  }
  return s;
}

std::vector<std::string> param_draw_header(int beta_count) {
  std::vector<std::string> h{"chain", "iteration", "theta", "m", "alpha"};
  for (int k = 0; k < beta_count; ++k) h.push_back("beta" + std::to_string(k));
  return h;
}

CsvTable param_draws_to_table(const std::vector<ParamDraw>& draws, int beta_count) {
  if (beta_count < 1 || beta_count > 3) throw InputError("beta count must be 1, 2 or 3");
  CsvTable t = make_table(param_draw_header(beta_count));
  for (const auto& d : draws) {
    std::vector<std::string> row{format_int(d.chain), format_int(d.iteration), format_double(d.v.theta),
                                 format_double(d.v.m), format_double(d.v.alpha)};
    for (int k = 0; k < beta_count; ++k) row.push_back(format_double(d.v.beta[k]));
    add_row(t, std::move(row));
  }
  return t;
}

std::vector<ParamDraw> param_draws_from_table(const CsvTable& table) {
  const int betas = static_cast<int>(table.header.size()) - 5;
  if (betas < 1 || betas > 3 || table.header != param_draw_header(betas))
    throw DataError("unexpected parameter draw header", 1);
  std::vector<ParamDraw> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const int line = table.lines[r];
    ParamDraw d;
    d.chain = static_cast<int>(parse_int(f[0], line));
    d.iteration = static_cast<int>(parse_int(f[1], line));
    d.v.theta = parse_double(f[2], line);
    d.v.m = parse_double(f[3], line);
    d.v.alpha = parse_double(f[4], line);
    for (int k = 0; k < betas; ++k) d.v.beta[k] = parse_double(f[5 + k], line);
    out.push_back(d);
  }
  return out;
}

std::vector<ParamDraw> archive_draws(const PosteriorArchive& archive) {
  std::vector<ParamDraw> out;
  for (std::size_t c = 0; c < archive.chains.size(); ++c) {
    const auto& draws = archive.chains[c].draws;
    for (std::size_t k = 0; k < draws.size(); ++k)
      out.push_back({static_cast<int>(c), archive.burn_in + 1 + static_cast<int>(k), draws[k]});
  }
  return out;
}

CsvTable functional_draws_to_table(const std::vector<FunctionalDraw>& draws) {
  CsvTable t = make_table({"chain", "iteration", "name", "value"});
  for (const auto& d : draws) add_row(t, {format_int(d.chain), format_int(d.iteration), d.name, format_double(d.value)});
  return t;
}

std::vector<FunctionalDraw> functional_draws_from_table(const CsvTable& table) {
  std::vector<FunctionalDraw> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const int line = table.lines[r];
    out.push_back({static_cast<int>(parse_int(f[0], line)), static_cast<int>(parse_int(f[1], line)), f[2],
                   parse_double(f[3], line)});
  }
  return out;
}

std::vector<FunctionalDraw> archive_functionals(const PosteriorArchive& archive) {
  std::vector<FunctionalDraw> out;
  for (std::size_t c = 0; c < archive.chains.size(); ++c) {
    const auto& ch = archive.chains[c];
    for (std::size_t r = 0; r < ch.retained.size(); ++r)
      for (std::size_t f = 0; f < archive.functional_names.size() && f < ch.functionals.size(); ++f)
        out.push_back({static_cast<int>(c), ch.retained[r], archive.functional_names[f], ch.functionals[f][r]});
  }
  return out;
}

CsvTable state_counts_to_table(const std::vector<StateCount>& counts) {
  CsvTable t = make_table({"id", "t", "n_sus", "n_inf", "n_rem"});
  for (const auto& c : counts)
    add_row(t, {format_int(c.id), format_int(c.t), format_int(c.n[0]), format_int(c.n[1]), format_int(c.n[2])});
  return t;
}

std::vector<StateCount> state_counts_from_table(const CsvTable& table) {
  std::vector<StateCount> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const int line = table.lines[r];
    StateCount c;
    c.id = static_cast<int>(parse_int(f[0], line));
    c.t = static_cast<int>(parse_int(f[1], line));
    for (int s = 0; s < 3; ++s) {
      c.n[s] = parse_int(f[2 + s], line);
      if (c.n[s] < 0) throw DataError("negative visit count", line);
    }
    out.push_back(c);
  }
  return out;
}

std::vector<StateCount> archive_state_counts(const PosteriorArchive& archive) {
  const int width = archive.horizon + 1;
  std::vector<StateCount> out(static_cast<std::size_t>(archive.individuals) * width);
  for (int i = 0; i < archive.individuals; ++i)
    for (int t = 0; t < width; ++t) {
      auto& c = out[static_cast<std::size_t>(i) * width + t];
      c.id = i;
      c.t = t;
    }
  for (const auto& ch : archive.chains) {
    if (ch.state_counts.size() != out.size() * 3) continue;
    for (std::size_t k = 0; k < out.size(); ++k)
      for (int s = 0; s < 3; ++s) out[k].n[s] += ch.state_counts[k * 3 + s];
  }
  return out;
}

CsvTable state_probs_to_table(const StateSummary& s) {
  CsvTable t = make_table({"id", "t", "p_sus", "p_inf", "p_rem"});
  for (int i = 0; i < s.individuals; ++i)
    for (int k = 0; k <= s.horizon; ++k) {
      const auto& p = s.probs[static_cast<std::size_t>(i) * (s.horizon + 1) + k];
      add_row(t, {format_int(i), format_int(k), format_double(p[0]), format_double(p[1]), format_double(p[2])});
    }
  return t;
}

StateSummary state_probs_from_table(const CsvTable& table) {
  StateSummary s;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    s.individuals = std::max<int>(s.individuals, static_cast<int>(parse_int(table.rows[r][0], table.lines[r])) + 1);
    s.horizon = std::max<int>(s.horizon, static_cast<int>(parse_int(table.rows[r][1], table.lines[r])));
  }
  if (table.rows.empty()) return s;
  if (table.rows.size() != static_cast<std::size_t>(s.individuals) * (s.horizon + 1))
    throw DataError("state probability table must list every (id, t) exactly once");
  s.probs.resize(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const int line = table.lines[r];
    const auto i = static_cast<std::size_t>(parse_int(f[0], line));
    const auto k = static_cast<std::size_t>(parse_int(f[1], line));
    if (i * (s.horizon + 1) + k != r) throw DataError("state probability rows out of order", line);
    for (int st = 0; st < 3; ++st) s.probs[r][st] = parse_double(f[2 + st], line);
  }
  return s;
}

CsvTable intervals_to_table(const std::vector<NamedInterval>& rows) {
  CsvTable t = make_table({"name", "median", "lo95", "hi95"});
  for (const auto& r : rows)
    add_row(t, {r.name, format_double(r.interval.median), format_double(r.interval.lo95), format_double(r.interval.hi95)});
  return t;
}

std::vector<NamedInterval> intervals_from_table(const CsvTable& table) {
  std::vector<NamedInterval> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const int line = table.lines[r];
    out.push_back({f[0], {parse_double(f[1], line), parse_double(f[2], line), parse_double(f[3], line)}});
  }
  return out;
}

CsvTable waic_to_table(const std::vector<WaicRow>& rows) {
  CsvTable t = make_table({"model", "lppd", "p_waic", "waic"});
  for (const auto& r : rows) add_row(t, {r.model, format_double(r.lppd), format_double(r.p_waic), format_double(r.waic)});
  return t;
}

std::vector<WaicRow> waic_from_table(const CsvTable& table) {
  std::vector<WaicRow> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const int line = table.lines[r];
    out.push_back({f[0], parse_double(f[1], line), parse_double(f[2], line), parse_double(f[3], line)});
  }
  return out;
}

CsvTable convergence_to_table(const ConvergenceReport& report) {
  CsvTable t = make_table({"param", "gelman_rubin", "ess", "pass"});
  for (const auto& p : report.params)
    add_row(t, {std::string(param_name(p.param)), format_double(p.gelman_rubin), format_double(p.ess), format_bool(p.pass)});
  return t;
}

ConvergenceReport convergence_from_table(const CsvTable& table) {
  ConvergenceReport report;
  report.pass = true;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const int line = table.lines[r];
    ParamConvergence pc{parse_param(f[0], line), parse_double(f[1], line), parse_double(f[2], line),
                        parse_bool(f[3], line)};
    report.pass = report.pass && pc.pass;
    report.params.push_back(pc);
  }
  return report;
}

CsvTable recovery_to_table(const std::vector<RecoveryRow>& rows) {
  CsvTable t = make_table({"replicate", "param", "median", "lo95", "hi95", "covered", "converged"});
  for (const auto& r : rows)
    add_row(t, {format_int(r.replicate), std::string(param_name(r.param)), format_double(r.median),
                format_double(r.lo95), format_double(r.hi95), format_bool(r.covered), format_bool(r.converged)});
  return t;
}

std::vector<RecoveryRow> recovery_from_table(const CsvTable& table) {
  std::vector<RecoveryRow> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const int line = table.lines[r];
    out.push_back({static_cast<int>(parse_int(f[0], line)), parse_param(f[1], line), parse_double(f[2], line),
                   parse_double(f[3], line), parse_double(f[4], line), parse_bool(f[5], line),
                   parse_bool(f[6], line)});
  }
  return out;
}

CsvTable coverage_to_table(const std::vector<CoverageRow>& rows) {
  CsvTable t = make_table({"param", "coverage_pct", "avg_ci_width"});
  for (const auto& r : rows)
    add_row(t, {std::string(param_name(r.param)), format_double(r.coverage_pct), format_double(r.avg_ci_width)});
  return t;
}

std::vector<CoverageRow> coverage_from_table(const CsvTable& table) {
  std::vector<CoverageRow> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const int line = table.lines[r];
    out.push_back({parse_param(f[0], line), parse_double(f[1], line), parse_double(f[2], line), 0});
  }
  return out;
}

CsvTable medians_to_table(const std::vector<MedianRow>& rows) {
  CsvTable t = make_table({"param", "median_of_medians", "q025", "q975"});
  for (const auto& r : rows)
    add_row(t, {std::string(param_name(r.param)), format_double(r.median_of_medians), format_double(r.q025),
                format_double(r.q975)});
  return t;
}

std::vector<MedianRow> medians_from_table(const CsvTable& table) {
  std::vector<MedianRow> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const int line = table.lines[r];
    out.push_back({parse_param(f[0], line), parse_double(f[1], line), parse_double(f[2], line), parse_double(f[3], line)});
  }
  return out;
}

CsvTable orders_to_table(const NeighborhoodSelection& selection) {
  CsvTable t = make_table({"order", "waic", "converged", "selected"});
  for (const auto& r : selection.rows)
    add_row(t, {format_int(r.order), format_double(r.waic), format_bool(r.converged),
                format_bool(r.order == selection.selected)});
  return t;
}

NeighborhoodSelection orders_from_table(const CsvTable& table) {
  NeighborhoodSelection s;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const int line = table.lines[r];
    OrderRow row{static_cast<int>(parse_int(f[0], line)), parse_double(f[1], line), parse_bool(f[2], line)};
    if (parse_bool(f[3], line)) s.selected = row.order;
    s.rows.push_back(row);
  }
  return s;
}

CsvTable curve_to_table(const std::vector<CurvePoint>& points) {
  CsvTable t = make_table({"distance", "median", "lo95", "hi95"});
  for (const auto& p : points)
    add_row(t, {format_double(p.distance), format_double(p.probability.median), format_double(p.probability.lo95),
                format_double(p.probability.hi95)});
  return t;
}

std::vector<CurvePoint> curve_from_table(const CsvTable& table) {
  std::vector<CurvePoint> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const int line = table.lines[r];
    out.push_back({parse_double(f[0], line), {parse_double(f[1], line), parse_double(f[2], line), parse_double(f[3], line)}});
  }
  return out;
}

CsvTable variant_summary_to_table(const std::vector<VariantRow>& rows) {
  CsvTable t = make_table({"model", "param", "median", "lo95", "hi95", "converged"});
  for (const auto& r : rows) {
    for (const auto& p : r.params)
      add_row(t, {r.name, std::string(param_name(p.param)), format_double(p.interval.median),
                  format_double(p.interval.lo95), format_double(p.interval.hi95), format_bool(r.converged)});
    if (r.r0)
      add_row(t, {r.name, "R0", format_double(r.r0->median), format_double(r.r0->lo95), format_double(r.r0->hi95),
                  format_bool(r.converged)});
  }
  return t;
}

}  // namespace hmmilm
