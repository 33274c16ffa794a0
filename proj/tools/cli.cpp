#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hmmilm/config.hpp"
#include "hmmilm/error.hpp"
#include "hmmilm/io.hpp"
#include "hmmilm/simulator.hpp"
#include "hmmilm/study.hpp"

#ifndef HMMILM_VERSION
#define HMMILM_VERSION "unknown"
#endif

namespace hmmilm::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string data;
  std::string population;
  std::string grid;
  std::string covariates;
  std::string out = ".";
  std::optional<int> chains;
  std::optional<int> iterations;
  std::optional<int> burnin;
  std::optional<int> thin;
  std::optional<std::uint64_t> seed;
  // subcommand specific
  std::string kind = "recovery";
  std::string archive;
  std::string draws;
  std::string kernel;
  std::string distances;
};

void add_common(CLI::App* app, Options& o, bool data) {
  app->add_option("--config", o.config, "Run configuration (INI)");
  if (data) app->add_option("--data", o.data, "Detections CSV (id,t)");
  app->add_option("--population", o.population, "Population CSV (id,x,y)");
  app->add_option("--grid", o.grid, "Grid population rows:cols:row_spacing:within_row_spacing");
  app->add_option("--covariates", o.covariates, "Covariate CSV (t,W)");
  app->add_option("--chains", o.chains, "Number of chains");
  app->add_option("--iterations", o.iterations, "Iterations per chain");
  app->add_option("--burnin", o.burnin, "Burn-in iterations");
  app->add_option("--thin", o.thin, "Thinning interval for states and WAIC");
  app->add_option("--seed", o.seed, "Master seed");
  app->add_option("--out", o.out, "Output directory")->capture_default_str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig load(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.config.empty()) {
    cfg.mcmc.fixed = cfg.model.fixed;
    cfg.mcmc.constraints = cfg.model.constraints;
  }
  if (!o.grid.empty()) cfg.grid = parse_grid(o.grid);
  if (o.chains) cfg.mcmc.chains = *o.chains;
  if (o.iterations) cfg.mcmc.iterations = *o.iterations;
  if (o.burnin) cfg.mcmc.burn_in = *o.burnin;
  if (o.thin) cfg.mcmc.thin = *o.thin;
  if (o.seed) {
    cfg.mcmc.seed = *o.seed;
    cfg.study_seed = *o.seed;
  }
  return cfg;
}

std::optional<GridSpec> grid_for(const Options& o, const RunConfig& cfg) {
  if (!o.population.empty()) return std::nullopt;
  return cfg.grid;
}

std::optional<int> individuals_for(const Options& o, const RunConfig& cfg) {
  if (!o.population.empty() || cfg.grid) return std::nullopt;
  return cfg.individuals;
}

Population build_population(const Options& o, const RunConfig& cfg) {
  const auto grid = grid_for(o, cfg);
  const auto& rule = cfg.neighborhood;
  if (grid) {
    if (rule.kind == NeighborhoodRule::Kind::Radius) return radius_neighbors(build_grid(*grid), rule.radius);
    if (rule.kind == NeighborhoodRule::Kind::Complete) return complete_graph(grid->rows * grid->cols, build_grid(*grid));
    return queen_neighbors(*grid, rule.order);
  }
  if (!o.population.empty()) {
    auto pts = points_from_table(read_csv_file(o.population, {"id", "x", "y"}));
    if (rule.kind == NeighborhoodRule::Kind::Radius) return radius_neighbors(std::move(pts), rule.radius);
    if (rule.kind == NeighborhoodRule::Kind::Complete) return complete_graph(static_cast<int>(pts.size()), std::move(pts));
    throw ConfigError("queen neighbourhoods need a grid; use complete or radius with a population file");
  }
  if (cfg.individuals) return complete_graph(*cfg.individuals);
  throw ConfigError("no population: give --grid, --population or population.individuals");
}

IngestedData load_data(const Options& o, const RunConfig& cfg, bool single_detection) {
  if (o.data.empty()) throw ConfigError("--data is required");
  std::optional<fs::path> pop;
  if (!o.population.empty()) pop = o.population;
  std::optional<fs::path> cov;
  if (!o.covariates.empty()) cov = o.covariates;
  const auto grid = grid_for(o, cfg);
  const auto individuals = individuals_for(o, cfg);
  if (!grid && !pop && !individuals) throw ConfigError("no population: give --grid, --population or population.individuals");
  return ingest(o.data, grid, pop, cov, cfg.horizon, cfg.neighborhood, single_detection, individuals);
}

fs::path prepare_out(const Options& o) {
  fs::path dir(o.out);
  fs::create_directories(dir);
  return dir;
}

void write_manifest(const fs::path& dir, const std::string& command, int argc, const char* const* argv,
                    const Options& o, std::uint64_t seed) {
  std::ofstream m(dir / "manifest.txt", std::ios::binary);
  m << "command = " << command << '\n';
  m << "arguments =";
  for (int k = 1; k < argc; ++k) m << ' ' << argv[k];
  m << '\n';
  m << "seed = " << seed << '\n';
  auto hash_of = [&](const char* name, const std::string& path) {
    if (path.empty()) return;
    m << name << " = " << path << '\n';
    m << name << "_hash = " << content_hash(read_file(path)) << '\n';
  };
  hash_of("config", o.config);
  hash_of("data", o.data);
  hash_of("population", o.population);
  hash_of("covariates", o.covariates);
  hash_of("draws", o.draws);
  if (!o.grid.empty()) m << "grid = " << o.grid << '\n';
  m << "hmmilm_version = " << HMMILM_VERSION << '\n';
#if defined(__clang__)
  m << "compiler = clang " << __clang_version__ << '\n';
#elif defined(__GNUC__)
  m << "compiler = gcc " << __VERSION__ << '\n';
#endif
  m << "cxx_standard = " << __cplusplus << '\n';
}

void write_timing(const fs::path& dir, const std::vector<std::pair<std::string, double>>& entries) {
  std::ofstream t(dir / "timing.txt", std::ios::binary);
  for (const auto& [job, seconds] : entries) t << job << ' ' << format_double(seconds) << '\n';
}

// Summaries derived from the archive tables; fit and summarize share this path so their
// outputs agree byte for byte.
struct TableSummaries {
  StateSummary states;
  std::vector<NamedInterval> params;
  std::vector<NamedInterval> functionals;
};

TableSummaries summaries_from_tables(const std::vector<StateCount>& counts, const std::vector<FunctionalDraw>& functionals,
                                     const std::vector<ParamDraw>& draws, int beta_count) {
  TableSummaries s;
  for (const auto& c : counts) {
    s.states.individuals = std::max(s.states.individuals, c.id + 1);
    s.states.horizon = std::max(s.states.horizon, c.t);
  }
  if (counts.size() != static_cast<std::size_t>(s.states.individuals) * (s.states.horizon + 1))
    throw DataError("state counts must list every (id, t) exactly once");
  s.states.probs.resize(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const auto& c = counts[k];
    const long long total = c.n[0] + c.n[1] + c.n[2];
    if (total == 0) throw DataError("state counts hold no retained draws");
    for (int st = 0; st < 3; ++st) s.states.probs[k][st] = static_cast<double>(c.n[st]) / static_cast<double>(total);
  }
  for (int p = 0; p < 3 + beta_count; ++p) {
    const auto id = static_cast<ParamId>(p);
    std::vector<double> values;
    for (const auto& d : draws)
      if (!std::isnan(d.v.get(id))) values.push_back(d.v.get(id));
    if (!values.empty()) s.params.push_back({std::string(param_name(id)), summarize_interval(values)});
  }
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> by_name;
  for (const auto& f : functionals) {
    auto [it, inserted] = by_name.try_emplace(f.name);
    if (inserted) order.push_back(f.name);
    it->second.push_back(f.value);
  }
  for (const auto& name : order) s.functionals.push_back({name, summarize_interval(by_name[name])});
  return s;
}

void write_summaries(const fs::path& dir, const TableSummaries& s) {
  write_csv_file(dir / "state_probs.csv", state_probs_to_table(s.states));
  write_csv_file(dir / "param_summary.csv", intervals_to_table(s.params));
  write_csv_file(dir / "functional_summary.csv", intervals_to_table(s.functionals));
}

std::vector<WaicRow> waic_rows(const FitReport& r) {
  std::vector<WaicRow> rows;
  if (r.waic_marginal)
    rows.push_back({"partially_marginalized", r.waic_marginal->lppd, r.waic_marginal->p_waic, r.waic_marginal->waic});
  if (r.waic_conditional)
    rows.push_back({"conditional", r.waic_conditional->lppd, r.waic_conditional->p_waic, r.waic_conditional->waic});
  return rows;
}

CsvTable waic_pointwise_table(const WaicResult& w, int horizon) {
  CsvTable t;
  t.header = {"id", "t", "lppd", "p_waic"};
  for (std::size_t c = 0; c < w.pointwise_lppd.size(); ++c) {
    const auto i = static_cast<long long>(c / horizon);
    const auto k = static_cast<long long>(c % horizon) + 1;
    t.rows.push_back({std::to_string(i), std::to_string(k), format_double(w.pointwise_lppd[c]),
                      format_double(w.pointwise_var[c])});
    t.lines.push_back(static_cast<int>(t.rows.size()) + 1);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_simulate(const Options& o, int argc, const char* const* argv, std::ostream& out) {
  RunConfig cfg = load(o);
  SimConfig sim;
  sim.population = build_population(o, cfg);
  std::vector<std::uint8_t> ward;
  if (!o.covariates.empty()) ward = covariates_from_table(read_csv_file(o.covariates, {"t", "W"}), cfg.horizon);
  sim.model = build_model(cfg.model, sim.population.size(), ward);
  sim.truth = cfg.truth;
  sim.horizon = cfg.horizon;
  sim.seed = cfg.mcmc.seed;
  const Outbreak res = simulate_outbreak(sim);
  const fs::path dir = prepare_out(o);
  write_csv_file(dir / "states.csv", states_to_table(res.states));
  write_csv_file(dir / "detections.csv", detections_to_table(res.detections));
  if (sim.population.has_coordinates())
    write_csv_file(dir / "population.csv", points_to_table(sim.population.coordinates()));
  write_manifest(dir, "simulate", argc, argv, o, sim.seed);
  out << "simulated " << sim.population.size() << " individuals over T=" << sim.horizon << "; "
      << res.detections.total_detections() << " detections\n";
  return 0;
}

int cmd_fit(const Options& o, int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load(o);
  IngestedData data = load_data(o, cfg, single_detection_data(cfg.model.observation));
  const int n = data.population.size();
  FitProblem problem{data.population, build_model(cfg.model, n, data.covariates.ward_closed), data.detections,
                     cfg.model.priors};
  validate_model(problem.model, problem.population, cfg.horizon);
  const FitReport rep = fit_and_summarize(problem, cfg.mcmc, cfg.thresholds);

  const fs::path dir = prepare_out(o);
  const int betas = problem.model.kernel.parameter_count();
  const auto draws = archive_draws(rep.archive);
  const auto functionals = archive_functionals(rep.archive);
  const auto counts = archive_state_counts(rep.archive);
  write_csv_file(dir / "param_draws.csv", param_draws_to_table(draws, betas));
  write_csv_file(dir / "functional_draws.csv", functional_draws_to_table(functionals));
  write_csv_file(dir / "state_counts.csv", state_counts_to_table(counts));
  write_csv_file(dir / "convergence.csv", convergence_to_table(rep.convergence));
  write_csv_file(dir / "waic.csv", waic_to_table(waic_rows(rep)));
  if (rep.waic_marginal)
    write_csv_file(dir / "waic_pointwise.csv", waic_pointwise_table(*rep.waic_marginal, cfg.horizon));
  if (!rep.archive.failed()) write_summaries(dir, summaries_from_tables(counts, functionals, draws, betas));
  write_manifest(dir, "fit", argc, argv, o, cfg.mcmc.seed);
  write_timing(dir, {{"fit", rep.seconds}});

  if (rep.archive.failed()) {
    for (const auto& c : rep.archive.chains)
      if (c.failure) {
        err << "hmmilm: error: chain: " << *c.failure << '\n';
        break;
      }
    return 1;
  }
  out << "fit complete: " << rep.archive.chains.size() << " chains, convergence "
      << (rep.convergence.pass ? "pass" : "fail");
  if (rep.waic_marginal) out << ", WAIC " << format_double(rep.waic_marginal->waic);
  out << '\n';
  return 0;
}

int cmd_compare(const Options& o, int argc, const char* const* argv, std::ostream& out) {
  RunConfig cfg = load(o);
  if (cfg.variants.empty()) throw ConfigError("compare needs at least one [variant.NAME] section");
  bool single = true;
  for (const auto& v : cfg.variants) single = single && single_detection_data(v.model.observation);
  IngestedData data = load_data(o, cfg, single);
  const int n = data.population.size();
  const auto grid = grid_for(o, cfg);

  std::vector<Variant> variants;
  for (const auto& vs : cfg.variants) {
    Variant v;
    v.name = vs.name;
    v.model = build_model(vs.model, n, data.covariates.ward_closed);
    v.priors = vs.model.priors;
    v.fixed = vs.model.fixed;
    v.constraints = vs.model.constraints;
    if (vs.model.order && *vs.model.order != cfg.neighborhood.order) {
      if (!grid) throw ConfigError("variant " + vs.name + ": a neighbourhood order needs a grid population");
      v.population = queen_neighbors(*grid, *vs.model.order);
    }
    validate_model(v.model, v.population ? *v.population : data.population, cfg.horizon);
    variants.push_back(std::move(v));
  }
  const auto rows = run_variant_ladder(data.population, data.detections, variants, cfg.mcmc, cfg.thresholds);

  const fs::path dir = prepare_out(o);
  std::vector<WaicRow> marginal;
  std::vector<WaicRow> conditional;
  std::vector<std::pair<std::string, double>> timing;
  for (const auto& r : rows) {
    if (r.waic_marginal) marginal.push_back({r.name, r.waic_marginal->lppd, r.waic_marginal->p_waic, r.waic_marginal->waic});
    if (r.waic_conditional)
      conditional.push_back({r.name, r.waic_conditional->lppd, r.waic_conditional->p_waic, r.waic_conditional->waic});
    timing.emplace_back(r.name, r.seconds);
  }
  write_csv_file(dir / "waic.csv", waic_to_table(marginal));
  write_csv_file(dir / "waic_conditional.csv", waic_to_table(conditional));
  write_csv_file(dir / "variant_summary.csv", variant_summary_to_table(rows));
  write_manifest(dir, "compare", argc, argv, o, cfg.mcmc.seed);
  write_timing(dir, timing);
  for (const auto& r : rows)
    out << r.name << ": WAIC " << (r.waic_marginal ? format_double(r.waic_marginal->waic) : std::string("NA"))
        << (r.converged ? "" : " (not converged)") << '\n';
  return 0;
}

int cmd_study(const Options& o, int argc, const char* const* argv, std::ostream& out) {
  RunConfig cfg = load(o);
  const fs::path dir = prepare_out(o);
  if (o.kind == "recovery") {
    StudyConfig sc;
    sc.sim.population = build_population(o, cfg);
    sc.sim.model = build_model(cfg.model, sc.sim.population.size(), {});
    sc.sim.truth = cfg.truth;
    sc.sim.horizon = cfg.horizon;
    sc.priors = cfg.model.priors;
    if (cfg.study_prior_m) sc.priors[static_cast<int>(ParamId::M)] = *cfg.study_prior_m;
    sc.mcmc = cfg.mcmc;
    sc.thresholds = cfg.thresholds;
    sc.replications = cfg.replications;
    sc.seed = cfg.study_seed;
    sc.threads = cfg.study_threads;
    const RecoveryReport rep = run_recovery_study(sc);
    write_csv_file(dir / "recovery.csv", recovery_to_table(rep.rows));
    write_csv_file(dir / "coverage.csv", coverage_to_table(rep.coverage));
    write_csv_file(dir / "medians.csv", medians_to_table(rep.medians));
    {
      std::ofstream f(dir / "failures.txt", std::ios::binary);
      for (const auto& [r, why] : rep.failures) f << r << ' ' << why << '\n';
    }
    std::vector<std::pair<std::string, double>> timing;
    for (std::size_t r = 0; r < rep.seconds.size(); ++r) timing.emplace_back("replicate_" + std::to_string(r), rep.seconds[r]);
    write_timing(dir, timing);
    write_manifest(dir, "study", argc, argv, o, sc.seed);
    out << "recovery study: " << rep.converged << "/" << rep.replications << " replicates converged\n";
    return 0;
  }
  if (o.kind == "order") {
    const auto grid = grid_for(o, cfg);
    if (!grid) throw ConfigError("neighbourhood selection needs a grid population");
    IngestedData data = load_data(o, cfg, single_detection_data(cfg.model.observation));
    const ModelSpec model = build_model(cfg.model, data.population.size(), data.covariates.ward_closed);
    const auto sel = run_neighborhood_selection(*grid, model, data.detections, cfg.model.priors, cfg.mcmc, cfg.orders,
                                                cfg.order_threshold, cfg.thresholds);
    write_csv_file(dir / "order_waic.csv", orders_to_table(sel));
    write_manifest(dir, "study", argc, argv, o, cfg.mcmc.seed);
    out << "selected neighbourhood order " << sel.selected << '\n';
    return 0;
  }
  throw ConfigError("--kind must be recovery or order");
}

int cmd_summarize(const Options& o, int argc, const char* const* argv, std::ostream& out) {
  if (o.archive.empty()) throw ConfigError("--archive is required");
  const fs::path in(o.archive);
  const auto counts = state_counts_from_table(read_csv_file(in / "state_counts.csv", {"id", "t", "n_sus", "n_inf", "n_rem"}));
  const auto functionals =
      functional_draws_from_table(read_csv_file(in / "functional_draws.csv", {"chain", "iteration", "name", "value"}));
  const auto draw_table = read_csv_file(in / "param_draws.csv", {});
  const auto draws = param_draws_from_table(draw_table);
  const int betas = static_cast<int>(draw_table.header.size()) - 5;
  const auto s = summaries_from_tables(counts, functionals, draws, betas);
  const fs::path dir = prepare_out(o);
  write_summaries(dir, s);
  write_manifest(dir, "summarize", argc, argv, o, 0);
  out << "summarized " << s.states.individuals << " individuals, " << s.functionals.size() << " functionals\n";
  return 0;
}

int cmd_kernel_curve(const Options& o, int argc, const char* const* argv, std::ostream& out) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (!o.kernel.empty()) {
    const auto k = kernel_from_name(o.kernel);
    if (!k) throw ConfigError("unknown kernel '" + o.kernel + "'");
    cfg.model.kernel.kind = *k;
  }
  std::string draws_path = o.draws;
  if (draws_path.empty() && !o.archive.empty()) draws_path = (fs::path(o.archive) / "param_draws.csv").string();
  if (draws_path.empty()) throw ConfigError("--draws or --archive is required");
  const auto draws = param_draws_from_table(read_csv_file(draws_path, {}));
  std::vector<ModelParams> params;
  for (const auto& d : draws) params.push_back(d.v);
  std::vector<double> distances;
  if (!o.distances.empty())
    distances = parse_distance_grid(o.distances);
  else if (!cfg.curve_distances.empty())
    distances = cfg.curve_distances;
  else
    distances = cfg.model.kernel.kind == KernelKind::NeighborhoodOrder ? std::vector<double>{1, 2, 3}
                                                                         : parse_distance_grid("0.5:3.35:0.05");
  const auto curve = kernel_curve(params, cfg.model.kernel, distances);
  const fs::path dir = prepare_out(o);
  write_csv_file(dir / "kernel_curve.csv", curve_to_table(curve));
  Options with_draws = o;
  with_draws.draws = draws_path;
  write_manifest(dir, "kernel-curve", argc, argv, with_draws, 0);
  out << "kernel curve over " << distances.size() << " points from " << params.size() << " draws\n";
  return 0;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hidden Markov individual-level epidemic models", "hmmilm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", HMMILM_VERSION);
  Options o;

  auto* simulate = app.add_subcommand("simulate", "Simulate states and detections from a configured model");
  add_common(simulate, o, false);
  auto* fit = app.add_subcommand("fit", "Fit a model to detection data");
  add_common(fit, o, true);
  auto* compare = app.add_subcommand("compare", "Fit each [variant.*] of the config to the same data");
  add_common(compare, o, true);
  auto* study = app.add_subcommand("study", "Recovery study or neighbourhood order selection");
  add_common(study, o, true);
  study->add_option("--kind", o.kind, "recovery or order")->capture_default_str();
  auto* summarize = app.add_subcommand("summarize", "State probabilities and functional summaries of a fit archive");
  summarize->add_option("--archive", o.archive, "Output directory of a fit")->required();
  summarize->add_option("--out", o.out, "Output directory")->capture_default_str();
  auto* curve = app.add_subcommand("kernel-curve", "Infection probability versus distance over posterior draws");
  curve->add_option("--config", o.config, "Run configuration (INI) for the kernel settings");
  curve->add_option("--draws", o.draws, "Parameter draw CSV");
  curve->add_option("--archive", o.archive, "Output directory of a fit (uses its param_draws.csv)");
  curve->add_option("--kernel", o.kernel, "Kernel name");
  curve->add_option("--distances", o.distances, "from:to:step or a comma separated list");
  curve->add_option("--out", o.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << HMMILM_VERSION << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "hmmilm: error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(o, argc, argv, out);
    if (fit->parsed()) return cmd_fit(o, argc, argv, out, err);
    if (compare->parsed()) return cmd_compare(o, argc, argv, out);
    if (study->parsed()) return cmd_study(o, argc, argv, out);
    if (summarize->parsed()) return cmd_summarize(o, argc, argv, out);
    if (curve->parsed()) return cmd_kernel_curve(o, argc, argv, out);
  } catch (const ConfigError& e) {
    err << "hmmilm: error: config: " << one_line(e.what()) << '\n';
    return 3;
  } catch (const DataError& e) {
    err << "hmmilm: error: data: " << one_line(e.what()) << '\n';
    return 4;
  } catch (const FilterDegeneracyError& e) {
    err << "hmmilm: error: filter: " << one_line(e.what()) << '\n';
    return 1;
  } catch (const Error& e) {
    err << "hmmilm: error: runtime: " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "hmmilm: error: internal: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 2;
}

}  // namespace hmmilm::cli
