// Acceptance suite: one PASS/FAIL line per criterion. Optional arguments select
// criteria by number, e.g. `hmmilm_acceptance 1 2 6`.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cli.hpp"
#include "hmmilm/diagnostics.hpp"
#include "hmmilm/gibbs.hpp"
#include "hmmilm/iffbs.hpp"
#include "hmmilm/logspace.hpp"
#include "hmmilm/rng.hpp"
#include "hmmilm/samplers.hpp"
#include "hmmilm/simulator.hpp"
#include "hmmilm/study.hpp"
#include "oracle.hpp"
#include "stats.hpp"

using namespace hmmilm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

// ---------------------------------------------------------------------------
// 1 and 2: iFFBS against enumeration, filter normalisation

struct ExactnessStats {
  double max_tv = 0.0;
  double max_row_error = 0.0;
  bool saw_nan = false;
  int instances = 0;
  int individuals = 0;
};

ExactnessStats run_exactness() {
  ExactnessStats st;
  std::mt19937_64 gen(20240501);
  for (int k = 0; k < 50; ++k) {
    const int n = 2 + static_cast<int>(gen() % 2);
    const int T = 2 + static_cast<int>(gen() % 2);
    const testing::Instance inst = testing::random_instance(gen, n, T);
    IffbsEngine engine(inst.pop, inst.model, inst.y, inst.states, inst.v);
    FilterWorkspace ws;
    ws.resize(T);
    for (int i = 0; i < n; ++i) {
      engine.filter(i, ws);
      for (int t = 0; t <= T; ++t) {
        const auto& row = ws.log_filtered[t];
        for (double x : row) st.saw_nan |= std::isnan(x);
        st.max_row_error = std::max(st.max_row_error, std::abs(log_sum_exp(row)));
      }
      for (const auto& row : ws.log_predictive)
        for (double x : row) st.saw_nan |= std::isnan(x);
      for (double h : ws.hazard) st.saw_nan |= std::isnan(h);

      const auto expected = testing::oracle_path_distribution(i, inst.states, inst.y, inst.v, inst.model, inst.pop);
      double tv = 0.0;
      for (long long p = 0; p < testing::path_count(T); ++p) {
        const auto path = testing::decode_path(p, T);
        const double lp = engine.log_path_probability(i, ws, path);
        st.saw_nan |= std::isnan(lp);
        tv += std::abs(std::exp(lp) - expected[p]);
      }
      st.max_tv = std::max(st.max_tv, 0.5 * tv);
      ++st.individuals;
    }
    ++st.instances;
  }
  return st;
}

Outcome criterion1() {
  const auto st = run_exactness();
  return {st.max_tv < 1e-10 && !st.saw_nan, std::to_string(st.instances) + " instances, " +
                                                std::to_string(st.individuals) + " rows, max TV " + fmt(st.max_tv)};
}

Outcome criterion2() {
  const auto st = run_exactness();
  return {st.max_row_error < 1e-10 && !st.saw_nan,
          "max |logsumexp| " + fmt(st.max_row_error) + (st.saw_nan ? ", NaN seen" : ", no NaN")};
}

// ---------------------------------------------------------------------------
// 3: sampler calibration

// Mean and variance of draws against (0, 1) within 4 batch-means standard errors.
bool moments_ok(const std::vector<double>& x, std::string& detail, const std::string& label) {
  const int batches = 50;
  const double mean = testing::sample_mean(x);
  std::vector<double> sq(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) sq[k] = (x[k] - mean) * (x[k] - mean);
  const double var = testing::sample_mean(sq);
  const double z_mean = mean / testing::batch_means_se(x, batches);
  const double z_var = (var - 1.0) / testing::batch_means_se(sq, batches);
  detail += " " + label + "(z " + fmt(z_mean, 2) + "," + fmt(z_var, 2) + ")";
  return std::abs(z_mean) < 4 && std::abs(z_var) < 4;
}

double bivariate(std::span<const double> x, double rho) {
  return -0.5 * (x[0] * x[0] - 2 * rho * x[0] * x[1] + x[1] * x[1]) / (1 - rho * rho);
}

Outcome criterion3() {
  const int n = 100000;
  const int warm = 5000;
  const double rho = 0.99;
  auto normal = [](double x) { return -0.5 * x * x; };
  bool ok = true;
  std::string detail;

  {  // slice
    Rng rng(31);
    std::vector<double> d;
    double x = 0.0;
    for (int k = 0; k < warm + n; ++k) {
      x = slice_univariate(normal, x, 1.0, {}, rng);
      if (k >= warm) d.push_back(x);
    }
    ok &= moments_ok(d, detail, "slice1");
    std::vector<double> y{0.0, 0.0};
    std::array<std::vector<double>, 2> b;
    for (int k = 0; k < warm + n; ++k) {
      for (int r = 0; r < 2; ++r)
        y[r] = slice_univariate(
            [&](double v) {
              std::array<double, 2> p{y[0], y[1]};
              p[r] = v;
              return bivariate(p, rho);
            },
            y[r], 1.0, {}, rng);
      if (k >= warm)
        for (int r = 0; r < 2; ++r) b[r].push_back(y[r]);
    }
    ok &= moments_ok(b[0], detail, "slice2a");
    ok &= moments_ok(b[1], detail, "slice2b");
  }
  {  // factor slice
    Rng rng(32);
    FactorSliceSampler one({1.0}, {Bounds{}});
    std::vector<double> x{0.0};
    std::vector<double> d;
    auto t1 = [](std::span<const double> v) { return -0.5 * v[0] * v[0]; };
    for (int k = 0; k < warm; ++k) one.update(t1, x, rng, true);
    for (int k = 0; k < n; ++k) {
      one.update(t1, x, rng, false);
      d.push_back(x[0]);
    }
    ok &= moments_ok(d, detail, "afss1");
    FactorSliceSampler two({1.0, 1.0}, {Bounds{}, Bounds{}});
    std::vector<double> y{0.0, 0.0};
    std::array<std::vector<double>, 2> b;
    auto t2 = [&](std::span<const double> v) { return bivariate(v, rho); };
    for (int k = 0; k < warm; ++k) two.update(t2, y, rng, true);
    for (int k = 0; k < n; ++k) {
      two.update(t2, y, rng, false);
      for (int r = 0; r < 2; ++r) b[r].push_back(y[r]);
    }
    ok &= moments_ok(b[0], detail, "afss2a");
    ok &= moments_ok(b[1], detail, "afss2b");
  }
  {  // adaptive random walk, coordinate-wise on the bivariate target
    Rng rng(33);
    AdaptiveRandomWalk rw(1.0);
    double x = 0.0;
    double lp = normal(x);
    std::vector<double> d;
    for (int k = 0; k < warm; ++k) x = rw.step(normal, x, lp, rng, true);
    for (int k = 0; k < n; ++k) {
      x = rw.step(normal, x, lp, rng, false);
      d.push_back(x);
    }
    ok &= moments_ok(d, detail, "rw1");
    std::array<AdaptiveRandomWalk, 2> walk{AdaptiveRandomWalk(1.0), AdaptiveRandomWalk(1.0)};
    std::array<double, 2> y{0.0, 0.0};
    std::array<std::vector<double>, 2> b;
    for (int k = 0; k < warm + n; ++k) {
      for (int r = 0; r < 2; ++r) {
        auto f = [&](double v) {
          std::array<double, 2> p = y;
          p[r] = v;
          return bivariate(p, rho);
        };
        double cur = f(y[r]);
        y[r] = walk[r].step(f, y[r], cur, rng, k < warm);
      }
      if (k >= warm)
        for (int r = 0; r < 2; ++r) b[r].push_back(y[r]);
    }
    ok &= moments_ok(b[0], detail, "rw2a");
    ok &= moments_ok(b[1], detail, "rw2b");
  }
  return {ok, "1e5 draws each;" + detail};
}

// ---------------------------------------------------------------------------
// 4: Geweke prior-predictive check

Outcome criterion4() {
  const int n = 5;
  const int T = 4;
  FitProblem problem;
  problem.population = complete_graph(n);
  problem.model.kernel.kind = KernelKind::HomogeneousWardClosure;
  problem.model.initial = InitialStateDist(n, {0.8, 0.2, 0.0});
  problem.priors = default_priors();
  problem.priors[static_cast<int>(ParamId::Theta)] = Prior::uniform(0.0, 1.0);
  problem.priors[static_cast<int>(ParamId::M)] = Prior::uniform(1.5, 6.0);
  problem.priors[static_cast<int>(ParamId::Alpha)] = Prior::uniform(0.0, 0.5);
  problem.priors[static_cast<int>(ParamId::Beta0)] = Prior::uniform(0.0, 0.5);
  const std::array<ParamId, 4> params{ParamId::Theta, ParamId::M, ParamId::Alpha, ParamId::Beta0};

  auto prior_draw = [&](Rng& rng) {
    ModelParams v;
    for (ParamId id : params) v.set(id, problem.priors[static_cast<int>(id)].sample(rng));
    return v;
  };
  auto infected = [&](const StateMatrix& s) {
    double c = 0;
    for (int i = 0; i < n; ++i) c += s(i, T) != DiseaseState::Susceptible;
    return c;
  };

  // Test functions: each parameter, its indicators below the prior quartiles, and the
  // number ever infected by T.
  std::vector<std::function<double(const ModelParams&, const StateMatrix&)>> g;
  std::vector<std::string> names;
  for (ParamId id : params) {
    const Prior& p = problem.priors[static_cast<int>(id)];
    g.push_back([id](const ModelParams& v, const StateMatrix&) { return v.get(id); });
    names.push_back(std::string(param_name(id)));
    for (double q : {0.25, 0.75}) {
      const double cut = p.lower() + q * (p.upper() - p.lower());
      g.push_back([id, cut](const ModelParams& v, const StateMatrix&) { return v.get(id) < cut ? 1.0 : 0.0; });
      names.push_back(std::string(param_name(id)) + "<q" + fmt(q, 2));
    }
  }
  g.push_back([&](const ModelParams&, const StateMatrix& s) { return infected(s); });
  names.push_back("infected");

  const int mc = 100000;
  const int sc = 200000;
  std::vector<std::vector<double>> a(g.size()), b(g.size());
  Rng rng(44);
  for (int k = 0; k < mc; ++k) {
    const ModelParams v = prior_draw(rng);
    const Outbreak o = simulate_outbreak(problem.population, problem.model, v, T, rng);
    for (std::size_t f = 0; f < g.size(); ++f) a[f].push_back(g[f](v, o.states));
  }

  const ModelParams v0 = prior_draw(rng);
  const Outbreak o0 = simulate_outbreak(problem.population, problem.model, v0, T, rng);
  problem.data = o0.detections;
  MCMCConfig cfg;
  cfg.seed = 45;
  cfg.chains = 1;
  GibbsChain chain(problem, cfg, 0);
  chain.set_state(o0.states, v0);
  Rng yrng(46);
  for (int k = 0; k < sc; ++k) {
    chain.iterate(false);
    chain.data() = simulate_observations(chain.states(), problem.model.observation, chain.params().theta, yrng);
    for (std::size_t f = 0; f < g.size(); ++f) b[f].push_back(g[f](chain.params(), chain.states()));
  }

  bool ok = true;
  double min_p = 1.0;
  std::string worst;
  for (std::size_t f = 0; f < g.size(); ++f) {
    const double se_a = std::sqrt(testing::sample_variance(a[f]) / mc);
    const double se_b = testing::batch_means_se(b[f], 50);
    const double z = (testing::sample_mean(a[f]) - testing::sample_mean(b[f])) / std::hypot(se_a, se_b);
    const double p = testing::normal_two_sided_p(z);
    if (p < min_p) {
      min_p = p;
      worst = names[f];
    }
    ok &= p > 0.001;
  }
  return {ok, std::to_string(g.size()) + " tests, min p " + fmt(min_p) + " (" + worst + ")"};
}

// ---------------------------------------------------------------------------
// 5: desk-scale recovery

SimConfig desk_sim(int rows, int cols, KernelKind kind) {
  SimConfig sim;
  sim.population = queen_neighbors(GridSpec{rows, cols, 1.0, 0.5}, 3);
  sim.model.kernel.kind = kind;
  sim.model.initial = InitialStateDist(rows * cols, {0.99, 0.01, 0.0});
  sim.truth.theta = 0.55;
  sim.truth.m = 3.0;
  sim.truth.alpha = 0.015;
  sim.truth.beta = {0.07, 3.0, NAN};
  sim.horizon = 7;
  return sim;
}

Outcome criterion5() {
  StudyConfig cfg;
  cfg.sim = desk_sim(10, 10, KernelKind::PowerLawTaylor);
  cfg.replications = 20;
  cfg.seed = 5;
  cfg.mcmc.iterations = 20000;
  cfg.mcmc.burn_in = 5000;
  cfg.mcmc.chains = 3;
  const RecoveryReport rep = run_recovery_study(cfg);
  const auto [lo, hi] = binomial_band(20, 0.95);

  bool ok = rep.failures.empty();
  std::string detail = std::to_string(rep.converged) + "/20 converged;";
  for (ParamId id : {ParamId::Theta, ParamId::M, ParamId::Alpha, ParamId::Beta0, ParamId::Beta1}) {
    int covered = 0;
    std::vector<double> medians;
    for (const auto& r : rep.rows)
      if (r.param == id) {
        covered += r.covered;
        medians.push_back(r.median);
      }
    ok &= medians.size() == 20 && covered >= lo && covered <= hi;
    detail += " " + std::string(param_name(id)) + " " + std::to_string(covered) + "/20";
    if (id == ParamId::Alpha || id == ParamId::Beta0 || id == ParamId::Beta1) {
      const double truth = cfg.sim.truth.get(id);
      const double mm = quantile(medians, 0.5);
      const double rel = std::abs(mm - truth) / truth;
      ok &= rel < 0.25;
      detail += " (median " + fmt(mm) + ", rel " + fmt(rel, 2) + ")";
    }
  }
  double seconds = 0.0;
  for (double s : rep.seconds) seconds += s;
  detail += "; band [" + std::to_string(lo) + "," + std::to_string(hi) + "], " + fmt(seconds, 5) + " s";
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 6: partially marginalised pointwise densities against enumeration

Outcome criterion6() {
  std::mt19937_64 gen(606);
  double worst = 0.0;
  int cells = 0;
  for (int k = 0; k < 50; ++k) {
    const testing::Instance inst = testing::random_instance(gen, 2, 2);
    IffbsEngine engine(inst.pop, inst.model, inst.y, inst.states, inst.v);
    FilterWorkspace ws;
    ws.resize(2);
    std::array<double, 2> out{};
    for (int i = 0; i < 2; ++i) {
      engine.marginal_pointwise(i, ws, out);
      for (int t = 1; t <= 2; ++t) {
        const double expected =
            testing::oracle_pm_pointwise(i, t, inst.states, inst.y, inst.v, inst.model, inst.pop);
        // relative error of the density
        const double rel = (expected == kNegInf && out[t - 1] == kNegInf) ? 0.0 : std::abs(std::expm1(out[t - 1] - expected));
        worst = std::max(worst, std::isnan(rel) ? INFINITY : rel);
        ++cells;
      }
    }
  }
  return {worst < 1e-10, std::to_string(cells) + " cells, max relative error " + fmt(worst)};
}

// ---------------------------------------------------------------------------
// 7: kernel comparison at desk scale

Outcome criterion7() {
  int taylor_wins = 0;
  std::string detail;
  for (int r = 0; r < 5; ++r) {
    SimConfig sim = desk_sim(15, 15, KernelKind::PowerLawExact);
    sim.seed = Rng::derive(7, 2 * r);
    const Outbreak o = simulate_outbreak(sim);
    MCMCConfig cfg;
    cfg.iterations = 20000;
    cfg.burn_in = 5000;
    cfg.chains = 1;
    cfg.seed = Rng::derive(7, 2 * r + 1);
    std::array<double, 2> waic{};
    int k = 0;
    for (KernelKind kind : {KernelKind::PowerLawTaylor, KernelKind::Linear}) {
      FitProblem problem{sim.population, sim.model, o.detections, default_priors()};
      problem.model.kernel.kind = kind;
      const FitReport fit = fit_and_summarize(problem, cfg);
      waic[k++] = fit.waic_marginal ? fit.waic_marginal->waic : NAN;
    }
    const bool win = waic[0] < waic[1];
    taylor_wins += win;
    detail += " seed" + std::to_string(r) + ":" + fmt(waic[0], 6) + "/" + fmt(waic[1], 6);
  }
  return {taylor_wins >= 4, std::to_string(taylor_wins) + "/5 Taylor lower (Taylor/Linear WAIC)" + detail};
}

// ---------------------------------------------------------------------------
// 8: observation-model structure

Outcome criterion8() {
  bool ok = true;
  std::string detail;
  {
    SimConfig sim = desk_sim(10, 10, KernelKind::PowerLawTaylor);
    sim.model.observation = ObservationModel::KnownInfection;
    sim.truth.theta = NAN;
    sim.seed = 81;
    const Outbreak o = simulate_outbreak(sim);
    FitProblem problem{sim.population, sim.model, o.detections, default_priors()};
    MCMCConfig cfg;
    cfg.iterations = 3000;
    cfg.burn_in = 1000;
    cfg.chains = 2;
    cfg.seed = 82;
    const PosteriorArchive a = gibbs_run(problem, cfg);
    bool theta_gone = !a.sampled[static_cast<int>(ParamId::Theta)] && !a.active[static_cast<int>(ParamId::Theta)];
    for (const auto& c : a.chains)
      for (const auto& d : c.draws) theta_gone &= std::isnan(d.theta);
    ok &= theta_gone && !a.failed();
    detail += std::string("known infection: theta ") + (theta_gone ? "absent" : "present");
  }
  {
    SimConfig sim = desk_sim(10, 10, KernelKind::PowerLawTaylor);
    sim.seed = 83;
    const Outbreak o = simulate_outbreak(sim);
    int undetected = 0;
    for (int i = 0; i < 100; ++i)
      undetected += o.states(i, 7) != DiseaseState::Susceptible && !o.detections.first_detection(i);
    FitProblem problem{sim.population, sim.model, o.detections, default_priors()};
    MCMCConfig cfg;
    cfg.iterations = 10000;
    cfg.burn_in = 3000;
    cfg.chains = 2;
    cfg.seed = 84;
    std::array<double, 2> p05{};
    for (int k = 0; k < 2; ++k) {
      cfg.constraints.no_undetected_infections = k == 1;
      const PosteriorArchive a = gibbs_run(problem, cfg);
      std::vector<ModelParams> draws;
      for (const auto& c : a.chains) draws.insert(draws.end(), c.draws.begin(), c.draws.end());
      p05[k] = kernel_curve(draws, sim.model.kernel, {0.5})[0].probability.median;
      ok &= !a.failed();
    }
    ok &= undetected > 0 && p05[1] < p05[0];
    detail += "; " + std::to_string(undetected) + " undetected infections, P(inf | d=0.5) unconstrained " +
              fmt(p05[0], 3) + " vs constrained " + fmt(p05[1], 3);
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 9: diagnostics

Outcome criterion9() {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> d;
  std::vector<double> x(5000);
  for (auto& v : x) v = d(gen);
  const double r = gelman_rubin({x, x, x}).value;
  const int n = 100000;
  const double ess = effective_sample_size(testing::ar1_series(0.9, n, 99)).value;
  const double rel = std::abs(ess - n / 19.0) / (n / 19.0);
  return {r == 1.0 && rel < 0.2, "R-hat identical chains " + fmt(r, 17) + ", AR(1) ESS " + fmt(ess, 6) +
                                     " vs " + fmt(n / 19.0, 6) + " (rel " + fmt(rel, 2) + ")"};
}

// ---------------------------------------------------------------------------
// 10: reproducibility across thread counts

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hmmilm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (status != 0) std::cerr << err.str();
  return status;
}

Outcome criterion10() {
  const fs::path dir = fs::temp_directory_path() / ("hmmilm_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::ofstream(dir / "run.ini") << "[population]\ngrid = 8:8:1:0.5\norder = 2\n"
                                    "[model]\nhorizon = 6\ninitial = 0.95,0.05,0\n"
                                    "[mcmc]\niterations = 2000\nburnin = 500\nchains = 3\nthin = 5\nseed = 10\n"
                                    "[truth]\ntheta = 0.55\nm = 3\nalpha = 0.015\nbeta0 = 0.07\nbeta1 = 3\n";
  const std::string cfg = (dir / "run.ini").string();
  bool ok = cli({"simulate", "--config", cfg, "--out", (dir / "sim").string()}) == 0;
  for (const char* threads : {"1", "2", "3"}) {
    ::setenv("HMMILM_THREADS", threads, 1);
    ok &= cli({"fit", "--config", cfg, "--data", (dir / "sim" / "detections.csv").string(), "--out",
               (dir / (std::string("fit") + threads)).string()}) == 0;
  }
  ::unsetenv("HMMILM_THREADS");
  int files = 0;
  int identical = 0;
  if (ok)
    for (const auto& e : fs::directory_iterator(dir / "fit1")) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      const std::string ref = slurp(e.path());
      identical += ref == slurp(dir / "fit2" / e.path().filename()) && ref == slurp(dir / "fit3" / e.path().filename());
    }
  fs::remove_all(dir);
  ok &= files > 0 && identical == files;
  return {ok, std::to_string(identical) + "/" + std::to_string(files) + " CSVs identical for HMMILM_THREADS=1,2,3"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                       criterion5, criterion6, criterion7, criterion8,
                                                       criterion9, criterion10};
  std::set<int> selected;
  for (int k = 1; k < argc; ++k) selected.insert(std::atoi(argv[k]));
  int failures = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int number = static_cast<int>(c) + 1;
    if (!selected.empty() && !selected.count(number)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[c]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "CRITERION " << number << ": " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail << " ["
              << fmt(secs, 4) << " s]" << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
