#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Result {
  int status = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "hmmilm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = hmmilm::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("hmmilm_cli_" + std::to_string(std::rand()) + "_" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

constexpr const char* kConfig = R"([population]
grid = 6:6:1:0.5
neighborhood = queen
order = 1

[model]
horizon = 5
initial = 0.85,0.15,0

[priors]
m = uniform 1 10

[mcmc]
iterations = 600
burnin = 100
chains = 2
thin = 5
seed = 3

[truth]
theta = 0.6
m = 3
alpha = 0.02
beta0 = 0.1
beta1 = 2
)";

}  // namespace

TEST_CASE("usage errors are one line with status 2") {
  for (const auto& args : std::vector<std::vector<std::string>>{{}, {"fly"}, {"fit", "--chains", "x"}}) {
    const Result r = run(args);
    CHECK(r.status == 2);
    CHECK(r.err.rfind("hmmilm: error: ", 0) == 0);
    CHECK(count_lines(r.err) == 1);
  }
  CHECK(run({"--help"}).status == 0);
}

TEST_CASE("simulate, fit, summarize and kernel-curve") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "run.ini";
  std::ofstream(cfg) << kConfig;
  const std::string sim = (tmp.path / "sim").string();
  const std::string fit = (tmp.path / "fit").string();
  const std::string sum = (tmp.path / "sum").string();
  const std::string curve = (tmp.path / "curve").string();

  const Result s = run({"simulate", "--config", cfg.string(), "--out", sim});
  REQUIRE(s.status == 0);
  CHECK(fs::exists(fs::path(sim) / "detections.csv"));
  CHECK(count_lines(slurp(fs::path(sim) / "states.csv")) == 1 + 36 * 6);
  CHECK(fs::exists(fs::path(sim) / "manifest.txt"));

  const Result f = run({"fit", "--config", cfg.string(), "--data", sim + "/detections.csv", "--out", fit});
  INFO(f.err);
  REQUIRE(f.status == 0);
  for (const char* name : {"param_draws.csv", "functional_draws.csv", "state_counts.csv", "convergence.csv",
                           "waic.csv", "state_probs.csv", "param_summary.csv", "manifest.txt", "timing.txt"})
    CHECK(fs::exists(fs::path(fit) / name));
  CHECK(count_lines(slurp(fs::path(fit) / "param_draws.csv")) == 1 + 2 * 500);
  const std::string manifest = slurp(fs::path(fit) / "manifest.txt");
  CHECK(manifest.find("seed = 3") != std::string::npos);
  CHECK(manifest.find("config_hash = ") != std::string::npos);

  const Result m = run({"summarize", "--archive", fit, "--out", sum});
  REQUIRE(m.status == 0);
  for (const char* name : {"state_probs.csv", "param_summary.csv", "functional_summary.csv"})
    CHECK(slurp(fs::path(sum) / name) == slurp(fs::path(fit) / name));

  const Result k = run({"kernel-curve", "--config", cfg.string(), "--archive", fit, "--distances", "0.5:2:0.5", "--out",
                        curve});
  REQUIRE(k.status == 0);
  CHECK(count_lines(slurp(fs::path(curve) / "kernel_curve.csv")) == 1 + 4);
}

TEST_CASE("fit outputs do not depend on HMMILM_THREADS") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "run.ini";
  std::ofstream(cfg) << kConfig;
  const std::string sim = (tmp.path / "sim").string();
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", sim}).status == 0);
  std::vector<std::string> dirs;
  for (const char* threads : {"1", "2"}) {
    ::setenv("HMMILM_THREADS", threads, 1);
    dirs.push_back((tmp.path / (std::string("fit") + threads)).string());
    REQUIRE(run({"fit", "--config", cfg.string(), "--data", sim + "/detections.csv", "--out", dirs.back()}).status == 0);
  }
  ::unsetenv("HMMILM_THREADS");
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    if (entry.path().extension() != ".csv") continue;
    CHECK(slurp(entry.path()) == slurp(fs::path(dirs[1]) / entry.path().filename()));
    ++compared;
  }
  CHECK(compared >= 8);
}

TEST_CASE("input errors map to status codes") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "run.ini";
  std::ofstream(cfg) << kConfig;
  const fs::path data = tmp.path / "bad.csv";
  std::ofstream(data) << "id,t\n1,3\n5,9\n";
  const Result bad = run({"fit", "--config", cfg.string(), "--data", data.string(), "--out", (tmp.path / "o").string()});
  CHECK(bad.status == 4);
  CHECK(bad.err.find("line 3") != std::string::npos);
  CHECK(count_lines(bad.err) == 1);

  const fs::path broken = tmp.path / "broken.ini";
  std::ofstream(broken) << "[model]\nkernel = spline\n";
  const Result c = run({"simulate", "--config", broken.string(), "--out", (tmp.path / "o").string()});
  CHECK(c.status == 3);
  CHECK(c.err.rfind("hmmilm: error: config: ", 0) == 0);
}
