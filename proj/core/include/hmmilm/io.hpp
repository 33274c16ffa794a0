#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hmmilm/archive.hpp"
#include "hmmilm/model.hpp"
#include "hmmilm/population.hpp"
#include "hmmilm/study.hpp"

namespace hmmilm {

// ---------------------------------------------------------------------------
// Plain CSV: comma separated, no quoting, first line is the header.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based file line of each row (for error messages).
  std::vector<int> lines;
};

/// Parses a table and checks the header. Throws DataError citing the line.
CsvTable read_csv(std::istream& in, const std::vector<std::string>& expected_header);
CsvTable read_csv_file(const std::filesystem::path& path, const std::vector<std::string>& expected_header);
void write_csv(std::ostream& out, const CsvTable& table);
void write_csv_file(const std::filesystem::path& path, const CsvTable& table);

/// 17 significant digits; NaN prints as NA.
std::string format_double(double x);
/// Accepts NA for NaN. Throws DataError naming the line.
double parse_double(std::string_view text, int line);
long long parse_int(std::string_view text, int line);
bool parse_bool(std::string_view text, int line);

// ---------------------------------------------------------------------------
// Inputs

/// Detections `id,t`. Ids must lie in [0, n) and times in 1..T; a repeated (id, t) is
/// rejected, and so is a second row for an id when `single_detection` holds.
ObservationMatrix detections_from_table(const CsvTable& table, int n, int horizon, bool single_detection);
CsvTable detections_to_table(const ObservationMatrix& y);

/// Population coordinates `id,x,y`, ids 0-based and contiguous in file order.
std::vector<Point> points_from_table(const CsvTable& table);
CsvTable points_to_table(std::span<const Point> points);

/// Covariates `t,W` for t = 0..T in order, W in {0, 1}.
std::vector<std::uint8_t> covariates_from_table(const CsvTable& table, int horizon);
CsvTable covariates_to_table(const std::vector<std::uint8_t>& w);

/// Validated input bundle.
struct IngestedData {
  ObservationMatrix detections;
  Population population;
  TimeCovariates covariates;
};

/// How a population from a coordinate file gets its neighbourhoods.
struct NeighborhoodRule {
  enum class Kind { Queen, Complete, Radius } kind = Kind::Queen;
  int order = 3;
  double radius = 0.0;
};

/// Reads detections and covariates and builds the population either from a grid or from
/// a coordinate file (exactly one of `grid` and `population_path`; `individuals` covers
/// coordinate-free complete graphs).
IngestedData ingest(const std::filesystem::path& detections_path, const std::optional<GridSpec>& grid,
                    const std::optional<std::filesystem::path>& population_path,
                    const std::optional<std::filesystem::path>& covariates_path, int horizon,
                    const NeighborhoodRule& rule, bool single_detection, std::optional<int> individuals = std::nullopt);

// ---------------------------------------------------------------------------
// Outputs (each schema also reads back, so write(read(x)) is byte-identical)

CsvTable states_to_table(const StateMatrix& s);
StateMatrix states_from_table(const CsvTable& table);

/// Parameter draws `chain,iteration,theta,m,alpha,beta0[,beta1[,beta2]]`.
struct ParamDraw {
  int chain = 0;
  int iteration = 0;
  ModelParams v;
};
CsvTable param_draws_to_table(const std::vector<ParamDraw>& draws, int beta_count);
std::vector<ParamDraw> param_draws_from_table(const CsvTable& table);
std::vector<std::string> param_draw_header(int beta_count);
std::vector<ParamDraw> archive_draws(const PosteriorArchive& archive);

struct FunctionalDraw {
  int chain = 0;
  int iteration = 0;
  std::string name;
  double value = 0.0;
};
CsvTable functional_draws_to_table(const std::vector<FunctionalDraw>& draws);
std::vector<FunctionalDraw> functional_draws_from_table(const CsvTable& table);
std::vector<FunctionalDraw> archive_functionals(const PosteriorArchive& archive);

/// Visit counts `id,t,n_sus,n_inf,n_rem` summed over chains.
struct StateCount {
  int id = 0;
  int t = 0;
  std::array<long long, 3> n{};
};
CsvTable state_counts_to_table(const std::vector<StateCount>& counts);
std::vector<StateCount> state_counts_from_table(const CsvTable& table);
std::vector<StateCount> archive_state_counts(const PosteriorArchive& archive);

/// `id,t,p_sus,p_inf,p_rem`.
CsvTable state_probs_to_table(const StateSummary& s);
StateSummary state_probs_from_table(const CsvTable& table);

/// `name,median,lo95,hi95` (parameter or functional summaries).
struct NamedInterval {
  std::string name;
  IntervalSummary interval;
};
CsvTable intervals_to_table(const std::vector<NamedInterval>& rows);
std::vector<NamedInterval> intervals_from_table(const CsvTable& table);

/// `model,lppd,p_waic,waic`.
struct WaicRow {
  std::string model;
  double lppd = 0.0;
  double p_waic = 0.0;
  double waic = 0.0;
};
CsvTable waic_to_table(const std::vector<WaicRow>& rows);
std::vector<WaicRow> waic_from_table(const CsvTable& table);

/// `param,gelman_rubin,ess,pass`.
CsvTable convergence_to_table(const ConvergenceReport& report);
ConvergenceReport convergence_from_table(const CsvTable& table);

/// `replicate,param,median,lo95,hi95,covered,converged`.
CsvTable recovery_to_table(const std::vector<RecoveryRow>& rows);
std::vector<RecoveryRow> recovery_from_table(const CsvTable& table);

/// `param,coverage_pct,avg_ci_width`.
CsvTable coverage_to_table(const std::vector<CoverageRow>& rows);
std::vector<CoverageRow> coverage_from_table(const CsvTable& table);

/// `param,median_of_medians,q025,q975`.
CsvTable medians_to_table(const std::vector<MedianRow>& rows);
std::vector<MedianRow> medians_from_table(const CsvTable& table);

/// `order,waic,converged,selected`.
CsvTable orders_to_table(const NeighborhoodSelection& selection);
NeighborhoodSelection orders_from_table(const CsvTable& table);

/// `distance,median,lo95,hi95`.
CsvTable curve_to_table(const std::vector<CurvePoint>& points);
std::vector<CurvePoint> curve_from_table(const CsvTable& table);

/// `model,param,median,lo95,hi95,converged`; R0 rows use the name R0.
CsvTable variant_summary_to_table(const std::vector<VariantRow>& rows);

}  // namespace hmmilm
