#pragma once

// Convergence studies: a-priori parameter scalings, seeded observations,
// backward reconstruction, normalized errors and fitted rates.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "subdiff/reference.hpp"

namespace subdiff {

/// Discretization parameters actually used for one noise level.
struct ScalingParams {
  double delta = 0;
  double h_target = 0;
  double h = 0;
  int K = 0;
  double tau_target = 0;  ///< 0 for semidiscrete
  double tau = 0;
  int N = 0;
  double gamma = 0;
  double ell_h = 1;  ///< max(1, |ln h|)
};

/// h = h_scale delta^h_power, gamma = gamma_scale delta^gamma_power and, when
/// fully discrete, tau = tau_scale delta^tau_power.
///
/// Integer rounding: K is the largest value whose mesh size is >= the target
/// (1D: K + 1 = floor(1/h_target), 2D: K = floor(1/h_target), capped by max_K);
/// N is the largest multiple of time_multiple with T/N >= tau_target. gamma
/// is used unrounded.
struct ScalingRule {
  double h_scale = 1, h_power = 0.5;
  double gamma_scale = 1, gamma_power = 0.5;
  double tau_scale = 1, tau_power = 1;
  bool fully_discrete = false;
  int max_K = 0;  ///< 0 means no cap
  int time_multiple = 1;

  ScalingParams apply(double delta, int dim, double T) const;
  std::string formula() const;
};

/// A group of output times sharing one scaling rule.
struct Track {
  std::string label;
  std::vector<double> times;
  ScalingRule rule;
  double theoretical_rate = 0;
};

struct StudyPreset {
  std::string name;
  int dim = 1;
  InitialShape shape = InitialShape::smooth;
  double T = 1.0;
  std::vector<double> alphas;
  std::vector<double> deltas;  ///< noise ladder
  std::vector<Track> tracks;
  int seeds = 5;
  std::uint64_t base_seed = 20200101;
  int reference_points = 2048;  ///< minimum fine-mesh cells of the 1D reference
  int series_modes = 199;       ///< largest mode of the 2D series reference
  double cg_tolerance = 1e-10;
  int cg_max_iterations = 0;
  std::filesystem::path cache_dir;  ///< empty disables the 1D reference cache
};

std::vector<std::string> preset_names();
/// Throws std::invalid_argument for unknown names.
StudyPreset study_preset(const std::string& name);

/// key = value lines; '#' starts a comment.
std::map<std::string, std::string> read_config(const std::filesystem::path& file);

/// Keys: T, alphas, deltas (comma lists; entries may be written 1/M), seeds,
/// base_seed, reference_points, series_modes, cg_tolerance,
/// cg_max_iterations, cache_dir, dim, shape, and per track
/// <label>.{times, rate, h_scale, h_power, gamma_scale, gamma_power,
/// tau_scale, tau_power, max_K, time_multiple}.
void apply_overrides(StudyPreset& preset, const std::map<std::string, std::string>& overrides);

/// Least-squares slope of log(error) against log(delta). Needs at least two
/// pairs; rejects non-positive entries.
double rate_fit(const std::vector<double>& deltas, const std::vector<double>& errors);

struct StudyRow {
  std::string track;
  double alpha = 0;
  ScalingParams params;
  std::vector<double> times;
  std::vector<double> errors;                    ///< median over seeds, per time
  std::vector<double> reference_norms;           ///< ||u(t)||, per time
  std::vector<std::vector<double>> seed_errors;  ///< [seed][time]
  std::vector<std::uint64_t> seeds;
  int cg_iterations = 0;  ///< largest count over seeds (2D only)
  double cg_residual = 0;
  bool ok = true;
  std::string failure;
};

struct RateEntry {
  std::string track;
  double alpha = 0;
  double t = 0;
  bool defined = false;
  double rate = 0;
  double theoretical = 0;
  int monotonicity_violations = 0;
  bool flagged = false;  ///< more than one increase along the ladder
};

struct StudyReport {
  StudyPreset preset;
  std::vector<StudyRow> rows;  ///< per track and alpha, delta descending
  std::vector<RateEntry> rates;

  const RateEntry& rate(const std::string& track, double alpha, double t) const;
};

struct StudyOptions {
  std::ostream* log = nullptr;
};

StudyReport run_study(const StudyPreset& preset, const StudyOptions& opts = {});

/// Seed of draw `s` for the given track, alpha and delta indices.
std::uint64_t derive_seed(std::uint64_t base, std::size_t track, std::size_t alpha, std::size_t delta, int s);

void write_report_csv(const StudyReport& report, std::ostream& out);
void write_table(const StudyReport& report, std::ostream& out);
void write_manifest(const StudyReport& report, std::ostream& out);
/// report.csv, table.txt and manifest.txt in `dir`.
void write_study_outputs(const StudyReport& report, const std::filesystem::path& dir);

std::string version_string();

}  // namespace subdiff
