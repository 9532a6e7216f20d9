#include "subdiff/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Core>

#include "subdiff/cq.hpp"
#include "subdiff/noise.hpp"
#include "subdiff/qbv.hpp"
#include "subdiff/spectral.hpp"

namespace subdiff {
namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& text) {
  const std::string s = trim(text);
  const auto slash = s.find('/');
  std::size_t used = 0;
  double v;
  try {
    if (slash != std::string::npos) {
      const double num = std::stod(s.substr(0, slash));
      const std::string rest = s.substr(slash + 1);
      const double den = std::stod(rest, &used);
      if (used != rest.size() || den == 0.0) throw std::invalid_argument(s);
      return num / den;
    }
    v = std::stod(s, &used);
  } catch (const std::logic_error&) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  if (used != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!trim(item).empty()) out.push_back(parse_number(item));
  }
  if (out.empty()) throw std::invalid_argument("empty list: '" + text + "'");
  return out;
}

int parse_int(const std::string& text) {
  const double v = parse_number(text);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw std::invalid_argument("not an integer: '" + text + "'");
  return static_cast<int>(v);
}

std::string join(const std::vector<double>& v, const char* f = "%.12g") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(f, v[i]);
  return s;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ScalingRule make_rule(double h_power, double gamma_scale, double gamma_power) {
  ScalingRule r;
  r.h_power = h_power;
  r.gamma_scale = gamma_scale;
  r.gamma_power = gamma_power;
  return r;
}

ScalingRule fully(ScalingRule r, double tau_power, int multiple) {
  r.fully_discrete = true;
  r.tau_power = tau_power;
  r.time_multiple = multiple;
  return r;
}

// Errors against a reference through the orthogonal split
// ||u - v||^2 = ||u - P u||^2 + ||P u - v||^2 for v in the coarse space.
class ErrorMeter {
 public:
  ErrorMeter(const Reference& ref, const FemSpace& coarse, const std::vector<double>& times) : coarse_(coarse) {
    for (double t : times) {
      const std::size_t i = ref.index_of(t);
      proj_.push_back(ref.project(i, coarse));
      gap_.push_back(ref.distance(i, coarse, proj_.back()));
      norm_.push_back(ref.norm(i));
    }
  }

  double relative_error(std::size_t k, const Eigen::Ref<const Eigen::VectorXd>& v) const {
    const Eigen::VectorXd d = proj_[k] - v;
    const double dm = d.dot(coarse_.mass() * d);
    return std::sqrt(gap_[k] * gap_[k] + std::max(dm, 0.0)) / norm_[k];
  }

  const std::vector<double>& norms() const { return norm_; }

 private:
  const FemSpace& coarse_;
  std::vector<Eigen::VectorXd> proj_;
  std::vector<double> gap_, norm_;
};

std::vector<double> with_terminal(std::vector<double> times, double T) {
  if (std::none_of(times.begin(), times.end(), [T](double t) { return std::abs(t - T) <= 1e-12; })) {
    times.push_back(T);
  }
  return times;
}

void run_row(const StudyPreset& preset, const Track& track, StudyRow& row) {
  const ScalingParams& p = row.params;
  const std::vector<double> ref_times = with_terminal(track.times, preset.T);
  const FemSpace coarse(make_mesh(preset.dim, p.K));

  std::unique_ptr<Reference> ref;
  if (preset.dim == 1) {
    ref = std::make_unique<NestedReference1D>(preset.shape, row.alpha, preset.T,
                                              nested_fine_K(p.K, preset.reference_points), ref_times,
                                              preset.cache_dir);
  } else {
    if (preset.shape != InitialShape::smooth) {
      throw std::invalid_argument("2D studies support only the smooth initial data");
    }
    ref = std::make_unique<SeriesReference2D>(row.alpha, preset.T, ref_times, preset.series_modes);
  }
  const ErrorMeter meter(*ref, coarse, track.times);
  row.reference_norms = meter.norms();
  const Eigen::VectorXd uT = ref->project(ref->index_of(preset.T), coarse);

  const int S = static_cast<int>(row.seeds.size());
  Eigen::MatrixXd G(coarse.size(), S);
  for (int s = 0; s < S; ++s) G.col(s) = make_observation(uT, NoiseSpec{p.delta, row.seeds[s]});

  const std::size_t nt = track.times.size();
  row.seed_errors.assign(S, std::vector<double>(nt, 0.0));

  if (preset.dim == 1) {
    const SpectralSolver1D solver(coarse, row.alpha, preset.T);
    for (int s = 0; s < S; ++s) {
      if (!track.rule.fully_discrete) {
        for (std::size_t k = 0; k < nt; ++k) {
          row.seed_errors[s][k] = meter.relative_error(k, solver.semi_backward(G.col(s), p.gamma, track.times[k]));
        }
      } else {
        const TimeGrid grid(preset.T, p.N);
        std::vector<int> steps;
        for (double t : track.times) steps.push_back(grid.step_at(t));
        const Eigen::MatrixXd U = solver.fully_backward(G.col(s), p.gamma, grid, steps);
        for (std::size_t k = 0; k < nt; ++k) row.seed_errors[s][k] = meter.relative_error(k, U.col(k));
      }
    }
  } else {
    const TimeGrid grid(preset.T, p.N);
    const FractionalStepper stepper(coarse, row.alpha, grid);
    CGConfig cfg;
    cfg.rel_tolerance = preset.cg_tolerance;
    cfg.max_iterations = preset.cg_max_iterations;
    const CGSolution sol = solve_initial_block(stepper, p.gamma, G, cfg);
    row.cg_iterations = *std::max_element(sol.iterations.begin(), sol.iterations.end());
    row.cg_residual = *std::max_element(sol.residuals.begin(), sol.residuals.end());

    std::vector<int> later;
    for (double t : track.times) {
      const int n = grid.step_at(t);
      if (n > 0) later.push_back(n);
    }
    const std::vector<Eigen::MatrixXd> states = stepper.propagate(sol.values, later);
    for (std::size_t k = 0, j = 0; k < nt; ++k) {
      const bool initial = grid.step_at(track.times[k]) == 0;
      const Eigen::MatrixXd& U = initial ? sol.values : states[j++];
      for (int s = 0; s < S; ++s) row.seed_errors[s][k] = meter.relative_error(k, U.col(s));
    }
  }

  row.errors.resize(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    std::vector<double> e;
    for (int s = 0; s < S; ++s) e.push_back(row.seed_errors[s][k]);
    row.errors[k] = median(e);
  }
}

void csv_line(std::ostream& out, const StudyReport& r, const StudyRow& row, std::size_t k, const std::string& seed,
              double value, const std::string& status) {
  const ScalingParams& p = row.params;
  out << "error," << r.preset.name << ',' << row.track << ',' << fmt("%.6g", row.alpha) << ','
      << fmt("%.12g", p.delta) << ',' << fmt("%.0f", 1.0 / p.delta) << ',' << fmt("%.12g", p.h) << ',' << p.K << ','
      << fmt("%.12g", p.tau) << ',' << p.N << ',' << fmt("%.12g", p.gamma) << ',' << fmt("%.12g", p.ell_h) << ','
      << fmt("%.6g", row.times[k]) << ',' << seed << ',' << (std::isfinite(value) ? fmt("%.10e", value) : std::string()) << ','
      << (k < row.reference_norms.size() ? fmt("%.10e", row.reference_norms[k]) : std::string()) << ",,"
      << row.cg_iterations << ',' << fmt("%.3e", row.cg_residual) << ',' << status << '\n';
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

}  // namespace

std::string version_string() {
#ifdef SUBDIFF_VERSION
  return SUBDIFF_VERSION;
#else
  return "unknown";
#endif
}

ScalingParams ScalingRule::apply(double delta, int dim, double T) const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("ScalingRule: delta must be positive");
  if (dim != 1 && dim != 2) throw std::invalid_argument("ScalingRule: dim must be 1 or 2");
  if (!(h_scale > 0.0) || !(gamma_scale > 0.0) || !(tau_scale > 0.0) || time_multiple < 1) {
    throw std::invalid_argument("ScalingRule: scales must be positive");
  }
  ScalingParams p;
  p.delta = delta;
  p.h_target = h_scale * std::pow(delta, h_power);
  // The relative slack keeps exact reciprocals such as 1/sqrt(1/1600) from
  // rounding down one step.
  const double cells = std::floor((1.0 / p.h_target) * (1.0 + 1e-12));
  if (dim == 1) {
    p.K = std::max(1, static_cast<int>(std::min(cells, 1e8)) - 1);
    if (max_K > 0) p.K = std::min(p.K, max_K);
    p.h = 1.0 / (p.K + 1);
  } else {
    p.K = std::max(2, static_cast<int>(std::min(cells, 1e8)));
    if (max_K > 0) p.K = std::min(p.K, max_K);
    p.h = 1.0 / p.K;
  }
  p.gamma = gamma_scale * std::pow(delta, gamma_power);
  p.ell_h = std::max(1.0, std::abs(std::log(p.h)));
  if (fully_discrete) {
    p.tau_target = tau_scale * std::pow(delta, tau_power);
    const double blocks = std::floor((T / p.tau_target / time_multiple) * (1.0 + 1e-12));
    if (blocks > 1e8) throw std::invalid_argument("ScalingRule: time step target too small");
    p.N = time_multiple * std::max(1, static_cast<int>(blocks));
    p.tau = T / p.N;
  }
  return p;
}

std::string ScalingRule::formula() const {
  std::string s = "h=" + fmt("%g", h_scale) + "*delta^" + fmt("%g", h_power) + ", gamma=" + fmt("%g", gamma_scale) +
                  "*delta^" + fmt("%g", gamma_power);
  if (fully_discrete) s += ", tau=" + fmt("%g", tau_scale) + "*delta^" + fmt("%g", tau_power);
  if (max_K > 0) s += ", K<=" + std::to_string(max_K);
  return s;
}

std::vector<std::string> preset_names() {
  return {"ex_a_semi",     "ex_a_fully",    "ex_b_semi_t0", "ex_b_semi_t",
          "ex_b_fully_t0", "ex_b_fully_t",  "ex_c_t0",      "ex_c_mid"};
}

StudyPreset study_preset(const std::string& name) {
  StudyPreset p;
  p.name = name;
  p.alphas = {0.25, 0.5, 0.75};
  p.deltas = {1.0 / 40, 1.0 / 80, 1.0 / 160, 1.0 / 320};
  const std::vector<double> later = {0.1, 0.5, 0.9};

  if (name == "ex_a_semi") {
    p.tracks = {{"t0", {0.0}, make_rule(0.5, 1, 0.5), 0.5}, {"t", later, make_rule(0.5, 1, 1), 1.0}};
  } else if (name == "ex_a_fully") {
    p.tracks = {{"t0", {0.0}, fully(make_rule(0.5, 1, 0.5), 1, 1), 0.5},
                {"t", later, fully(make_rule(0.5, 1, 1), 1, 10), 1.0}};
  } else if (name == "ex_b_semi_t0") {
    p.shape = InitialShape::step;
    p.tracks = {{"t0", {0.0}, make_rule(0.8, 1, 0.8), 0.2}};
  } else if (name == "ex_b_semi_t") {
    p.shape = InitialShape::step;
    p.alphas = {0.5};
    p.tracks = {{"t", later, make_rule(0.875, 0.2, 1), 1.0}};
  } else if (name == "ex_b_fully_t0") {
    p.shape = InitialShape::step;
    p.tracks = {{"t0", {0.0}, fully(make_rule(0.8, 1, 0.8), 1.6, 1), 0.2}};
  } else if (name == "ex_b_fully_t") {
    p.shape = InitialShape::step;
    p.alphas = {0.5};
    p.tracks = {{"t", later, fully(make_rule(0.875, 0.2, 1), 1.75, 10), 1.0}};
  } else if (name == "ex_c_t0" || name == "ex_c_mid") {
    p.dim = 2;
    p.deltas = {1.0 / 800, 1.0 / 1600, 1.0 / 3200};
    const bool t0 = name == "ex_c_t0";
    ScalingRule r = fully(make_rule(0.5, 1, t0 ? 0.5 : 1.0), 1, t0 ? 1 : 2);
    r.max_K = 64;
    p.tracks = {{t0 ? "t0" : "mid", {t0 ? 0.0 : 0.5 * p.T}, r, t0 ? 0.5 : 1.0}};
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return p;
}

std::map<std::string, std::string> read_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config " + file.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || trim(line.substr(0, eq)).empty()) {
      throw std::invalid_argument(file.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void apply_overrides(StudyPreset& p, const std::map<std::string, std::string>& overrides) {
  for (const auto& [key, value] : overrides) {
    if (key == "T") {
      p.T = parse_number(value);
    } else if (key == "alphas" || key == "alpha") {
      p.alphas = parse_list(value);
    } else if (key == "deltas") {
      p.deltas = parse_list(value);
    } else if (key == "seeds") {
      p.seeds = parse_int(value);
    } else if (key == "base_seed") {
      p.base_seed = std::stoull(value);
    } else if (key == "reference_points") {
      p.reference_points = parse_int(value);
    } else if (key == "series_modes") {
      p.series_modes = parse_int(value);
    } else if (key == "cg_tolerance") {
      p.cg_tolerance = parse_number(value);
    } else if (key == "cg_max_iterations") {
      p.cg_max_iterations = parse_int(value);
    } else if (key == "cache_dir") {
      p.cache_dir = value;
    } else if (key == "dim") {
      p.dim = parse_int(value);
    } else if (key == "shape") {
      p.shape = parse_shape(value);
    } else {
      const auto dot = key.find('.');
      auto it = std::find_if(p.tracks.begin(), p.tracks.end(),
                             [&](const Track& t) { return dot != std::string::npos && t.label == key.substr(0, dot); });
      if (it == p.tracks.end()) throw std::invalid_argument("unknown study setting '" + key + "'");
      const std::string field = key.substr(dot + 1);
      ScalingRule& r = it->rule;
      if (field == "times") it->times = parse_list(value);
      else if (field == "rate") it->theoretical_rate = parse_number(value);
      else if (field == "h_scale") r.h_scale = parse_number(value);
      else if (field == "h_power") r.h_power = parse_number(value);
      else if (field == "gamma_scale") r.gamma_scale = parse_number(value);
      else if (field == "gamma_power") r.gamma_power = parse_number(value);
      else if (field == "tau_scale") r.tau_scale = parse_number(value);
      else if (field == "tau_power") r.tau_power = parse_number(value);
      else if (field == "max_K") r.max_K = parse_int(value);
      else if (field == "time_multiple") r.time_multiple = parse_int(value);
      else throw std::invalid_argument("unknown study setting '" + key + "'");
    }
  }
  if (p.seeds < 1) throw std::invalid_argument("seeds must be at least 1");
  if (p.dim != 1 && p.dim != 2) throw std::invalid_argument("dim must be 1 or 2");
  if (!(p.T > 0.0)) throw std::invalid_argument("T must be positive");
}

double rate_fit(const std::vector<double>& deltas, const std::vector<double>& errors) {
  if (deltas.size() != errors.size()) throw std::invalid_argument("rate_fit: size mismatch");
  if (deltas.size() < 2) throw std::invalid_argument("rate_fit: need at least two points");
  const std::size_t n = deltas.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(deltas[i] > 0.0) || !(errors[i] > 0.0) || !std::isfinite(deltas[i]) || !std::isfinite(errors[i])) {
      throw std::invalid_argument("rate_fit: entries must be positive and finite");
    }
    mx += std::log(deltas[i]);
    my += std::log(errors[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(deltas[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(errors[i]) - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("rate_fit: deltas must not all be equal");
  return sxy / sxx;
}

std::uint64_t derive_seed(std::uint64_t base, std::size_t track, std::size_t alpha, std::size_t delta, int s) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ track);
  h = splitmix64(h ^ alpha);
  h = splitmix64(h ^ delta);
  return splitmix64(h ^ static_cast<std::uint64_t>(s));
}

const RateEntry& StudyReport::rate(const std::string& track, double alpha, double t) const {
  for (const auto& r : rates) {
    if (r.track == track && std::abs(r.alpha - alpha) < 1e-12 && std::abs(r.t - t) < 1e-12) return r;
  }
  throw std::out_of_range("no rate for track " + track);
}

StudyReport run_study(const StudyPreset& preset, const StudyOptions& opts) {
  if (preset.deltas.empty() || preset.alphas.empty() || preset.tracks.empty()) {
    throw std::invalid_argument("run_study: empty ladder, alpha list or track list");
  }
  StudyReport report;
  report.preset = preset;
  std::vector<double> deltas = preset.deltas;
  std::sort(deltas.begin(), deltas.end(), std::greater<>());
  report.preset.deltas = deltas;

  for (std::size_t ti = 0; ti < preset.tracks.size(); ++ti) {
    const Track& track = preset.tracks[ti];
    for (std::size_t ai = 0; ai < preset.alphas.size(); ++ai) {
      const std::size_t first = report.rows.size();
      for (std::size_t di = 0; di < deltas.size(); ++di) {
        StudyRow row;
        row.track = track.label;
        row.alpha = preset.alphas[ai];
        row.times = track.times;
        for (int s = 0; s < preset.seeds; ++s) row.seeds.push_back(derive_seed(preset.base_seed, ti, ai, di, s));
        const auto start = std::chrono::steady_clock::now();
        try {
          row.params = track.rule.apply(deltas[di], preset.dim, preset.T);
          run_row(preset, track, row);
        } catch (const std::exception& e) {
          row.ok = false;
          row.failure = e.what();
          row.errors.assign(track.times.size(), std::numeric_limits<double>::quiet_NaN());
        }
        if (opts.log) {
          const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          *opts.log << preset.name << " " << track.label << " alpha=" << row.alpha << " delta=1/"
                    << fmt("%.0f", 1.0 / deltas[di]) << " K=" << row.params.K << " N=" << row.params.N
                    << (row.ok ? "" : " FAILED: " + row.failure);
          if (row.cg_iterations > 0) *opts.log << " cg=" << row.cg_iterations;
          *opts.log << " (" << fmt("%.1f", secs) << " s)\n";
        }
        report.rows.push_back(std::move(row));
      }

      for (std::size_t k = 0; k < track.times.size(); ++k) {
        RateEntry r;
        r.track = track.label;
        r.alpha = preset.alphas[ai];
        r.t = track.times[k];
        r.theoretical = track.theoretical_rate;
        std::vector<double> d, e;
        for (std::size_t i = first; i < report.rows.size(); ++i) {
          const StudyRow& row = report.rows[i];
          if (!row.ok || !(row.errors[k] > 0.0)) continue;
          if (!e.empty() && row.errors[k] > e.back()) ++r.monotonicity_violations;
          d.push_back(row.params.delta);
          e.push_back(row.errors[k]);
        }
        r.flagged = r.monotonicity_violations > 1;
        if (d.size() >= 2) {
          r.defined = true;
          r.rate = rate_fit(d, e);
        }
        report.rates.push_back(r);
      }
    }
  }
  return report;
}

void write_report_csv(const StudyReport& r, std::ostream& out) {
  out << "kind,preset,track,alpha,delta,M,h,K,tau,N,gamma,ell_h,t,seed,value,ref_norm,theory,cg_iterations,cg_residual,"
         "status\n";
  for (const StudyRow& row : r.rows) {
    const std::string status = row.ok ? "ok" : "failed:" + sanitize(row.failure);
    for (std::size_t k = 0; k < row.times.size(); ++k) {
      if (row.ok) {
        for (std::size_t s = 0; s < row.seeds.size(); ++s) {
          csv_line(out, r, row, k, std::to_string(row.seeds[s]), row.seed_errors[s][k], status);
        }
      }
      csv_line(out, r, row, k, "median", row.errors[k], status);
    }
  }
  for (const RateEntry& e : r.rates) {
    out << "rate," << r.preset.name << ',' << e.track << ',' << fmt("%.6g", e.alpha) << ",,,,,,,,," << fmt("%.6g", e.t)
        << ",," << (e.defined ? fmt("%.6f", e.rate) : std::string()) << ",," << fmt("%.6g", e.theoretical) << ",,,"
        << (e.defined ? "defined" : "undefined") << (e.flagged ? ";non-monotone" : "") << '\n';
  }
}

void write_table(const StudyReport& r, std::ostream& out) {
  const StudyPreset& p = r.preset;
  out << "preset " << p.name << " (" << p.dim << "D, " << to_string(p.shape) << " initial data, T=" << p.T
      << ", median of " << p.seeds << (p.seeds == 1 ? " draw" : " draws") << ")\n";
  for (const Track& track : p.tracks) {
    for (const bool absolute : {false, true}) {
      out << "\ntrack " << track.label << ": " << track.rule.formula()
          << (absolute ? "\nabsolute error ||u(t) - u_h(t)||\n" : "\nrelative error ||u(t) - u_h(t)|| / ||u(t)||\n");
      out << "alpha  t      M=";
      for (std::size_t i = 0; i < p.deltas.size(); ++i) {
        out << fmt(i == 0 ? "%-9.0f" : "%-11.0f", 1.0 / p.deltas[i]);
      }
      out << "Rate(theory)\n";
      for (double alpha : p.alphas) {
        for (std::size_t k = 0; k < track.times.size(); ++k) {
          out << fmt("%-7g", alpha) << fmt("%-7g", track.times[k]);
          for (const StudyRow& row : r.rows) {
            if (row.track != track.label || row.alpha != alpha) continue;
            if (!row.ok) {
              out << "failed     ";
            } else {
              out << fmt("%-11.2e", absolute ? row.errors[k] * row.reference_norms[k] : row.errors[k]);
            }
          }
          const RateEntry& e = r.rate(track.label, alpha, track.times[k]);
          out << (e.defined ? fmt("%.2f", e.rate) : std::string("n/a")) << "(" << fmt("%.2f", e.theoretical) << ")"
              << (e.flagged ? " *" : "") << "\n";
        }
      }
    }
  }
  bool any_failed = false;
  for (const StudyRow& row : r.rows) any_failed = any_failed || !row.ok;
  if (any_failed) {
    out << "\nfailed rows:\n";
    for (const StudyRow& row : r.rows) {
      if (!row.ok) out << "  " << row.track << " alpha=" << row.alpha << " delta=" << row.params.delta << ": "
                       << row.failure << "\n";
    }
  }
}

void write_manifest(const StudyReport& r, std::ostream& out) {
  const StudyPreset& p = r.preset;
  out << "preset = " << p.name << "\n";
  out << "version = " << version_string() << "\n";
  out << "eigen = " << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "." << EIGEN_MINOR_VERSION << "\n";
#if defined(__clang__)
  out << "compiler = clang " << __clang_major__ << "." << __clang_minor__ << "\n";
#elif defined(__GNUC__)
  out << "compiler = gcc " << __GNUC__ << "." << __GNUC_MINOR__ << "\n";
#endif
  out << "dim = " << p.dim << "\n";
  out << "shape = " << to_string(p.shape) << "\n";
  out << "T = " << fmt("%.12g", p.T) << "\n";
  out << "alphas = " << join(p.alphas) << "\n";
  out << "deltas = " << join(p.deltas) << "\n";
  out << "seeds = " << p.seeds << "\n";
  out << "base_seed = " << p.base_seed << "\n";
  out << "noise = per-node gaussian, scale delta*max|P_h u(T)|\n";
  out << "reference_points = " << p.reference_points << "\n";
  out << "series_modes = " << p.series_modes << "\n";
  out << "cg_tolerance = " << fmt("%.3g", p.cg_tolerance) << "\n";
  out << "cg_max_iterations = " << p.cg_max_iterations << "\n";
  out << "rate_fit = least squares of log(error) on log(delta)\n";
  for (const Track& t : p.tracks) {
    out << t.label << ".times = " << join(t.times) << "\n";
    out << t.label << ".rule = " << t.rule.formula() << "\n";
    out << t.label << ".time_multiple = " << t.rule.time_multiple << "\n";
    out << t.label << ".rate = " << fmt("%.6g", t.theoretical_rate) << "\n";
  }
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const StudyRow& row = r.rows[i];
    const ScalingParams& q = row.params;
    std::string seeds;
    for (std::size_t s = 0; s < row.seeds.size(); ++s) seeds += (s ? "," : "") + std::to_string(row.seeds[s]);
    out << "row." << i << " = track=" << row.track << " alpha=" << fmt("%.6g", row.alpha)
        << " delta=" << fmt("%.12g", q.delta) << " h_target=" << fmt("%.12g", q.h_target) << " h=" << fmt("%.12g", q.h)
        << " K=" << q.K << " tau_target=" << fmt("%.12g", q.tau_target) << " tau=" << fmt("%.12g", q.tau)
        << " N=" << q.N << " gamma=" << fmt("%.12g", q.gamma) << " ell_h=" << fmt("%.12g", q.ell_h)
        << " cg_iterations=" << row.cg_iterations << " status=" << (row.ok ? "ok" : "failed") << " seeds=" << seeds
        << "\n";
  }
  for (const RateEntry& e : r.rates) {
    out << "rate." << e.track << ".alpha" << fmt("%g", e.alpha) << ".t" << fmt("%g", e.t) << " = "
        << (e.defined ? fmt("%.6f", e.rate) : std::string("undefined")) << "\n";
  }
}

void write_study_outputs(const StudyReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, void (*fn)(const StudyReport&, std::ostream&)) {
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    fn(report, out);
  };
  write("report.csv", write_report_csv);
  write("table.txt", write_table);
  write("manifest.txt", write_manifest);
}

}  // namespace subdiff
