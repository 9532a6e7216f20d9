// Command-line driver: Mittag-Leffler evaluation, forward and backward
// solves, and the convergence-study presets.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "subdiff/cq.hpp"
#include "subdiff/fem.hpp"
#include "subdiff/mittag_leffler.hpp"
#include "subdiff/noise.hpp"
#include "subdiff/qbv.hpp"
#include "subdiff/reference.hpp"
#include "subdiff/spectral.hpp"
#include "subdiff/study.hpp"

using namespace subdiff;

namespace {

std::string num(double v, int digits = 15) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

void write_fields(std::ostream& out, const Mesh& mesh, const std::vector<std::string>& names,
                  const Eigen::MatrixXd& values) {
  const Eigen::MatrixXd xy = mesh.dof_coordinates();
  out << (mesh.dim == 1 ? "x" : "x,y");
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (int d = 0; d < mesh.dim; ++d) out << (d ? "," : "") << num(xy(i, d), 12);
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << ',' << num(values(i, c), 17);
    out << '\n';
  }
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

// Last numeric column of each non-empty line; a non-numeric first line is a header.
Eigen::VectorXd read_observation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open observation " + path);
  std::vector<double> v;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string field = line.substr(line.find_last_of(',') == std::string::npos ? 0 : line.find_last_of(',') + 1);
    try {
      std::size_t used = 0;
      v.push_back(std::stod(field, &used));
    } catch (const std::exception&) {
      if (!first) throw std::runtime_error("bad observation value '" + field + "' in " + path);
    }
    first = false;
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct MlArgs {
  double alpha = 0.5, beta = 1.0;
  std::vector<double> x;
  bool bounds = false, info = false;
};

int run_ml(const MlArgs& a) {
  for (double x : a.x) {
    const MLValue v = ml_evaluate(MLArg(a.alpha, a.beta, x));
    std::cout << num(v.value);
    if (a.info) std::cout << " regime=" << to_string(v.regime) << " error_estimate=" << num(v.error_estimate, 3);
    if (a.bounds) {
      const MLBounds b = ml_bounds<double>(a.alpha, x);
      std::cout << " lower=" << num(b.lower) << " upper=" << num(b.upper);
    }
    std::cout << '\n';
  }
  return 0;
}

struct ForwardArgs {
  double alpha = 0.5, T = 1.0;
  int K = 31, N = 64, dim = 1;
  std::string u0 = "smooth", out;
  bool trajectory = false;
};

int run_forward(const ForwardArgs& a) {
  const InitialShape shape = parse_shape(a.u0);
  const FemSpace space(make_mesh(a.dim, a.K));
  const FractionalStepper stepper(space, a.alpha, TimeGrid(a.T, a.N));
  const Eigen::VectorXd u0 = space.l2_project(initial_function(shape, a.dim), projection_options(shape));
  const Eigen::MatrixXd U = stepper.forward_solve(u0);

  std::vector<std::string> names;
  Eigen::MatrixXd cols;
  if (a.trajectory) {
    for (int n = 0; n <= a.N; ++n) names.push_back("U" + std::to_string(n));
    cols = U;
  } else {
    names = {"U0", "U" + std::to_string(a.N)};
    cols.resize(U.rows(), 2);
    cols << U.col(0), U.col(a.N);
  }
  if (a.out.empty()) {
    write_fields(std::cout, space.mesh(), names, cols);
  } else {
    auto f = open_output(a.out);
    write_fields(f, space.mesh(), names, cols);
  }
  return 0;
}

struct BackwardArgs {
  std::string method = "cg", u0 = "smooth", observation, out = "backward.csv";
  int dim = 1, K = 31, N = 64, max_iter = 0;
  double alpha = 0.5, T = 1.0, gamma = 1e-3, delta = 0.0, tol = 1e-10;
  std::uint64_t seed = 1;
  std::vector<double> snapshots;
};

int run_backward(const BackwardArgs& a) {
  if (a.method == "spectral" && a.dim != 1) throw std::invalid_argument("--method spectral needs --dim 1");
  if (a.method == "cg" && a.N < 1) throw std::invalid_argument("--method cg needs --N >= 1");
  const InitialShape shape = parse_shape(a.u0);
  const FemSpace space(make_mesh(a.dim, a.K));
  const bool semi = a.N == 0;

  std::unique_ptr<FractionalStepper> stepper;
  std::unique_ptr<SpectralSolver1D> spectral;
  std::unique_ptr<TimeGrid> grid;
  if (!semi) grid = std::make_unique<TimeGrid>(a.T, a.N);
  if (a.method == "cg") stepper = std::make_unique<FractionalStepper>(space, a.alpha, *grid);
  if (a.method == "spectral") spectral = std::make_unique<SpectralSolver1D>(space, a.alpha, a.T);

  Eigen::VectorXd g;
  if (!a.observation.empty()) {
    g = read_observation(a.observation);
    if (g.size() != space.size()) {
      throw std::invalid_argument("observation has " + std::to_string(g.size()) + " values, mesh has " +
                                  std::to_string(space.size()) + " interior nodes");
    }
  } else {
    const Eigen::VectorXd u0 = space.l2_project(initial_function(shape, a.dim), projection_options(shape));
    Eigen::VectorXd uT;
    if (stepper) uT = stepper->terminal_map(u0);
    else if (semi) uT = spectral->semi_forward(u0, a.T);
    else uT = spectral->fully_forward(u0, *grid, {a.N}).col(0);
    g = make_observation(uT, NoiseSpec{a.delta, a.seed});
  }

  std::vector<double> times = {0.0};
  for (double t : a.snapshots) {
    if (t != 0.0) times.push_back(t);
  }
  std::vector<std::string> names;
  Eigen::MatrixXd cols(space.size(), static_cast<Eigen::Index>(times.size()));
  std::ostringstream manifest;
  manifest << "method = " << a.method << "\ndim = " << a.dim << "\nK = " << a.K << "\nN = " << a.N
           << "\nT = " << num(a.T) << "\nalpha = " << num(a.alpha) << "\ngamma = " << num(a.gamma)
           << "\nobservation = " << (a.observation.empty() ? "synthetic" : a.observation);
  if (a.observation.empty()) {
    manifest << "\nu0 = " << a.u0 << "\ndelta = " << num(a.delta) << "\nseed = " << a.seed;
  }

  if (spectral) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (semi) {
        cols.col(k) = spectral->semi_backward(g, a.gamma, times[k]);
      } else {
        cols.col(k) = spectral->fully_backward(g, a.gamma, *grid, {grid->step_at(times[k])}).col(0);
      }
    }
  } else {
    CGConfig cfg;
    cfg.rel_tolerance = a.tol;
    cfg.max_iterations = a.max_iter;
    const QBVProblem problem(*stepper, a.gamma, g);
    CGSolution info;
    const Eigen::VectorXd u0 = solve_initial(problem, cfg, &info);
    std::vector<int> steps;
    for (double t : times) steps.push_back(grid->step_at(t));
    const Trajectory tr = reconstruct_snapshots(problem, u0, steps, cfg);
    cols = tr.states.leftCols(static_cast<Eigen::Index>(times.size()));
    manifest << "\ntolerance = " << num(a.tol, 3) << "\nmax_iterations = " << cfg.iteration_limit(space.size())
             << "\niterations = " << info.iterations.at(0) << "\nresidual = " << num(info.residuals.at(0), 6)
             << "\nterminal_residual = " << num(tr.terminal_residual, 6)
             << "\nconsistent = " << (tr.consistent ? "true" : "false");
  }
  if (a.observation.empty()) {
    std::unique_ptr<Reference> ref;
    if (a.dim == 1) {
      ref = std::make_unique<NestedReference1D>(shape, a.alpha, a.T, nested_fine_K(a.K, 2048), times);
    } else if (shape == InitialShape::smooth) {
      ref = std::make_unique<SeriesReference2D>(a.alpha, a.T, times);
    }
    for (std::size_t k = 0; ref && k < times.size(); ++k) {
      manifest << "\nrelative_error_t=" << num(times[k], 6) << " = "
               << num(ref->distance(k, space, cols.col(k)) / ref->norm(k), 6);
    }
  }
  for (double t : times) names.push_back("t=" + num(t, 6));
  {
    auto f = open_output(a.out);
    write_fields(f, space.mesh(), names, cols);
  }
  manifest << "\noutput = " << a.out << "\n";
  std::cout << manifest.str();
  return 0;
}

struct StudyArgs {
  std::string preset, out, config, cache;
  std::vector<double> alphas;
  int seeds = 0;
  bool single_seed = false, quiet = false;
};

int run_study_cmd(const StudyArgs& a) {
  StudyPreset preset = study_preset(a.preset);
  if (!a.config.empty()) apply_overrides(preset, read_config(a.config));
  if (!a.alphas.empty()) preset.alphas = a.alphas;
  if (a.seeds > 0) preset.seeds = a.seeds;
  if (a.single_seed) preset.seeds = 1;
  const std::filesystem::path out = a.out.empty() ? "study-" + a.preset : a.out;
  preset.cache_dir = a.cache.empty() ? out / "cache" : std::filesystem::path(a.cache);

  StudyOptions opts;
  if (!a.quiet) opts.log = &std::cerr;
  const StudyReport report = run_study(preset, opts);
  write_study_outputs(report, out);
  write_table(report, std::cout);
  for (const auto& row : report.rows) {
    if (!row.ok) return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backward subdiffusion: forward/backward solvers and convergence studies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  MlArgs ml;
  auto* ml_cmd = app.add_subcommand("ml", "Evaluate E_{alpha,beta}(-x)");
  ml_cmd->add_option("--alpha", ml.alpha, "Order in (0, 1]")->required();
  ml_cmd->add_option("--beta", ml.beta, "Second parameter (> 0)")->capture_default_str();
  ml_cmd->add_option("--x", ml.x, "Argument(s) x >= 0, comma separated")->required()->delimiter(',');
  ml_cmd->add_flag("--bounds", ml.bounds, "Also print the two-sided rational bounds");
  ml_cmd->add_flag("--info", ml.info, "Also print the evaluation regime and error estimate");

  ForwardArgs fw;
  auto* fw_cmd = app.add_subcommand("forward", "Run the fully discrete forward scheme");
  fw_cmd->add_option("--alpha", fw.alpha)->required();
  fw_cmd->add_option("--K", fw.K, "Mesh parameter")->capture_default_str();
  fw_cmd->add_option("--N", fw.N, "Time steps")->capture_default_str();
  fw_cmd->add_option("--T", fw.T)->capture_default_str();
  fw_cmd->add_option("--dim", fw.dim)->check(CLI::IsMember({1, 2}))->capture_default_str();
  fw_cmd->add_option("--u0", fw.u0, "smooth | step | sine")->capture_default_str();
  fw_cmd->add_option("--out", fw.out, "CSV file (default stdout)");
  fw_cmd->add_flag("--trajectory", fw.trajectory, "Write every time level");

  BackwardArgs bw;
  auto* bw_cmd = app.add_subcommand("backward", "Quasi-boundary-value reconstruction of the initial state");
  bw_cmd->add_option("--method", bw.method)->check(CLI::IsMember({"spectral", "cg"}))->capture_default_str();
  bw_cmd->add_option("--dim", bw.dim)->check(CLI::IsMember({1, 2}))->capture_default_str();
  bw_cmd->add_option("--alpha", bw.alpha)->required();
  bw_cmd->add_option("--K", bw.K)->capture_default_str();
  bw_cmd->add_option("--N", bw.N, "Time steps (0: semidiscrete, spectral only)")->capture_default_str();
  bw_cmd->add_option("--T", bw.T)->capture_default_str();
  bw_cmd->add_option("--gamma", bw.gamma)->capture_default_str();
  bw_cmd->add_option("--delta", bw.delta, "Relative noise level of the synthetic observation")->capture_default_str();
  bw_cmd->add_option("--seed", bw.seed)->capture_default_str();
  bw_cmd->add_option("--tol", bw.tol, "CG relative tolerance")->capture_default_str();
  bw_cmd->add_option("--max-iter", bw.max_iter, "CG iteration limit (0: 5 x unknowns)")->capture_default_str();
  bw_cmd->add_option("--u0", bw.u0, "Initial data of the synthetic observation")->capture_default_str();
  bw_cmd->add_option("--observation", bw.observation, "CSV with nodal values of P_h g (last column)");
  bw_cmd->add_option("--snapshots", bw.snapshots, "Extra output times")->delimiter(',');
  bw_cmd->add_option("--out", bw.out)->capture_default_str();

  StudyArgs st;
  auto* st_cmd = app.add_subcommand("study", "Run a convergence-study preset");
  st_cmd->add_option("--preset", st.preset)->required()->check(CLI::IsMember(preset_names()));
  st_cmd->add_option("--alpha", st.alphas, "Override the alpha list")->delimiter(',');
  st_cmd->add_option("--seeds", st.seeds, "Noise draws per row");
  st_cmd->add_option("--out", st.out, "Output directory (default study-<preset>)");
  st_cmd->add_option("--config", st.config, "key = value overrides");
  st_cmd->add_option("--cache", st.cache, "Reference cache directory (default <out>/cache)");
  st_cmd->add_flag("--single-seed", st.single_seed, "One noise draw per row");
  st_cmd->add_flag("--quiet", st.quiet, "No per-row progress");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ml_cmd) return run_ml(ml);
    if (*fw_cmd) return run_forward(fw);
    if (*bw_cmd) return run_backward(bw);
    if (*st_cmd) return run_study_cmd(st);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
