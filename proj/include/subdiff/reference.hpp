#pragma once

// Reference solutions for the convergence studies.
//
// 1D: semidiscrete spectral solution on a fine uniform mesh nested over the
//     coarse study mesh, cached on disk.
// 2D: the exact eigen-series of the continuous problem for the smooth
//     product initial data, truncated where the tail is below 1e-10.

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "subdiff/fem.hpp"

namespace subdiff {

enum class InitialShape { smooth, step, sine };

InitialShape parse_shape(const std::string& name);
std::string to_string(InitialShape s);

/// u0 as pointwise data: x(1-x) / step at 1/2 / sin(pi x) in 1D, and the
/// tensor products of the same profiles in 2D.
PointFunction initial_function(InitialShape shape, int dim);

/// Breakpoints of the initial data for exact projection.
ProjectionOptions projection_options(InitialShape shape);

class Reference {
 public:
  virtual ~Reference() = default;

  const std::vector<double>& times() const { return times_; }
  std::size_t index_of(double t) const;

  /// ||u(t_i)||_{L2}
  virtual double norm(std::size_t i) const = 0;
  /// ||u(t_i) - u_h||_{L2} for a P1 function on `coarse`.
  virtual double distance(std::size_t i, const FemSpace& coarse, const Eigen::Ref<const Eigen::VectorXd>& u) const = 0;
  /// L2 projection of u(t_i) onto `coarse`.
  virtual Eigen::VectorXd project(std::size_t i, const FemSpace& coarse) const = 0;

 protected:
  std::vector<double> times_;
};

/// Fine-mesh semidiscrete reference in 1D.
class NestedReference1D : public Reference {
 public:
  NestedReference1D(InitialShape shape, double alpha, double T, int fine_K, std::vector<double> times,
                    const std::filesystem::path& cache_dir = {});

  const FemSpace& fine_space() const { return *fine_; }
  const Eigen::VectorXd& field(std::size_t i) const { return fields_.at(i); }
  bool loaded_from_cache() const { return from_cache_; }
  const std::string& cache_key() const { return key_; }

  double norm(std::size_t i) const override;
  double distance(std::size_t i, const FemSpace& coarse, const Eigen::Ref<const Eigen::VectorXd>& u) const override;
  Eigen::VectorXd project(std::size_t i, const FemSpace& coarse) const override;

 private:
  std::unique_ptr<FemSpace> fine_;
  std::vector<Eigen::VectorXd> fields_;
  std::vector<double> norms_;
  std::string key_;
  bool from_cache_ = false;
};

/// Smallest fine K with (K_fine + 1) a multiple of (K + 1) and K_fine + 1 >= min_points.
int nested_fine_K(int coarse_K, int min_points);

/// Exact solution of the 2D problem with u0 = x(1-x)y(1-y).
class SeriesReference2D : public Reference {
 public:
  SeriesReference2D(double alpha, double T, std::vector<double> times, int max_mode = 199);

  double value(std::size_t i, double x, double y) const;
  PointFunction function(std::size_t i) const;

  double norm(std::size_t i) const override;
  double distance(std::size_t i, const FemSpace& coarse, const Eigen::Ref<const Eigen::VectorXd>& u) const override;
  Eigen::VectorXd project(std::size_t i, const FemSpace& coarse) const override;

 private:
  std::vector<Eigen::MatrixXd> coeffs_;  // odd modes j, k
  std::vector<double> norms_;
  int max_mode_;
};

/// Reads or writes raw field vectors keyed by a string. Corrupt or mismatching
/// files are ignored (load returns false).
bool load_cached_fields(const std::filesystem::path& file, const std::string& key, std::vector<Eigen::VectorXd>& out);
void store_cached_fields(const std::filesystem::path& file, const std::string& key,
                         const std::vector<Eigen::VectorXd>& fields);

}  // namespace subdiff
