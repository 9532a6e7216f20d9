#include "subdiff/reference.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "subdiff/mittag_leffler.hpp"
#include "subdiff/spectral.hpp"

namespace subdiff {
namespace {

constexpr char kCacheMagic[8] = {'S', 'D', 'R', 'E', 'F', '0', '1', '\0'};

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

}  // namespace

InitialShape parse_shape(const std::string& name) {
  if (name == "smooth") return InitialShape::smooth;
  if (name == "step") return InitialShape::step;
  if (name == "sine") return InitialShape::sine;
  throw std::invalid_argument("unknown initial data '" + name + "' (expected smooth, step or sine)");
}

std::string to_string(InitialShape s) {
  switch (s) {
    case InitialShape::smooth: return "smooth";
    case InitialShape::step: return "step";
    case InitialShape::sine: return "sine";
  }
  return "unknown";
}

PointFunction initial_function(InitialShape shape, int dim) {
  const double pi = std::numbers::pi;
  if (dim == 1) {
    switch (shape) {
      case InitialShape::smooth: return [](double x, double) { return x * (1.0 - x); };
      case InitialShape::step: return [](double x, double) { return x > 0.5 ? 1.0 : 0.0; };
      case InitialShape::sine: return [pi](double x, double) { return std::sin(pi * x); };
    }
  } else if (dim == 2) {
    switch (shape) {
      case InitialShape::smooth: return [](double x, double y) { return x * (1.0 - x) * y * (1.0 - y); };
      case InitialShape::sine: return [pi](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); };
      case InitialShape::step: break;
    }
    throw std::invalid_argument("initial_function: step data is only available in 1D");
  }
  throw std::invalid_argument("initial_function: dim must be 1 or 2");
}

ProjectionOptions projection_options(InitialShape shape) {
  ProjectionOptions o;
  if (shape == InitialShape::step) o.breakpoints = {0.5};
  return o;
}

std::size_t Reference::index_of(double t) const {
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (std::abs(times_[i] - t) <= 1e-12) return i;
  }
  throw std::out_of_range("Reference: time not available");
}

bool load_cached_fields(const std::filesystem::path& file, const std::string& key, std::vector<Eigen::VectorXd>& out) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return false;
  char magic[8];
  std::uint64_t key_len = 0, count = 0, size = 0, checksum = 0;
  if (!in.read(magic, 8) || std::memcmp(magic, kCacheMagic, 8) != 0) return false;
  if (!in.read(reinterpret_cast<char*>(&key_len), sizeof key_len) || key_len != key.size()) return false;
  std::string stored(key_len, '\0');
  if (!in.read(stored.data(), static_cast<std::streamsize>(key_len)) || stored != key) return false;
  if (!in.read(reinterpret_cast<char*>(&count), sizeof count)) return false;
  if (!in.read(reinterpret_cast<char*>(&size), sizeof size)) return false;
  if (count > 4096 || size > (1u << 26)) return false;
  std::vector<Eigen::VectorXd> fields(count, Eigen::VectorXd(size));
  std::uint64_t h = 1469598103934665603ull;
  for (auto& f : fields) {
    const auto bytes = static_cast<std::streamsize>(size * sizeof(double));
    if (!in.read(reinterpret_cast<char*>(f.data()), bytes)) return false;
    h = fnv1a(f.data(), static_cast<std::size_t>(bytes), h);
  }
  if (!in.read(reinterpret_cast<char*>(&checksum), sizeof checksum) || checksum != h) return false;
  out = std::move(fields);
  return true;
}

void store_cached_fields(const std::filesystem::path& file, const std::string& key,
                         const std::vector<Eigen::VectorXd>& fields) {
  std::filesystem::create_directories(file.parent_path());
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write reference cache " + tmp.string());
    const std::uint64_t key_len = key.size(), count = fields.size();
    const std::uint64_t size = fields.empty() ? 0 : static_cast<std::uint64_t>(fields.front().size());
    out.write(kCacheMagic, 8);
    out.write(reinterpret_cast<const char*>(&key_len), sizeof key_len);
    out.write(key.data(), static_cast<std::streamsize>(key_len));
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    out.write(reinterpret_cast<const char*>(&size), sizeof size);
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& f : fields) {
      const auto bytes = static_cast<std::streamsize>(size * sizeof(double));
      out.write(reinterpret_cast<const char*>(f.data()), bytes);
      h = fnv1a(f.data(), static_cast<std::size_t>(bytes), h);
    }
    out.write(reinterpret_cast<const char*>(&h), sizeof h);
  }
  std::filesystem::rename(tmp, file);
}

int nested_fine_K(int coarse_K, int min_points) {
  const int cells = coarse_K + 1;
  const int m = (min_points + cells - 1) / cells;
  return cells * std::max(m, 1) - 1;
}

NestedReference1D::NestedReference1D(InitialShape shape, double alpha, double T, int fine_K, std::vector<double> times,
                                     const std::filesystem::path& cache_dir) {
  times_ = std::move(times);
  fine_ = std::make_unique<FemSpace>(make_mesh_1d(fine_K));
  std::ostringstream key;
  key << "ref1d|" << to_string(shape) << "|alpha=" << hex_double(alpha) << "|T=" << hex_double(T)
      << "|K=" << fine_K << "|t=";
  for (double t : times_) key << hex_double(t) << ",";
  key_ = key.str();

  std::filesystem::path file;
  if (!cache_dir.empty()) {
    char name[40];
    std::snprintf(name, sizeof name, "ref-%016llx.bin",
                  static_cast<unsigned long long>(fnv1a(key_.data(), key_.size())));
    file = cache_dir / name;
    from_cache_ = load_cached_fields(file, key_, fields_) && fields_.size() == times_.size() &&
                  (fields_.empty() || fields_.front().size() == fine_->size());
  }
  if (!from_cache_) {
    fields_.clear();
    const Eigen::VectorXd u0 = fine_->l2_project(initial_function(shape, 1), projection_options(shape));
    const SpectralSolver1D solver(*fine_, alpha, T);
    for (double t : times_) fields_.push_back(t == 0.0 ? u0 : solver.semi_forward(u0, t));
    if (!file.empty()) store_cached_fields(file, key_, fields_);
  }
  for (const auto& f : fields_) {
    norms_.push_back(fine_->norm(f));
    if (!(norms_.back() > 0.0)) throw std::runtime_error("NestedReference1D: reference norm is not positive");
  }
}

double NestedReference1D::norm(std::size_t i) const { return norms_.at(i); }

double NestedReference1D::distance(std::size_t i, const FemSpace& coarse,
                                   const Eigen::Ref<const Eigen::VectorXd>& u) const {
  return l2_error(coarse, u, *fine_, fields_.at(i));
}

Eigen::VectorXd NestedReference1D::project(std::size_t i, const FemSpace& coarse) const {
  return coarse.project_from(*fine_, fields_.at(i));
}

SeriesReference2D::SeriesReference2D(double alpha, double T, std::vector<double> times, int max_mode)
    : max_mode_(max_mode) {
  times_ = std::move(times);
  const double pi = std::numbers::pi;
  const int n = (max_mode + 1) / 2;  // odd modes 1, 3, ..., max_mode
  Eigen::VectorXd a(n);
  for (int p = 0; p < n; ++p) {
    const double j = 2 * p + 1;
    a(p) = 8.0 / (j * j * j * pi * pi * pi);
  }
  for (double t : times_) {
    if (t < 0.0 || t > T) throw std::domain_error("SeriesReference2D: time outside [0, T]");
    Eigen::MatrixXd c(n, n);
    const double ta = std::pow(t, alpha);
    for (int p = 0; p < n; ++p) {
      for (int q = 0; q < n; ++q) {
        const double j = 2 * p + 1, k = 2 * q + 1;
        c(p, q) = a(p) * a(q) * ml_eval(alpha, pi * pi * (j * j + k * k) * ta);
      }
    }
    norms_.push_back(t == 0.0 ? 1.0 / 30.0 : 0.5 * c.norm());
    coeffs_.push_back(std::move(c));
  }
}

double SeriesReference2D::value(std::size_t i, double x, double y) const {
  if (times_.at(i) == 0.0) return x * (1.0 - x) * y * (1.0 - y);
  const Eigen::MatrixXd& c = coeffs_[i];
  const Eigen::Index n = c.rows();
  auto odd_sines = [n](double z) {
    // sin((j+2) th) = 2 cos(2 th) sin(j th) - sin((j-2) th)
    const double th = std::numbers::pi * z;
    Eigen::VectorXd s(n);
    s(0) = std::sin(th);
    if (n > 1) s(1) = std::sin(3.0 * th);
    const double c2 = 2.0 * std::cos(2.0 * th);
    for (Eigen::Index p = 2; p < n; ++p) s(p) = c2 * s(p - 1) - s(p - 2);
    return s;
  };
  return odd_sines(x).dot(c * odd_sines(y));
}

PointFunction SeriesReference2D::function(std::size_t i) const {
  return [this, i](double x, double y) { return value(i, x, y); };
}

double SeriesReference2D::norm(std::size_t i) const { return norms_.at(i); }

double SeriesReference2D::distance(std::size_t i, const FemSpace& coarse,
                                   const Eigen::Ref<const Eigen::VectorXd>& u) const {
  return l2_distance(coarse.mesh(), u, function(i), 7);
}

Eigen::VectorXd SeriesReference2D::project(std::size_t i, const FemSpace& coarse) const {
  return coarse.l2_project(function(i));
}

}  // namespace subdiff
