#pragma once

/// \file loop.hpp
/// Truncated Fourier loops x(t) = a_0 + sum_k (a_k cos kt + b_k sin kt) with period 2*pi,
/// the choreography parameters, and the grid machinery used by every functional.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace choreo {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Raised when two bodies come closer than the collision guard.
class CollisionError : public Error {
 public:
  CollisionError(double t, int h, double separation)
      : Error("collision: separation " + std::to_string(separation) + " at t=" + std::to_string(t) +
              " between bodies 0 and " + std::to_string(h)),
        t_(t),
        h_(h),
        separation_(separation) {}

  double t() const noexcept { return t_; }
  int h() const noexcept { return h_; }
  double separation() const noexcept { return separation_; }

 private:
  double t_;
  int h_;
  double separation_;
};

/// Body count, space dimension, potential exponent and frame angular velocity (0 = inertial).
struct SystemParams {
  int n = 3;
  int d = 2;
  double alpha = 1.0;
  double omega = 0.0;

  double tau() const noexcept { return two_pi / n; }

  void validate() const {
    if (n < 2) throw Error("SystemParams: n must be >= 2");
    if (d < 2) throw Error("SystemParams: d must be >= 2");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error("SystemParams: alpha must be > 0");
    if (!(omega >= 0.0) || !std::isfinite(omega)) throw Error("SystemParams: omega must be >= 0");
  }
};

/// Coefficients of a 2*pi-periodic loop in R^d truncated at harmonic K.
///
/// Storage is flat: the mean (d values) followed, for k = 1..K, by a_k (d values) then b_k
/// (d values). Vector-space operations act coefficientwise, which is what the optimizer and
/// the path interpolation need.
class FourierLoop {
 public:
  FourierLoop() = default;
  FourierLoop(int dim, int cutoff) : dim_(dim), cutoff_(cutoff) {
    if (dim < 1) throw DimensionError("FourierLoop: dim must be >= 1");
    if (cutoff < 1) throw DimensionError("FourierLoop: cutoff must be >= 1");
    coeffs_.assign(static_cast<std::size_t>((2 * cutoff + 1) * dim), 0.0);
  }

  int dim() const noexcept { return dim_; }
  int cutoff() const noexcept { return cutoff_; }
  std::size_t size() const noexcept { return coeffs_.size(); }

  double& mean(int i) { return coeffs_[static_cast<std::size_t>(i)]; }
  double mean(int i) const { return coeffs_[static_cast<std::size_t>(i)]; }
  double& cos(int k, int i) { return coeffs_[cos_index(k, i)]; }
  double cos(int k, int i) const { return coeffs_[cos_index(k, i)]; }
  double& sin(int k, int i) { return coeffs_[cos_index(k, i) + static_cast<std::size_t>(dim_)]; }
  double sin(int k, int i) const { return coeffs_[cos_index(k, i) + static_cast<std::size_t>(dim_)]; }

  std::span<double> coeffs() noexcept { return coeffs_; }
  std::span<const double> coeffs() const noexcept { return coeffs_; }

  double dot(const FourierLoop& other) const {
    check_compatible(other);
    return std::inner_product(coeffs_.begin(), coeffs_.end(), other.coeffs_.begin(), 0.0);
  }
  double norm() const { return std::sqrt(dot(*this)); }

  bool finite() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](double v) { return std::isfinite(v); });
  }

  bool same_shape(const FourierLoop& other) const noexcept {
    return dim_ == other.dim_ && cutoff_ == other.cutoff_;
  }

  FourierLoop& operator+=(const FourierLoop& other) {
    check_compatible(other);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
    return *this;
  }
  FourierLoop& operator-=(const FourierLoop& other) {
    check_compatible(other);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
    return *this;
  }
  FourierLoop& operator*=(double s) {
    for (double& c : coeffs_) c *= s;
    return *this;
  }
  /// this += s * other
  FourierLoop& axpy(double s, const FourierLoop& other) {
    check_compatible(other);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += s * other.coeffs_[i];
    return *this;
  }

  friend FourierLoop operator+(FourierLoop a, const FourierLoop& b) { return a += b; }
  friend FourierLoop operator-(FourierLoop a, const FourierLoop& b) { return a -= b; }
  friend FourierLoop operator*(double s, FourierLoop a) { return a *= s; }
  friend bool operator==(const FourierLoop&, const FourierLoop&) = default;

  /// Same loop with a different cutoff: harmonics above the new cutoff are dropped.
  FourierLoop with_cutoff(int cutoff) const {
    FourierLoop out(dim_, cutoff);
    for (int i = 0; i < dim_; ++i) out.mean(i) = mean(i);
    for (int k = 1; k <= std::min(cutoff, cutoff_); ++k) {
      for (int i = 0; i < dim_; ++i) {
        out.cos(k, i) = cos(k, i);
        out.sin(k, i) = sin(k, i);
      }
    }
    return out;
  }

 private:
  std::size_t cos_index(int k, int i) const {
    return static_cast<std::size_t>(dim_ + (k - 1) * 2 * dim_ + i);
  }
  void check_compatible(const FourierLoop& other) const {
    if (!same_shape(other)) throw DimensionError("FourierLoop: shape mismatch");
  }

  int dim_ = 0;
  int cutoff_ = 0;
  std::vector<double> coeffs_;
};

/// Point x(t).
inline std::vector<double> evaluate(const FourierLoop& x, double t) {
  std::vector<double> p(static_cast<std::size_t>(x.dim()));
  for (int i = 0; i < x.dim(); ++i) p[i] = x.mean(i);
  for (int k = 1; k <= x.cutoff(); ++k) {
    const double c = std::cos(k * t);
    const double s = std::sin(k * t);
    for (int i = 0; i < x.dim(); ++i) p[i] += x.cos(k, i) * c + x.sin(k, i) * s;
  }
  return p;
}

/// The loop t -> x(t + s), computed by rotating each harmonic.
inline FourierLoop shift(const FourierLoop& x, double s) {
  FourierLoop out = x;
  for (int k = 1; k <= x.cutoff(); ++k) {
    const double c = std::cos(k * s);
    const double sn = std::sin(k * s);
    for (int i = 0; i < x.dim(); ++i) {
      const double a = x.cos(k, i);
      const double b = x.sin(k, i);
      out.cos(k, i) = a * c + b * sn;
      out.sin(k, i) = -a * sn + b * c;
    }
  }
  return out;
}

inline FourierLoop derivative(const FourierLoop& x) {
  FourierLoop out(x.dim(), x.cutoff());
  for (int k = 1; k <= x.cutoff(); ++k) {
    for (int i = 0; i < x.dim(); ++i) {
      out.cos(k, i) = k * x.sin(k, i);
      out.sin(k, i) = -k * x.cos(k, i);
    }
  }
  return out;
}

/// Body i follows x(t + i*tau), i = 0..n-1.
inline std::vector<FourierLoop> body_trajectories(const FourierLoop& x, const SystemParams& params) {
  std::vector<FourierLoop> bodies;
  bodies.reserve(static_cast<std::size_t>(params.n));
  for (int i = 0; i < params.n; ++i) bodies.push_back(i == 0 ? x : shift(x, i * params.tau()));
  return bodies;
}

/// Integral over one period of |x|^2, by Parseval.
inline double l2_norm_squared(const FourierLoop& x) {
  double s = 0.0;
  for (int i = 0; i < x.dim(); ++i) s += two_pi * x.mean(i) * x.mean(i);
  for (int k = 1; k <= x.cutoff(); ++k)
    for (int i = 0; i < x.dim(); ++i) s += pi * (x.cos(k, i) * x.cos(k, i) + x.sin(k, i) * x.sin(k, i));
  return s;
}

/// Integral over one period of |x'|^2, by Parseval.
inline double kinetic_integral(const FourierLoop& x) {
  double s = 0.0;
  for (int k = 1; k <= x.cutoff(); ++k)
    for (int i = 0; i < x.dim(); ++i)
      s += pi * k * k * (x.cos(k, i) * x.cos(k, i) + x.sin(k, i) * x.sin(k, i));
  return s;
}

/// xi_h = integral of |x(t) - x(t + h*tau)|^2, computed exactly from the coefficients.
inline double shift_distance_squared(const FourierLoop& x, double s) {
  double total = 0.0;
  for (int k = 1; k <= x.cutoff(); ++k) {
    const double c = std::cos(k * s);
    const double sn = std::sin(k * s);
    for (int i = 0; i < x.dim(); ++i) {
      const double a = x.cos(k, i);
      const double b = x.sin(k, i);
      const double da = a - (a * c + b * sn);
      const double db = b - (-a * sn + b * c);
      total += pi * (da * da + db * db);
    }
  }
  return total;
}

// ---------------------------------------------------------------------------------------------
// Grid sampling

/// M = max(4K, 16n) rounded up to a multiple of n.
inline int default_grid_size(int cutoff, int n) {
  const int m = std::max(4 * cutoff, 16 * n);
  return ((m + n - 1) / n) * n;
}

/// Cosine/sine tables for synthesis on t_j = 2*pi*j/M and the transposed analysis.
class GridBasis {
 public:
  GridBasis() = default;
  GridBasis(int cutoff, int grid_size) : cutoff_(cutoff), grid_(grid_size) {
    if (grid_size < 1) throw Error("GridBasis: grid size must be positive");
    cos_.resize(static_cast<std::size_t>(grid_size * cutoff));
    sin_.resize(cos_.size());
    for (int j = 0; j < grid_size; ++j) {
      for (int k = 1; k <= cutoff; ++k) {
        // exact integer reduction of k*j keeps the tables periodic to the last bit
        const double t = two_pi * static_cast<double>((static_cast<long long>(k) * j) % grid_size) / grid_size;
        cos_[idx(j, k)] = std::cos(t);
        sin_[idx(j, k)] = std::sin(t);
      }
    }
  }

  int cutoff() const noexcept { return cutoff_; }
  int grid_size() const noexcept { return grid_; }
  double time(int j) const noexcept { return two_pi * j / grid_; }
  double cos(int j, int k) const { return cos_[idx(j, k)]; }
  double sin(int j, int k) const { return sin_[idx(j, k)]; }

  /// Row-major M x d samples of x.
  void synthesize(const FourierLoop& x, std::span<double> out) const {
    const int d = x.dim();
    check(x, out.size());
    for (int j = 0; j < grid_; ++j) {
      double* row = out.data() + static_cast<std::size_t>(j * d);
      for (int i = 0; i < d; ++i) row[i] = x.mean(i);
      for (int k = 1; k <= cutoff_; ++k) {
        const double c = cos_[idx(j, k)];
        const double s = sin_[idx(j, k)];
        for (int i = 0; i < d; ++i) row[i] += x.cos(k, i) * c + x.sin(k, i) * s;
      }
    }
  }

  /// Adds the pull-back of grid values g_j onto coefficients: d/dcoeff of sum_j <g_j, x(t_j)>.
  void accumulate_transpose(std::span<const double> values, FourierLoop& out) const {
    const int d = out.dim();
    check(out, values.size());
    for (int j = 0; j < grid_; ++j) {
      const double* row = values.data() + static_cast<std::size_t>(j * d);
      for (int i = 0; i < d; ++i) out.mean(i) += row[i];
      for (int k = 1; k <= cutoff_; ++k) {
        const double c = cos_[idx(j, k)];
        const double s = sin_[idx(j, k)];
        for (int i = 0; i < d; ++i) {
          out.cos(k, i) += row[i] * c;
          out.sin(k, i) += row[i] * s;
        }
      }
    }
  }

 private:
  std::size_t idx(int j, int k) const { return static_cast<std::size_t>(j * cutoff_ + (k - 1)); }
  void check(const FourierLoop& x, std::size_t n_values) const {
    if (x.cutoff() != cutoff_) throw DimensionError("GridBasis: cutoff mismatch");
    if (n_values != static_cast<std::size_t>(grid_ * x.dim())) throw DimensionError("GridBasis: buffer size mismatch");
  }

  int cutoff_ = 0;
  int grid_ = 0;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

/// Samples of a loop on a uniform grid. For choreographies the grid size is a multiple of n,
/// so the body shifts h*tau are integer rotations of the sample index.
struct SampledLoop {
  int grid_size = 0;
  int dim = 0;
  std::vector<double> samples;  // grid_size x dim, row-major

  std::span<const double> at(int j) const {
    return {samples.data() + static_cast<std::size_t>(j * dim), static_cast<std::size_t>(dim)};
  }
};

inline SampledLoop sample(const FourierLoop& x, int grid_size) {
  if (grid_size < 1) throw Error("sample: grid size must be positive");
  SampledLoop out{grid_size, x.dim(), std::vector<double>(static_cast<std::size_t>(grid_size * x.dim()))};
  GridBasis(x.cutoff(), grid_size).synthesize(x, out.samples);
  return out;
}

/// Sampling for an n-body choreography: enforces M % n == 0 and M >= 4K.
inline SampledLoop sample(const FourierLoop& x, const SystemParams& params, int grid_size = 0) {
  if (grid_size == 0) grid_size = default_grid_size(x.cutoff(), params.n);
  if (grid_size % params.n != 0) throw Error("sample: grid size must be a multiple of n");
  if (grid_size < 4 * x.cutoff()) throw Error("sample: grid size must be at least 4K");
  return sample(x, grid_size);
}

// ---------------------------------------------------------------------------------------------
// Symmetry constraints

/// `eight3d`: x_1 pi-periodic and odd, x_2 odd, x_3 even (d = 3 only).
enum class SymmetryGroup { trivial, eight3d };

inline FourierLoop project_symmetry(const FourierLoop& x, SymmetryGroup g) {
  if (g == SymmetryGroup::trivial) return x;
  if (x.dim() != 3) throw DimensionError("project_symmetry: eight3d requires d = 3");
  FourierLoop out = x;
  out.mean(0) = 0.0;
  out.mean(1) = 0.0;
  for (int k = 1; k <= x.cutoff(); ++k) {
    out.cos(k, 0) = 0.0;
    if (k % 2 != 0) out.sin(k, 0) = 0.0;
    out.cos(k, 1) = 0.0;
    out.sin(k, 2) = 0.0;
  }
  return out;
}

inline const char* to_string(SymmetryGroup g) { return g == SymmetryGroup::eight3d ? "eight3d" : "trivial"; }

inline SymmetryGroup symmetry_from_string(const std::string& s) {
  if (s == "eight3d" || s == "EIGHT3D") return SymmetryGroup::eight3d;
  if (s == "trivial" || s == "none" || s.empty()) return SymmetryGroup::trivial;
  throw Error("unknown symmetry group: " + s);
}

}  // namespace choreo
