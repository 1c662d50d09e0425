/**
 * Copyright (C) 2026 The reluwave authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace reluwave {

inline constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or degenerate filter parameters.
struct ConstructionError : Error {
  using Error::Error;
};

/// Frame lower bound too small to invert; carries the uncovered frequencies.
struct FrameError : Error {
  std::vector<std::pair<double, double>> uncovered;
  FrameError(const std::string& msg, std::vector<std::pair<double, double>> freqs)
      : Error(msg), uncovered(std::move(freqs)) {}
};

/// Mismatched grid sizes or unknown keys.
struct ShapeError : Error {
  using Error::Error;
};

/// Key/index structure of two statistic profiles does not line up.
struct IndexError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Real image plane
// ---------------------------------------------------------------------------

/// Dense row-major real 2D array. Most of the library works on square planes.
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0)
      : width_(width), height_(height),
        v_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return v_.size(); }
  bool square() const { return width_ == height_; }

  double& operator()(int x, int y) { return v_[static_cast<std::size_t>(y) * width_ + x]; }
  double operator()(int x, int y) const { return v_[static_cast<std::size_t>(y) * width_ + x]; }
  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  bool same_shape(const Image& o) const { return width_ == o.width_ && height_ == o.height_; }

  Image& operator+=(const Image& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  Image& operator-=(const Image& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
  }
  Image& operator*=(double s) {
    for (double& x : v_) x *= s;
    return *this;
  }

  friend Image operator-(Image a, const Image& b) { return a -= b; }
  friend Image operator+(Image a, const Image& b) { return a += b; }

 private:
  int width_ = 0, height_ = 0;
  std::vector<double> v_;
};

inline double dot(const Image& a, const Image& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Image& a) { return std::sqrt(dot(a, a)); }

/// Relative L2 distance ||a - b|| / ||b||; plain ||a - b|| if b is zero.
inline double rel_error(const Image& a, const Image& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    num += d * d;
    den += b[i] * b[i];
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Circular shift by (dx, dy); out(x, y) = in((x - dx) mod w, (y - dy) mod h).
inline Image circular_shift(const Image& in, int dx, int dy) {
  Image out(in.width(), in.height());
  const int w = in.width(), h = in.height();
  auto wrap = [](int a, int n) { return ((a % n) + n) % n; };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(x, y) = in(wrap(x - dx, w), wrap(y - dy, h));
  return out;
}

// ---------------------------------------------------------------------------
// Frequency plane
// ---------------------------------------------------------------------------

/// Square complex array in FFT layout: bin i maps to integer frequency
/// k = i < n/2 ? i : i - n, i.e. omega = 2*pi*k/n in [-pi, pi).
class Spectrum {
 public:
  Spectrum() = default;
  explicit Spectrum(int n) : n_(n), v_(static_cast<std::size_t>(n) * n) {}

  int n() const { return n_; }
  std::size_t size() const { return v_.size(); }

  std::complex<double>& operator()(int ix, int iy) {
    return v_[static_cast<std::size_t>(iy) * n_ + ix];
  }
  std::complex<double> operator()(int ix, int iy) const {
    return v_[static_cast<std::size_t>(iy) * n_ + ix];
  }
  std::complex<double>& operator[](std::size_t i) { return v_[i]; }
  std::complex<double> operator[](std::size_t i) const { return v_[i]; }

  std::complex<double>* data() { return v_.data(); }
  const std::complex<double>* data() const { return v_.data(); }

  static int freq_of(int i, int n) { return i < n / 2 ? i : i - n; }
  double omega_x(int ix) const { return 2.0 * kPi * freq_of(ix, n_) / n_; }
  double omega_y(int iy) const { return 2.0 * kPi * freq_of(iy, n_) / n_; }

  /// Project onto the Hermitian subspace so the spatial counterpart is
  /// exactly real. No-op up to rounding when the input is already Hermitian.
  void symmetrize_hermitian() {
    for (int iy = 0; iy < n_; ++iy) {
      const int my = (n_ - iy) % n_;
      for (int ix = 0; ix < n_; ++ix) {
        const int mx = (n_ - ix) % n_;
        if (iy > my || (iy == my && ix > mx)) continue;
        const auto a = (*this)(ix, iy);
        const auto b = (*this)(mx, my);
        const auto avg = 0.5 * (a + std::conj(b));
        (*this)(ix, iy) = avg;
        (*this)(mx, my) = std::conj(avg);
      }
    }
  }

 private:
  int n_ = 0;
  std::vector<std::complex<double>> v_;
};

// ---------------------------------------------------------------------------
// Deterministic RNG
// ---------------------------------------------------------------------------

/// std::mt19937_64 with hand-rolled value mapping. The engine's output
/// sequence is pinned by the standard; distributions are not, so we never use
/// std ones (results must reproduce across standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return state_(); }

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(state_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Box-Muller; deterministic given the seed.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

 private:
  std::mt19937_64 state_;
  bool have_spare_ = false;
  double spare_ = 0;
};

}  // namespace reluwave
