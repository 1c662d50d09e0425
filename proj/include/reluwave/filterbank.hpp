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

#include <bit>
#include <compare>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <tuple>
#include <utility>

#include "reluwave/core.hpp"
#include "reluwave/fft.hpp"

namespace reluwave {

inline constexpr int kMaxScales = 6;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct FilterBankConfig {
  int grid_size = 256;       ///< N; the image and all maps are N x N
  int num_scales = 5;        ///< J; dyadic scales 0 <= j < J
  int num_orientations = 4;  ///< M; directional angles m*pi/M
  int num_angular = 4;       ///< L; omnidirectional angular frequencies
  double window_sigma = 1.6;           ///< Gaussian window std-dev in pixels at scale 0
  double central_freq = 0.75 * kPi;    ///< |xi| in radians/pixel
  bool tighten = true;                 ///< post-normalize to a tight frame

  void validate() const {
    if (grid_size < 8 || !std::has_single_bit(static_cast<unsigned>(grid_size)))
      throw ConstructionError("grid_size must be a power of two >= 8");
    const int log2n = std::countr_zero(static_cast<unsigned>(grid_size));
    if (num_scales < 1 || num_scales > kMaxScales || num_scales > log2n - 2)
      throw ConstructionError("num_scales must satisfy 1 <= J <= min(6, log2(N) - 2)");
    if (num_orientations < 1) throw ConstructionError("num_orientations must be >= 1");
    if (num_angular < 1) throw ConstructionError("num_angular must be >= 1");
    if (!(window_sigma > 0)) throw ConstructionError("window_sigma must be positive");
    if (!(central_freq > 0) || !(central_freq < kPi))
      throw ConstructionError("central_freq must lie in (0, pi)");
  }
};

// ---------------------------------------------------------------------------
// Filter keys
// ---------------------------------------------------------------------------

enum class FilterKind : std::uint8_t {
  LowPass,
  HighPass,
  DirectionalEven,
  DirectionalOdd,
  Omni,
  Residual,  ///< complement filter of the reduced second-layer banks
};

struct FilterKey {
  FilterKind kind = FilterKind::LowPass;
  int scale = 0;  ///< j for wavelets, 0 otherwise
  int index = 0;  ///< orientation m (directional) or angular frequency l (omni)

  auto operator<=>(const FilterKey&) const = default;

  bool is_wavelet() const {
    return kind == FilterKind::DirectionalEven || kind == FilterKind::DirectionalOdd ||
           kind == FilterKind::Omni;
  }

  std::string str() const {
    switch (kind) {
      case FilterKind::LowPass: return "lowpass";
      case FilterKind::HighPass: return "highpass";
      case FilterKind::Residual: return "residual";
      case FilterKind::DirectionalEven: {
        std::ostringstream os;
        os << "dir:e:" << scale << ":" << index;
        return os.str();
      }
      case FilterKind::DirectionalOdd: {
        std::ostringstream os;
        os << "dir:o:" << scale << ":" << index;
        return os.str();
      }
      case FilterKind::Omni: {
        std::ostringstream os;
        os << "omni:" << scale << ":" << index;
        return os.str();
      }
    }
    return "?";
  }

  static FilterKey lowpass() { return {FilterKind::LowPass, 0, 0}; }
  static FilterKey highpass() { return {FilterKind::HighPass, 0, 0}; }
  static FilterKey residual() { return {FilterKind::Residual, 0, 0}; }
  static FilterKey directional(int j, int m, bool odd) {
    return {odd ? FilterKind::DirectionalOdd : FilterKind::DirectionalEven, j, m};
  }
  static FilterKey omni(int j, int l) { return {FilterKind::Omni, j, l}; }
};

inline FilterKey parse_filter_key(const std::string& s) {
  if (s == "lowpass") return FilterKey::lowpass();
  if (s == "highpass") return FilterKey::highpass();
  if (s == "residual") return FilterKey::residual();
  std::istringstream is(s);
  std::string head;
  std::getline(is, head, ':');
  if (head == "dir") {
    std::string parity, j, m;
    std::getline(is, parity, ':');
    std::getline(is, j, ':');
    std::getline(is, m, ':');
    return FilterKey::directional(std::stoi(j), std::stoi(m), parity == "o");
  }
  if (head == "omni") {
    std::string j, l;
    std::getline(is, j, ':');
    std::getline(is, l, ':');
    return FilterKey::omni(std::stoi(j), std::stoi(l));
  }
  throw IndexError("unknown filter key: " + s);
}

// ---------------------------------------------------------------------------
// Bank containers
// ---------------------------------------------------------------------------

struct FilterBank {
  FilterBankConfig config;
  std::map<FilterKey, Spectrum> filters;
  double frame_lower = 0.0;
  double frame_upper = 0.0;

  const Spectrum& at(const FilterKey& key) const {
    auto it = filters.find(key);
    if (it == filters.end()) throw IndexError("filter bank has no entry " + key.str());
    return it->second;
  }

  std::vector<FilterKey> wavelet_keys() const {
    std::vector<FilterKey> keys;
    for (const auto& [key, spec] : filters)
      if (key.is_wavelet()) keys.push_back(key);
    return keys;
  }
};

struct DualBank {
  std::map<FilterKey, Spectrum> duals;

  const Spectrum& at(const FilterKey& key) const {
    auto it = duals.find(key);
    if (it == duals.end()) throw IndexError("dual bank has no entry " + key.str());
    return it->second;
  }
};

/// Window spectrum hook: value of the window's Fourier transform at (wx, wy).
/// The default is the isotropic Gaussian; tests substitute pathological
/// windows as negative controls.
using WindowFn = std::function<double(double wx, double wy)>;

inline WindowFn gaussian_window(double sigma) {
  const double s2 = sigma * sigma;
  return [s2](double wx, double wy) { return std::exp(-0.5 * s2 * (wx * wx + wy * wy)); };
}

// ---------------------------------------------------------------------------
// Construction internals
// ---------------------------------------------------------------------------

namespace detail {

/// Frame sum S(omega) = sum_k |f_k(omega)|^2 over the stored filters.
inline Image frame_sum(const std::map<FilterKey, Spectrum>& filters, int n) {
  Image s(n, n);
  for (const auto& [key, spec] : filters)
    for (std::size_t i = 0; i < spec.size(); ++i) s[i] += std::norm(spec[i]);
  return s;
}

inline std::pair<double, double> min_max(const Image& s) {
  double lo = s[0], hi = s[0];
  for (std::size_t i = 0; i < s.size(); ++i) {
    lo = std::min(lo, s[i]);
    hi = std::max(hi, s[i]);
  }
  return {lo, hi};
}

/// Tabulated scale-0 spectrum of one omnidirectional wavelet. The waveform is
/// defined in the spatial domain as env(r) * J_l(q_l * r) * cos(l * phi),
/// with q_l proportional to L - 1 - l, and transformed once on a fixed
/// oversampled grid; every scale then evaluates the same interpolated table at
/// 2^j * omega, which makes the dyadic dilation relation exact on the image
/// grid. The Bessel factor oscillates radially at rate q_l like a cosine but
/// its spectrum is a clean annulus with Gaussian tails, so the filter stays
/// out of the low-pass band. When q_l = 0 the waveform degenerates to the
/// angular-only harmonic (r/sigma)^l * env * cos(l * phi).
class OmniTable {
 public:
  OmniTable(int ell, int num_angular, double sigma, double central_freq) {
    const double nu =
        num_angular >= 2 ? central_freq / (num_angular - 1) : central_freq;
    const double radial_freq = nu * (num_angular - 1 - ell);
    Image spatial(kCount, kCount);
    for (int iy = 0; iy < kCount; ++iy) {
      const double uy = wrapped_coord(iy) * kStep;
      for (int ix = 0; ix < kCount; ++ix) {
        const double ux = wrapped_coord(ix) * kStep;
        const double r = std::hypot(ux, uy);
        double val;
        if (r == 0.0) {
          val = ell == 0 ? 1.0 : 0.0;  // J_0(0) = 1; angular factors vanish
        } else {
          const double env = std::exp(-0.5 * r * r / (sigma * sigma));
          const double phi = std::atan2(uy, ux);
          double radial;
          if (radial_freq > 0.0)
            radial = std::cyl_bessel_j(ell, radial_freq * r);
          else
            radial = ell == 0 ? 1.0 : std::pow(r / sigma, ell);
          val = env * radial * std::cos(ell * phi);
        }
        spatial(ix, iy) = val;
      }
    }
    table_ = fft::forward(spatial);
    double peak = 0.0;
    for (std::size_t i = 0; i < table_.size(); ++i) peak = std::max(peak, std::abs(table_[i]));
    const double scale = peak > 0 ? 0.5 / peak : 1.0;
    for (std::size_t i = 0; i < table_.size(); ++i) table_[i] *= scale;
    dc_ = table_[0].real();
    sigma2_ = sigma * sigma;
  }

  /// Interpolated spectrum value at an arbitrary frequency, zero outside the
  /// tabulated range. A scaled copy of the window spectrum is subtracted so
  /// the value at the origin is exactly zero (zero-average wavelet).
  std::complex<double> eval(double vx, double vy) const {
    std::complex<double> raw = lookup(vx, vy);
    const double corr = dc_ * std::exp(-0.5 * sigma2_ * (vx * vx + vy * vy));
    return raw - corr;
  }

 private:
  static constexpr int kCount = 512;      // table grid points per axis
  static constexpr double kStep = 0.5;    // spatial sampling step in pixels

  static int wrapped_coord(int i) { return i < kCount / 2 ? i : i - kCount; }

  std::complex<double> lookup(double vx, double vy) const {
    const double freq_step = 2.0 * kPi / (kCount * kStep);
    const double limit = kPi / kStep - 2.0 * freq_step;
    if (std::abs(vx) >= limit || std::abs(vy) >= limit) return {0.0, 0.0};
    const double fx = vx / freq_step, fy = vy / freq_step;
    const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
    const double ax = fx - x0, ay = fy - y0;
    auto cell = [&](int kx, int ky) {
      const int ix = ((kx % kCount) + kCount) % kCount;
      const int iy = ((ky % kCount) + kCount) % kCount;
      return table_(ix, iy);
    };
    return (1 - ax) * (1 - ay) * cell(x0, y0) + ax * (1 - ay) * cell(x0 + 1, y0) +
           (1 - ax) * ay * cell(x0, y0 + 1) + ax * ay * cell(x0 + 1, y0 + 1);
  }

  Spectrum table_;
  double dc_ = 0.0;
  double sigma2_ = 1.0;
};

/// Tables depend only on (l, L, sigma, xi); cache them across bank builds.
inline const OmniTable& omni_table(int ell, int num_angular, double sigma, double central_freq) {
  using Key = std::tuple<int, int, double, double>;
  static std::map<Key, OmniTable> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  const Key key{ell, num_angular, sigma, central_freq};
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, OmniTable(ell, num_angular, sigma, central_freq)).first;
  return it->second;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Bank construction
// ---------------------------------------------------------------------------

/// Builds the full analysis family on the discrete frequency grid: Gaussian
/// low pass dilated to 2^J, corner high pass, and for every scale j < J the
/// M even + M odd directional wavelets and L omnidirectional wavelets. Every
/// wavelet is the shared scale-0 spectrum evaluated at 2^j * omega, so the
/// dyadic dilation relation holds exactly wherever 2^j * omega is on-grid.
inline FilterBank build_bank(const FilterBankConfig& config, const WindowFn& window) {
  config.validate();
  const int n = config.grid_size;
  const int num_scales = config.num_scales;
  const double xi = config.central_freq;

  // Degenerate window: the spectral bump must decay within the grid band,
  // otherwise the "wavelets" are not localized and the frame sum is flat noise.
  {
    const double at_edge = std::abs(window(kPi, 0.0));
    const double at_zero = std::abs(window(0.0, 0.0));
    if (!(at_zero > 0) || at_edge > 0.75 * at_zero)
      throw ConstructionError("window too wide for the grid (sigma too small)");
  }

  FilterBank bank;
  bank.config = config;

  // Directional wavelets: window bumps at +/- xi_m, cosine and sine phases.
  // A scaled copy of the window spectrum is subtracted so psi_hat(0) == 0.
  for (int m = 0; m < config.num_orientations; ++m) {
    const double theta = kPi * m / config.num_orientations;
    const double xix = xi * std::cos(theta), xiy = xi * std::sin(theta);
    const double w0 = window(0.0, 0.0);
    const std::complex<double> even_dc(0.5 * (window(-xix, -xiy) + window(xix, xiy)), 0.0);
    const std::complex<double> odd_dc =
        std::complex<double>(0.0, -0.5) * (window(-xix, -xiy) - window(xix, xiy));
    for (int j = 0; j < num_scales; ++j) {
      const double dil = static_cast<double>(1 << j);
      Spectrum even(n), odd(n);
      for (int iy = 0; iy < n; ++iy) {
        const double vy = dil * 2.0 * kPi * Spectrum::freq_of(iy, n) / n;
        for (int ix = 0; ix < n; ++ix) {
          const double vx = dil * 2.0 * kPi * Spectrum::freq_of(ix, n) / n;
          const double wm = window(vx - xix, vy - xiy);
          const double wp = window(vx + xix, vy + xiy);
          const double wc = window(vx, vy);
          even(ix, iy) = std::complex<double>(0.5 * (wm + wp), 0.0) - even_dc * (wc / w0);
          odd(ix, iy) = std::complex<double>(0.0, -0.5 * (wm - wp)) - odd_dc * (wc / w0);
        }
      }
      even.symmetrize_hermitian();
      odd.symmetrize_hermitian();
      bank.filters.emplace(FilterKey::directional(j, m, false), std::move(even));
      bank.filters.emplace(FilterKey::directional(j, m, true), std::move(odd));
    }
  }

  // Omnidirectional wavelets from the shared tabulated spectrum.
  for (int l = 0; l < config.num_angular; ++l) {
    const detail::OmniTable& table =
        detail::omni_table(l, config.num_angular, config.window_sigma, xi);
    for (int j = 0; j < num_scales; ++j) {
      const double dil = static_cast<double>(1 << j);
      Spectrum spec(n);
      for (int iy = 0; iy < n; ++iy) {
        const double vy = dil * 2.0 * kPi * Spectrum::freq_of(iy, n) / n;
        for (int ix = 0; ix < n; ++ix) {
          const double vx = dil * 2.0 * kPi * Spectrum::freq_of(ix, n) / n;
          spec(ix, iy) = table.eval(vx, vy);
        }
      }
      spec.symmetrize_hermitian();
      bank.filters.emplace(FilterKey::omni(j, l), std::move(spec));
    }
  }

  // Low pass at scale J: Gaussian with half-power crossing at the first ring.
  {
    const double sigma_lp = std::sqrt(std::numbers::ln2) / xi;
    const double dil = static_cast<double>(1 << num_scales);
    Spectrum lp(n);
    for (int iy = 0; iy < n; ++iy) {
      const double vy = dil * 2.0 * kPi * Spectrum::freq_of(iy, n) / n;
      for (int ix = 0; ix < n; ++ix) {
        const double vx = dil * 2.0 * kPi * Spectrum::freq_of(ix, n) / n;
        lp(ix, iy) = std::exp(-0.5 * sigma_lp * sigma_lp * (vx * vx + vy * vy));
      }
    }
    bank.filters.emplace(FilterKey::lowpass(), std::move(lp));
  }

  // High pass: fills the corners |omega|_2 >= pi up to the plateau level of
  // the partial frame sum, so the corner coverage never limits the frame.
  {
    Image partial = detail::frame_sum(bank.filters, n);
    const double plateau = detail::min_max(partial).second;
    Spectrum hp(n);
    for (int iy = 0; iy < n; ++iy) {
      const double wy = 2.0 * kPi * Spectrum::freq_of(iy, n) / n;
      for (int ix = 0; ix < n; ++ix) {
        const double wx = 2.0 * kPi * Spectrum::freq_of(ix, n) / n;
        if (wx * wx + wy * wy >= kPi * kPi) {
          const double gap = plateau - partial(ix, iy);
          hp(ix, iy) = gap > 0 ? std::sqrt(gap) : 0.0;
        }
      }
    }
    bank.filters.emplace(FilterKey::highpass(), std::move(hp));
  }

  // Frame bounds; refuse to return a bank that cannot be inverted.
  Image total = detail::frame_sum(bank.filters, n);
  auto [lo, hi] = detail::min_max(total);
  if (lo < 1e-6) {
    std::vector<std::pair<double, double>> uncovered;
    for (int iy = 0; iy < n && uncovered.size() < 16; ++iy)
      for (int ix = 0; ix < n && uncovered.size() < 16; ++ix)
        if (total(ix, iy) < 1e-6)
          uncovered.emplace_back(2.0 * kPi * Spectrum::freq_of(ix, n) / n,
                                 2.0 * kPi * Spectrum::freq_of(iy, n) / n);
    throw FrameError("frame lower bound below 1e-6", std::move(uncovered));
  }

  if (config.tighten) {
    for (auto& [key, spec] : bank.filters)
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) spec(ix, iy) /= std::sqrt(total(ix, iy));
    total = detail::frame_sum(bank.filters, n);
    std::tie(lo, hi) = detail::min_max(total);
  }

  bank.frame_lower = lo;
  bank.frame_upper = hi;
  return bank;
}

inline FilterBank build_bank(const FilterBankConfig& config) {
  return build_bank(config, gaussian_window(config.window_sigma));
}

/// Exhaustive min/max of the frame sum over the full frequency grid.
inline std::pair<double, double> frame_bounds(const FilterBank& bank) {
  if (bank.filters.empty()) throw ShapeError("frame_bounds: empty bank");
  const int n = bank.filters.begin()->second.n();
  return detail::min_max(detail::frame_sum(bank.filters, n));
}

/// Dual filters conj(f_hat) / sum_k |f_hat_k|^2; together with the originals
/// they reconstruct any image by x = sum_k x * f_k * dual_k.
inline DualBank dual_bank(const FilterBank& bank) {
  if (bank.filters.empty()) throw ShapeError("dual_bank: empty bank");
  const int n = bank.filters.begin()->second.n();
  Image total = detail::frame_sum(bank.filters, n);
  if (detail::min_max(total).first <= 1e-6) {
    std::vector<std::pair<double, double>> uncovered;
    for (int iy = 0; iy < n && uncovered.size() < 16; ++iy)
      for (int ix = 0; ix < n && uncovered.size() < 16; ++ix)
        if (total(ix, iy) <= 1e-6)
          uncovered.emplace_back(2.0 * kPi * Spectrum::freq_of(ix, n) / n,
                                 2.0 * kPi * Spectrum::freq_of(iy, n) / n);
    throw FrameError("dual_bank: frame lower bound too small", std::move(uncovered));
  }
  DualBank duals;
  for (const auto& [key, spec] : bank.filters) {
    Spectrum d(n);
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) d(ix, iy) = std::conj(spec(ix, iy)) / total(ix, iy);
    duals.duals.emplace(key, std::move(d));
  }
  return duals;
}

/// Bank whose wavelet entries are the per-family sums over scales,
/// sum_j psi_hat_{j,alpha,beta}; low and high pass are kept. Keys reuse the
/// family key at scale 0.
inline FilterBank summed_bank(const FilterBank& bank) {
  if (bank.filters.empty()) throw ShapeError("summed_bank: empty bank");
  const int n = bank.filters.begin()->second.n();
  FilterBank out;
  out.config = bank.config;
  for (const auto& [key, spec] : bank.filters) {
    FilterKey target = key;
    if (key.is_wavelet()) target.scale = 0;
    auto [it, inserted] = out.filters.emplace(target, spec);
    if (!inserted)
      for (std::size_t i = 0; i < spec.size(); ++i) it->second[i] += spec[i];
  }
  Image total = detail::frame_sum(out.filters, n);
  auto [lo, hi] = detail::min_max(total);
  if (lo <= 1e-6) {
    std::vector<std::pair<double, double>> uncovered;
    for (int iy = 0; iy < n && uncovered.size() < 16; ++iy)
      for (int ix = 0; ix < n && uncovered.size() < 16; ++ix)
        if (total(ix, iy) <= 1e-6)
          uncovered.emplace_back(2.0 * kPi * Spectrum::freq_of(ix, n) / n,
                                 2.0 * kPi * Spectrum::freq_of(iy, n) / n);
    throw FrameError("summed_bank: frame collapsed; filter design violates the "
                     "same-sign requirement",
                     std::move(uncovered));
  }
  out.frame_lower = lo;
  out.frame_upper = hi;
  return out;
}

/// Spatial form of one filter (computed on demand; filters live in frequency).
inline Image spatial_filter(const FilterBank& bank, const FilterKey& key) {
  return fft::inverse_real(bank.at(key));
}

}  // namespace reluwave
