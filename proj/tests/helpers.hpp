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

#include <vector>

#include "reluwave/core.hpp"
#include "reluwave/fft.hpp"

namespace testutil {

using reluwave::Image;
using reluwave::Rng;

inline Image random_image(int n, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  Rng rng(seed);
  Image x(n, n);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(lo, hi);
  return x;
}

inline Image random_gaussian_image(int n, std::uint64_t seed) {
  Rng rng(seed);
  Image x(n, n);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.gaussian();
  return x;
}

/// O(N^4) circular convolution; the independent oracle for all FFT filtering.
inline Image direct_circular_convolution(const Image& x, const Image& f) {
  const int n = x.width();
  Image out(n, n);
  for (int y = 0; y < n; ++y)
    for (int x0 = 0; x0 < n; ++x0) {
      double acc = 0.0;
      for (int v = 0; v < n; ++v)
        for (int u = 0; u < n; ++u)
          acc += x(u, v) * f(((x0 - u) % n + n) % n, ((y - v) % n + n) % n);
      out(x0, y) = acc;
    }
  return out;
}

/// Two-pass population moments; the independent oracle for pixel statistics.
struct DirectMoments {
  double mean = 0, var = 0, skew = 0, kurt = 0, min = 0, max = 0;
};

inline DirectMoments direct_moments(const Image& x) {
  DirectMoments m;
  const double n = static_cast<double>(x.size());
  m.min = m.max = x[0];
  for (std::size_t i = 0; i < x.size(); ++i) {
    m.mean += x[i];
    m.min = std::min(m.min, x[i]);
    m.max = std::max(m.max, x[i]);
  }
  m.mean /= n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - m.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.var = m2;
  if (m2 > 1e-12) {
    m.skew = m3 / std::pow(m2, 1.5);
    m.kurt = m4 / (m2 * m2);
  }
  return m;
}

/// Micro-texture used by the synthesis convergence checks: band-limited
/// filtered noise, strictly inside [0, 1].
inline Image filtered_noise_texture(int n, std::uint64_t seed) {
  using namespace reluwave;
  Image noise = random_gaussian_image(n, seed);
  Spectrum s = fft::forward(noise);
  for (int iy = 0; iy < n; ++iy) {
    const double wy = s.omega_y(iy);
    for (int ix = 0; ix < n; ++ix) {
      const double wx = s.omega_x(ix);
      const double w2 = wx * wx + wy * wy;
      s(ix, iy) *= std::exp(-w2 / 1.5);
    }
  }
  Image smooth = fft::inverse_real(s);
  double lo = smooth[0], hi = smooth[0];
  for (std::size_t i = 0; i < smooth.size(); ++i) {
    lo = std::min(lo, smooth[i]);
    hi = std::max(hi, smooth[i]);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t i = 0; i < smooth.size(); ++i)
    smooth[i] = 0.05 + 0.9 * (smooth[i] - lo) / span;
  return smooth;
}

}  // namespace testutil
