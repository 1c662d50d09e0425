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

#include <fftw3.h>

#include <map>
#include <mutex>

#include "reluwave/core.hpp"

namespace reluwave::fft {

namespace detail {

// FFTW plan creation is not thread-safe; execution on distinct buffers is.
// Plans use FFTW_ESTIMATE so the chosen algorithm (and hence rounding) is a
// pure function of the transform size.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  struct Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
  };

  Plans get(int n) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    fftw_complex* buf = fftw_alloc_complex(static_cast<std::size_t>(n) * n);
    Plans p;
    p.forward = fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    p.backward = fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_free(buf);
    plans_.emplace(n, p);
    return p;
  }

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
    }
  }
  std::mutex mu_;
  std::map<int, Plans> plans_;
};

struct FftwBuffer {
  explicit FftwBuffer(std::size_t count)
      : p(fftw_alloc_complex(count)) {}
  ~FftwBuffer() { fftw_free(p); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* p;
};

}  // namespace detail

/// Unnormalized forward DFT of a square real plane.
inline Spectrum forward(const Image& x) {
  if (!x.square()) throw ShapeError("fft: image must be square");
  const int n = x.width();
  const std::size_t count = static_cast<std::size_t>(n) * n;
  detail::FftwBuffer buf(count);
  for (std::size_t i = 0; i < count; ++i) {
    buf.p[i][0] = x[i];
    buf.p[i][1] = 0.0;
  }
  auto plans = detail::PlanCache::instance().get(n);
  fftw_execute_dft(plans.forward, buf.p, buf.p);
  Spectrum out(n);
  for (std::size_t i = 0; i < count; ++i) out[i] = {buf.p[i][0], buf.p[i][1]};
  return out;
}

/// Inverse DFT scaled by 1/n^2, real part only. The imaginary part is rounding
/// noise whenever the spectrum is Hermitian.
inline Image inverse_real(const Spectrum& s) {
  const int n = s.n();
  const std::size_t count = s.size();
  detail::FftwBuffer buf(count);
  for (std::size_t i = 0; i < count; ++i) {
    buf.p[i][0] = s[i].real();
    buf.p[i][1] = s[i].imag();
  }
  auto plans = detail::PlanCache::instance().get(n);
  fftw_execute_dft(plans.backward, buf.p, buf.p);
  Image out(n, n);
  const double scale = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = buf.p[i][0] * scale;
  return out;
}

/// Inverse DFT scaled by 1/n^2, keeping the (rounding-level) imaginary part.
/// Used by tests that assert spectra are Hermitian.
inline std::pair<Image, Image> inverse_complex(const Spectrum& s) {
  const int n = s.n();
  const std::size_t count = s.size();
  detail::FftwBuffer buf(count);
  for (std::size_t i = 0; i < count; ++i) {
    buf.p[i][0] = s[i].real();
    buf.p[i][1] = s[i].imag();
  }
  auto plans = detail::PlanCache::instance().get(n);
  fftw_execute_dft(plans.backward, buf.p, buf.p);
  Image re(n, n), im(n, n);
  const double scale = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < count; ++i) {
    re[i] = buf.p[i][0] * scale;
    im[i] = buf.p[i][1] * scale;
  }
  return {std::move(re), std::move(im)};
}

/// out += a .* b, the spectral form of circular convolution.
inline void multiply_accumulate(Spectrum& out, const Spectrum& a, const Spectrum& b) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += a[i] * b[i];
}

inline Spectrum multiply(const Spectrum& a, const Spectrum& b) {
  Spectrum out(a.n());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

/// Circular convolution x * f for a frequency-domain filter.
inline Image convolve(const Spectrum& x_hat, const Spectrum& f_hat) {
  if (x_hat.n() != f_hat.n()) throw ShapeError("convolve: grid size mismatch");
  return inverse_real(multiply(x_hat, f_hat));
}

}  // namespace reluwave::fft
