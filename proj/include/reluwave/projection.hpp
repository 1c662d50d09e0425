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

#include <limits>

#include "reluwave/statistics.hpp"

namespace reluwave {

/// Target Gram matrix rejected (asymmetric, indefinite, or index mismatch).
struct GramTargetError : Error {
  using Error::Error;
};

/// Diagnostics from one adjustment call. `residuals` holds named
/// achieved-vs-target distances; `notes` records non-fatal skips.
struct AdjustmentReport {
  std::vector<std::pair<std::string, double>> residuals;
  double gram_min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> notes;
};

// ---------------------------------------------------------------------------
// Variance matching
// ---------------------------------------------------------------------------

/// Scales deviations about the mean by sqrt(target/current). With
/// preserve_mean the mean is re-added (low-pass maps); without it the map is
/// scaled wholesale (high-pass and residual maps, whose mean is part of the
/// oscillation). A constant map cannot gain variance by scaling; that case is
/// skipped and noted.
inline Image match_variance(const Image& map, double target_var, bool preserve_mean,
                            AdjustmentReport* report = nullptr) {
  if (!(target_var >= 0)) throw Error("match_variance: negative target variance");
  const double current = map_variance(map);
  if (current < 1e-14) {
    if (target_var > 0 && report)
      report->notes.push_back("match_variance: constant map, variance target skipped");
    return map;
  }
  const double scale = std::sqrt(target_var / current);
  Image out(map.width(), map.height());
  if (preserve_mean) {
    const double mu = map_mean(map);
    for (std::size_t i = 0; i < map.size(); ++i) out[i] = mu + scale * (map[i] - mu);
  } else {
    for (std::size_t i = 0; i < map.size(); ++i) out[i] = scale * map[i];
  }
  if (report)
    report->residuals.emplace_back("variance", std::abs(map_variance(out) - target_var));
  return out;
}

// ---------------------------------------------------------------------------
// Pixel-moment matching
// ---------------------------------------------------------------------------

namespace detail {

inline void affine_fit(Image& x, double target_mean, double target_var) {
  const double mu = map_mean(x);
  const double var = map_variance(x);
  const double scale = var > 1e-300 ? std::sqrt(target_var / var) : 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = target_mean + scale * (x[i] - mu);
}

struct CentralMoments {
  double mean = 0, m2 = 0, m3 = 0, m4 = 0;
  double skew() const { return m2 >= 1e-12 ? m3 / std::pow(m2, 1.5) : 0.0; }
  double kurt() const { return m2 >= 1e-12 ? m4 / (m2 * m2) : 0.0; }
};

inline CentralMoments central_moments(const Image& x) {
  CentralMoments m;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) m.mean += x[i];
  m.mean /= n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - m.mean;
    const double d2 = d * d;
    m.m2 += d2;
    m.m3 += d2 * d;
    m.m4 += d2 * d2;
  }
  m.m2 /= n;
  m.m3 /= n;
  m.m4 /= n;
  return m;
}

inline double pixel_residual(const Image& x, const PixelStats& t) {
  const CentralMoments m = central_moments(x);
  const double spread = std::max(std::sqrt(t.variance), 1e-9);
  return std::abs(m.mean - t.mean) / spread +
         std::abs(m.m2 - t.variance) / std::max(t.variance, 1e-12) +
         std::abs(m.skew() - t.skewness) + std::abs(m.kurt() - t.kurtosis);
}

/// One damped root-finding move of the skewness along its pixel-space
/// gradient direction (orthogonalized against mean and variance changes).
inline void skewness_step(Image& x, double target) {
  const CentralMoments m = central_moments(x);
  if (m.m2 < 1e-12) return;
  const std::size_t count = x.size();
  const double n = static_cast<double>(count);
  std::vector<double> d(count);
  const double a = m.m3 / m.m2;
  for (std::size_t i = 0; i < count; ++i) {
    const double y = x[i] - m.mean;
    d[i] = y * y - m.m2 - a * y;
  }
  double e_d2 = 0, e_yd2 = 0, e_d3 = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double y = x[i] - m.mean;
    const double di = d[i];
    e_d2 += di * di;
    e_yd2 += y * di * di;
    e_d3 += di * di * di;
  }
  e_d2 /= n;
  e_yd2 /= n;
  e_d3 /= n;
  if (e_d2 < 1e-30) return;

  // mu2(t) and mu3(t) are exact polynomials in the step length t.
  auto mu2 = [&](double t) { return m.m2 + t * t * e_d2; };
  auto mu3 = [&](double t) {
    return m.m3 + 3.0 * t * e_d2 + 3.0 * t * t * e_yd2 + t * t * t * e_d3;
  };
  auto skew_at = [&](double t) { return mu3(t) / std::pow(mu2(t), 1.5); };

  const double t_max = std::sqrt(m.m2 / e_d2);  // damping: at most doubles mu2
  double t = 0, best_t = 0;
  double best = std::abs(skew_at(0) - target);
  for (int iter = 0; iter < 30; ++iter) {
    const double h = 1e-6 * t_max;
    const double f = skew_at(t) - target;
    const double fp = (skew_at(t + h) - skew_at(t - h)) / (2 * h);
    if (std::abs(fp) < 1e-30) break;
    t = std::clamp(t - f / fp, -t_max, t_max);
    const double err = std::abs(skew_at(t) - target);
    if (err < best) {
      best = err;
      best_t = t;
    }
    if (err < 1e-12) break;
  }
  for (std::size_t i = 0; i < count; ++i) x[i] += best_t * d[i];
}

/// Same scheme for the kurtosis; the direction is orthogonalized against
/// {1, y, y^2} so mean, variance and third moment are untouched to first
/// order.
inline void kurtosis_step(Image& x, double target) {
  const CentralMoments m = central_moments(x);
  if (m.m2 < 1e-12) return;
  const std::size_t count = x.size();
  const double n = static_cast<double>(count);
  double m5 = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double y = x[i] - m.mean;
    m5 += y * y * y * y * y;
  }
  m5 /= n;
  // Solve for d = y^3 - a y^2 - b y - c orthogonal to {1, y, y^2}.
  //   E[d]     = m3 - a m2 - c           = 0
  //   E[d y]   = m4 - a m3 - b m2        = 0
  //   E[d y^2] = m5 - a m4 - b m3 - c m2 = 0
  Eigen::Matrix3d sys;
  sys << m.m2, 0.0, 1.0,
         m.m3, m.m2, 0.0,
         m.m4, m.m3, m.m2;
  Eigen::Vector3d rhs(m.m3, m.m4, m5);
  const Eigen::Vector3d abc = sys.fullPivLu().solve(rhs);
  const double a = abc[0], b = abc[1], c = abc[2];

  std::vector<double> d(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double y = x[i] - m.mean;
    d[i] = y * y * y - a * y * y - b * y - c;
  }
  double e_d2 = 0, e_yd2 = 0, e_d3 = 0, e_y2d2 = 0, e_yd3 = 0, e_d4 = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double y = x[i] - m.mean;
    const double di = d[i];
    const double d2 = di * di;
    e_d2 += d2;
    e_yd2 += y * d2;
    e_d3 += d2 * di;
    e_y2d2 += y * y * d2;
    e_yd3 += y * d2 * di;
    e_d4 += d2 * d2;
  }
  e_d2 /= n;
  e_yd2 /= n;
  e_d3 /= n;
  e_y2d2 /= n;
  e_yd3 /= n;
  e_d4 /= n;
  if (e_d2 < 1e-30) return;

  auto mu2 = [&](double t) { return m.m2 + t * t * e_d2; };
  // E[y^3 d] = E[d^2] because d is the residual of y^3 on span{1, y, y^2}.
  auto mu4_at = [&](double t) {
    return m.m4 + 4 * t * e_d2 + 6 * t * t * e_y2d2 + 4 * t * t * t * e_yd3 +
           t * t * t * t * e_d4;
  };
  auto kurt_at = [&](double t) { return mu4_at(t) / (mu2(t) * mu2(t)); };

  const double t_max = std::sqrt(m.m2 / e_d2);
  double t = 0, best_t = 0;
  double best = std::abs(kurt_at(0) - target);
  for (int iter = 0; iter < 30; ++iter) {
    const double h = 1e-6 * t_max;
    const double f = kurt_at(t) - target;
    const double fp = (kurt_at(t + h) - kurt_at(t - h)) / (2 * h);
    if (std::abs(fp) < 1e-30) break;
    t = std::clamp(t - f / fp, -t_max, t_max);
    const double err = std::abs(kurt_at(t) - target);
    if (err < best) {
      best = err;
      best_t = t;
    }
    if (err < 1e-12) break;
  }
  for (std::size_t i = 0; i < count; ++i) x[i] += best_t * d[i];
}

}  // namespace detail

/// Portilla-Simoncelli style intensity adjustment: affine mean/variance fit,
/// damped gradient root-finding for skewness and kurtosis, range clamp, and a
/// final affine re-fit. Internal passes are accepted only while the combined
/// residual does not increase, which makes progress monotone by construction.
inline Image match_pixel_stats(const Image& x, const PixelStats& target,
                               AdjustmentReport* report = nullptr) {
  if (!(target.variance >= 0)) throw Error("match_pixel_stats: negative target variance");
  if (target.min > target.max) throw Error("match_pixel_stats: empty target range");
  if (target.min == target.max && target.variance > 0)
    throw Error("match_pixel_stats: infeasible target (zero range, positive variance)");

  if (target.variance < 1e-14) return Image(x.width(), x.height(), target.mean);

  Image out = x;
  if (map_variance(out) < 1e-14) {
    if (report) report->notes.push_back("match_pixel_stats: constant input, matching skipped");
    return out;
  }

  detail::affine_fit(out, target.mean, target.variance);
  double residual = detail::pixel_residual(out, target);
  if (report) report->residuals.emplace_back("pixel:affine", residual);

  for (int pass = 0; pass < 4 && residual > 1e-9; ++pass) {
    auto attempt = [&](auto&& step, const char* name) {
      Image trial = out;
      step(trial);
      detail::affine_fit(trial, target.mean, target.variance);
      const double r = detail::pixel_residual(trial, target);
      if (r <= residual + 1e-15) {
        out = std::move(trial);
        residual = r;
      }
      if (report) report->residuals.emplace_back(name, residual);
    };
    attempt([&](Image& im) { detail::skewness_step(im, target.skewness); }, "pixel:skew");
    attempt([&](Image& im) { detail::kurtosis_step(im, target.kurtosis); }, "pixel:kurt");
    attempt(
        [&](Image& im) {
          for (std::size_t i = 0; i < im.size(); ++i)
            im[i] = std::clamp(im[i], target.min, target.max);
        },
        "pixel:clamp");
  }
  detail::affine_fit(out, target.mean, target.variance);
  if (report) report->residuals.emplace_back("pixel:final", detail::pixel_residual(out, target));
  return out;
}

// ---------------------------------------------------------------------------
// Gram matching
// ---------------------------------------------------------------------------

namespace detail {

inline Eigen::MatrixXd floored_power(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es,
                                     double floor, double exponent) {
  Eigen::VectorXd lam = es.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    lam[i] = std::pow(std::max(lam[i], floor), exponent);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// Joint second-moment matching. Viewing the K maps as per-pixel row vectors
/// y, applies y -> y M with the symmetric transport
///   M = C^{-1/2} (C^{1/2} T C^{1/2})^{1/2} C^{-1/2},
/// which maps the measured Gram C onto the target T exactly when C has full
/// rank. Eigenvalues are floored at 1e-10 * trace/K, so rank-deficient inputs
/// yield a pseudo-solution and a reported residual instead of an exception.
inline void match_gram(const std::vector<Image*>& maps, const GramMatrix& target,
                       AdjustmentReport* report = nullptr) {
  const std::size_t k = maps.size();
  if (k != target.index.size()) throw IndexError("match_gram: family size does not match index");
  if (k == 0) return;
  const Eigen::Index ki = static_cast<Eigen::Index>(k);
  if (target.values.rows() != ki || target.values.cols() != ki)
    throw IndexError("match_gram: target matrix size mismatch");
  if ((target.values - target.values.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * std::max(1.0, target.values.cwiseAbs().maxCoeff()))
    throw GramTargetError("match_gram: target is not symmetric");

  const std::size_t n2 = maps[0]->size();
  Eigen::MatrixXd y(n2, ki);
  for (std::size_t c = 0; c < k; ++c) {
    if (maps[c]->size() != n2) throw ShapeError("match_gram: map size mismatch");
    y.col(static_cast<Eigen::Index>(c)) =
        Eigen::Map<const Eigen::VectorXd>(maps[c]->data(), static_cast<Eigen::Index>(n2));
  }
  Eigen::MatrixXd c_cur(ki, ki);
  c_cur.setZero();
  c_cur.selfadjointView<Eigen::Lower>().rankUpdate(y.transpose(), 1.0 / static_cast<double>(n2));
  c_cur.triangularView<Eigen::StrictlyUpper>() = c_cur.transpose();

  const double trace = c_cur.trace();
  if (!(trace > 0)) {
    if (report) report->notes.push_back("match_gram: zero-energy family, skipped");
    return;
  }
  const double floor = 1e-10 * trace / static_cast<double>(k);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_c(c_cur);
  if (report) report->gram_min_eigenvalue = es_c.eigenvalues().minCoeff();
  const Eigen::MatrixXd c_half = detail::floored_power(es_c, floor, 0.5);
  const Eigen::MatrixXd c_inv_half = detail::floored_power(es_c, floor, -0.5);

  Eigen::MatrixXd inner = c_half * target.values * c_half;
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_b(inner);
  const double b_scale = std::max(1.0, es_b.eigenvalues().cwiseAbs().maxCoeff());
  if (es_b.eigenvalues().minCoeff() < -1e-8 * b_scale)
    throw GramTargetError("match_gram: target is not positive semidefinite");
  const Eigen::MatrixXd b_half = detail::floored_power(es_b, 0.0, 0.5);

  Eigen::MatrixXd m = c_inv_half * b_half * c_inv_half;
  m = 0.5 * (m + m.transpose()).eval();

  const Eigen::MatrixXd y_new = y * m;
  for (std::size_t c = 0; c < k; ++c)
    Eigen::Map<Eigen::VectorXd>(maps[c]->data(), static_cast<Eigen::Index>(n2)) =
        y_new.col(static_cast<Eigen::Index>(c));

  if (report) {
    const Eigen::MatrixXd achieved = m * c_cur * m;
    report->residuals.emplace_back("gram", (achieved - target.values).norm());
  }
}

}  // namespace reluwave
