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

#include <Eigen/Dense>

#include "reluwave/transform.hpp"

namespace reluwave {

// ---------------------------------------------------------------------------
// Pixel statistics
// ---------------------------------------------------------------------------

struct PixelStats {
  double mean = 0, variance = 0, skewness = 0, kurtosis = 0, min = 0, max = 0;
};

/// Population moments; skewness and kurtosis are defined as 0 below the
/// variance floor so constant-color inputs stay finite.
inline PixelStats pixel_stats(const Image& x) {
  if (x.size() == 0) throw ShapeError("pixel_stats: empty image");
  PixelStats s;
  const double n = static_cast<double>(x.size());
  s.min = s.max = x[0];
  double sum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum += x[i];
    s.min = std::min(s.min, x[i]);
    s.max = std::max(s.max, x[i]);
  }
  s.mean = sum / n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - s.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  s.variance = m2;
  if (m2 >= 1e-12) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2);
  }
  return s;
}

inline double map_mean(const Image& x) {
  double sum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += x[i];
  return sum / static_cast<double>(x.size());
}

inline double map_variance(const Image& x) {
  const double mu = map_mean(x);
  double acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mu;
    acc += d * d;
  }
  return acc / static_cast<double>(x.size());
}

// ---------------------------------------------------------------------------
// Gram statistics
// ---------------------------------------------------------------------------

/// Index entry of a Gram matrix row/column. First-layer entries carry no
/// aggregate; second-layer entries name the aggregate the map came from.
struct GramKey {
  std::optional<AggregateKey> aggregate;
  FilterKey wavelet;
  int sign = +1;

  auto operator<=>(const GramKey&) const = default;

  /// Structural-zero partner: same map stack, opposite rectification sign.
  bool excluded_with(const GramKey& o) const {
    return aggregate == o.aggregate && wavelet == o.wavelet && sign == -o.sign;
  }

  std::string str() const {
    std::string s;
    if (aggregate) s = aggregate->str() + "|";
    s += wavelet.str();
    s += sign > 0 ? ":+1" : ":-1";
    return s;
  }
};

/// Correlation statistics C(k, k') = (1/N^2) sum_u map_k(u) map_k'(u) between
/// rectified maps. Entries pairing a map with its opposite-sign partner are
/// structural zeros: stored as exact 0 and never matched.
struct GramMatrix {
  std::vector<GramKey> index;
  Eigen::MatrixXd values;

  std::size_t size() const { return index.size(); }

  bool same_index(const GramMatrix& o) const {
    return index == o.index;
  }
};

/// Gram of an ordered family of equally sized maps.
inline Eigen::MatrixXd gram_values(const std::vector<const Image*>& maps) {
  const std::size_t k = maps.size();
  if (k == 0) return Eigen::MatrixXd();
  const std::size_t n2 = maps[0]->size();
  Eigen::MatrixXd y(n2, k);
  for (std::size_t c = 0; c < k; ++c) {
    if (maps[c]->size() != n2) throw ShapeError("gram_values: map size mismatch");
    y.col(c) = Eigen::Map<const Eigen::VectorXd>(maps[c]->data(), n2);
  }
  Eigen::MatrixXd c(k, k);
  c.setZero();
  c.selfadjointView<Eigen::Lower>().rankUpdate(y.transpose(), 1.0 / static_cast<double>(n2));
  c.triangularView<Eigen::StrictlyUpper>() = c.transpose();
  return c;
}

namespace detail {

inline void apply_structural_zeros(GramMatrix& gram) {
  for (std::size_t a = 0; a < gram.size(); ++a)
    for (std::size_t b = a + 1; b < gram.size(); ++b)
      if (gram.index[a].excluded_with(gram.index[b])) {
        gram.values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = 0.0;
        gram.values(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = 0.0;
      }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Layer statistics
// ---------------------------------------------------------------------------

struct FirstLayerStats {
  double var_low = 0;
  double var_high = 0;
  GramMatrix gram;
};

struct SecondLayerStats {
  std::map<AggregateKey, double> var_low;
  std::map<AggregateKey, double> var_high;
  std::map<AggregateKey, double> var_residual;  ///< directional aggregates only
  GramMatrix gram;
};

struct StatProfile {
  PixelStats s0;
  FirstLayerStats s1;
  std::optional<SecondLayerStats> s2;
};

inline FirstLayerStats first_layer_stats(const CoefficientSet& coeffs) {
  FirstLayerStats out;
  out.var_low = map_variance(coeffs.low);
  out.var_high = map_variance(coeffs.high);
  std::vector<const Image*> maps;
  for (const auto& [key, map] : coeffs.relu) {
    out.gram.index.push_back(GramKey{std::nullopt, key.wavelet, key.sign});
    maps.push_back(&map);
  }
  out.gram.values = gram_values(maps);
  detail::apply_structural_zeros(out.gram);
  return out;
}

/// Joint second-layer statistics: per-aggregate low/high/residual variances
/// and one Gram matrix over all rectified second-layer maps, cross-aggregate
/// pairs included.
inline SecondLayerStats second_layer_stats(const SecondLayerSet& u2) {
  SecondLayerStats out;
  std::vector<const Image*> maps;
  for (const auto& [agg, entry] : u2.items) {
    out.var_low.emplace(agg, map_variance(entry.decomp.low));
    out.var_high.emplace(agg, map_variance(entry.decomp.high));
    if (entry.decomp.residual)
      out.var_residual.emplace(agg, map_variance(*entry.decomp.residual));
    for (const auto& [key, map] : entry.decomp.relu) {
      out.gram.index.push_back(GramKey{agg, key.wavelet, key.sign});
      maps.push_back(&map);
    }
  }
  out.gram.values = gram_values(maps);
  detail::apply_structural_zeros(out.gram);
  return out;
}

inline StatProfile compute_profile(const Image& x, const BankSet& banks, int layers) {
  StatProfile p;
  p.s0 = pixel_stats(x);
  const CoefficientSet u1 = forward_u1(x, banks.bank);
  p.s1 = first_layer_stats(u1);
  if (layers >= 2) p.s2 = second_layer_stats(forward_u2(u1, banks));
  return p;
}

// ---------------------------------------------------------------------------
// Relative loss
// ---------------------------------------------------------------------------

struct LossReport {
  double loss1 = 0;
  double log10_loss1 = -12;
  std::optional<double> loss2;
  std::optional<double> log10_loss2;
};

namespace detail {

inline void append_gram(std::vector<double>& v, const GramMatrix& g) {
  for (std::size_t a = 0; a < g.size(); ++a)
    for (std::size_t b = a; b < g.size(); ++b) {
      if (g.index[a].excluded_with(g.index[b])) continue;
      v.push_back(g.values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
    }
}

inline std::vector<double> layer1_vector(const StatProfile& p) {
  std::vector<double> v{p.s0.mean, p.s0.variance, p.s0.skewness,
                        p.s0.kurtosis, p.s0.min, p.s0.max,
                        p.s1.var_low, p.s1.var_high};
  append_gram(v, p.s1.gram);
  return v;
}

inline std::vector<double> layer2_vector(const SecondLayerStats& s) {
  std::vector<double> v;
  for (const auto& [k, x] : s.var_low) v.push_back(x);
  for (const auto& [k, x] : s.var_high) v.push_back(x);
  for (const auto& [k, x] : s.var_residual) v.push_back(x);
  append_gram(v, s.gram);
  return v;
}

inline double relative_norm_distance(const std::vector<double>& ref,
                                     const std::vector<double>& cur) {
  if (ref.size() != cur.size()) throw IndexError("relative_loss: statistic count mismatch");
  double num = 0, den = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = cur[i] - ref[i];
    num += d * d;
    den += ref[i] * ref[i];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::sqrt(num);
  return std::sqrt(num / den);
}

inline double clamped_log10(double loss) {
  if (!(loss > 1e-12)) return -12.0;
  return std::max(std::log10(loss), -12.0);
}

template <class K>
inline void require_same_keys(const std::map<K, double>& a, const std::map<K, double>& b,
                              const char* what) {
  if (a.size() != b.size()) throw IndexError(std::string("relative_loss: ") + what);
  auto ia = a.begin();
  auto ib = b.begin();
  for (; ia != a.end(); ++ia, ++ib)
    if (ia->first != ib->first) throw IndexError(std::string("relative_loss: ") + what);
}

}  // namespace detail

/// Per-layer relative Euclidean distance between two profiles. Pixel
/// statistics fold into the first-layer loss; structural zeros are skipped.
inline LossReport relative_loss(const StatProfile& reference, const StatProfile& current) {
  if (!reference.s1.gram.same_index(current.s1.gram))
    throw IndexError("relative_loss: first-layer gram index mismatch");
  LossReport r;
  r.loss1 = detail::relative_norm_distance(detail::layer1_vector(reference),
                                           detail::layer1_vector(current));
  r.log10_loss1 = detail::clamped_log10(r.loss1);
  if (reference.s2 && current.s2) {
    if (!reference.s2->gram.same_index(current.s2->gram))
      throw IndexError("relative_loss: second-layer gram index mismatch");
    detail::require_same_keys(reference.s2->var_low, current.s2->var_low, "var_low keys");
    detail::require_same_keys(reference.s2->var_high, current.s2->var_high, "var_high keys");
    detail::require_same_keys(reference.s2->var_residual, current.s2->var_residual,
                              "var_residual keys");
    r.loss2 = detail::relative_norm_distance(detail::layer2_vector(*reference.s2),
                                             detail::layer2_vector(*current.s2));
    r.log10_loss2 = detail::clamped_log10(*r.loss2);
  } else if (reference.s2 || current.s2) {
    throw IndexError("relative_loss: one profile has second-layer statistics, the other not");
  }
  return r;
}

}  // namespace reluwave
