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

#include <filesystem>
#include <fstream>
#include <optional>

#include "reluwave/filterbank.hpp"

namespace reluwave {

// ---------------------------------------------------------------------------
// First layer
// ---------------------------------------------------------------------------

/// Key of one rectified map: wavelet index and the sign gamma applied before
/// the ReLU.
struct ReluKey {
  FilterKey wavelet;
  int sign = +1;

  auto operator<=>(const ReluKey&) const = default;

  std::string str() const { return wavelet.str() + (sign > 0 ? ":+1" : ":-1"); }
};

/// First-layer coefficients: linear low/high maps plus the rectified wavelet
/// pairs sigma(+w), sigma(-w). `residual` is only populated for the reduced
/// second-layer banks, where the complement filter passes through linearly.
struct CoefficientSet {
  Image low;
  Image high;
  std::optional<Image> residual;
  std::map<ReluKey, Image> relu;

  int grid_size() const { return low.width(); }
};

/// Linear multiscale transform: x convolved with every filter of the bank.
inline std::map<FilterKey, Image> wavelet_transform(const Image& x, const FilterBank& bank) {
  if (!x.square() || x.width() != bank.config.grid_size)
    throw ShapeError("wavelet_transform: image does not match the bank grid");
  const Spectrum x_hat = fft::forward(x);
  std::map<FilterKey, Image> out;
  for (const auto& [key, spec] : bank.filters)
    out.emplace(key, fft::inverse_real(fft::multiply(x_hat, spec)));
  return out;
}

/// Nonlinear first layer: low and high pass through linearly, every wavelet
/// response is split into the rectified pair sigma(w), sigma(-w).
inline CoefficientSet forward_u1(const Image& x, const FilterBank& bank) {
  if (!x.square() || x.width() != bank.config.grid_size)
    throw ShapeError("forward_u1: image does not match the bank grid");
  const Spectrum x_hat = fft::forward(x);
  CoefficientSet out;
  for (const auto& [key, spec] : bank.filters) {
    Image w = fft::inverse_real(fft::multiply(x_hat, spec));
    switch (key.kind) {
      case FilterKind::LowPass:
        out.low = std::move(w);
        break;
      case FilterKind::HighPass:
        out.high = std::move(w);
        break;
      case FilterKind::Residual:
        out.residual = std::move(w);
        break;
      default: {
        Image pos(w.width(), w.height()), neg(w.width(), w.height());
        for (std::size_t i = 0; i < w.size(); ++i) {
          pos[i] = w[i] > 0 ? w[i] : 0.0;
          neg[i] = w[i] < 0 ? -w[i] : 0.0;
        }
        out.relu.emplace(ReluKey{key, +1}, std::move(pos));
        out.relu.emplace(ReluKey{key, -1}, std::move(neg));
      }
    }
  }
  return out;
}

/// Dual-frame synthesis. The rectified pairs are re-linearized through
/// t = sigma(t) - sigma(-t) and pushed through the dual filters. Exact for
/// unmodified forward output; for adjusted coefficient sets this is the
/// least-squares pullback that makes the projection loop a projection.
inline Image invert_u1(const CoefficientSet& coeffs, const DualBank& duals) {
  const int n = coeffs.grid_size();
  Spectrum acc(n);
  for (const auto& [key, dual] : duals.duals) {
    if (dual.n() != n) throw ShapeError("invert_u1: dual grid mismatch");
    switch (key.kind) {
      case FilterKind::LowPass:
        fft::multiply_accumulate(acc, fft::forward(coeffs.low), dual);
        break;
      case FilterKind::HighPass:
        fft::multiply_accumulate(acc, fft::forward(coeffs.high), dual);
        break;
      case FilterKind::Residual: {
        if (!coeffs.residual) throw IndexError("invert_u1: missing residual map");
        fft::multiply_accumulate(acc, fft::forward(*coeffs.residual), dual);
        break;
      }
      default: {
        auto pos = coeffs.relu.find(ReluKey{key, +1});
        auto neg = coeffs.relu.find(ReluKey{key, -1});
        if (pos == coeffs.relu.end() || neg == coeffs.relu.end())
          throw IndexError("invert_u1: missing rectified pair for " + key.str());
        fft::multiply_accumulate(acc, fft::forward(pos->second - neg->second), dual);
      }
    }
  }
  return fft::inverse_real(acc);
}

// ---------------------------------------------------------------------------
// Second layer
// ---------------------------------------------------------------------------

/// Key of one scale-aggregated map: wavelet family (orientation or angular
/// frequency), parity folded into the kind, and the first-layer sign gamma_1.
struct AggregateKey {
  FilterKind kind = FilterKind::DirectionalEven;  ///< family: even/odd/omni
  int index = 0;                                  ///< m or l
  int sign = +1;                                  ///< gamma_1

  auto operator<=>(const AggregateKey&) const = default;

  std::string str() const {
    const char* k = kind == FilterKind::DirectionalEven ? "e"
                    : kind == FilterKind::DirectionalOdd ? "o"
                                                         : "p";
    std::ostringstream os;
    os << "agg:" << k << ":" << index << (sign > 0 ? ":+1" : ":-1");
    return os.str();
  }
};

struct SecondLayerEntry {
  Image aggregate;        ///< sum over scales of the rectified maps
  CoefficientSet decomp;  ///< first-layer transform of the aggregate
};

struct SecondLayerSet {
  std::map<AggregateKey, SecondLayerEntry> items;
};

/// All banks one synthesis run needs: the analysis bank and duals, the
/// scale-summed bank and duals (the final inversion step), and per-orientation
/// reduced banks for the directional second layer.
struct BankSet {
  FilterBankConfig config;
  FilterBank bank;
  DualBank duals;
  FilterBank summed;
  DualBank summed_duals;
  std::vector<FilterBank> reduced;       ///< indexed by orientation m
  std::vector<DualBank> reduced_duals;
};

namespace detail {

/// Reduced bank for directional aggregates at orientation m: low pass, high
/// pass, the directional wavelets at that orientation (both parities, all
/// scales), and a residual filter equal to the exact spectral complement
/// sqrt(S_full - S_reduced). The reduced frame sum therefore equals the full
/// bank's frame sum pointwise.
inline FilterBank make_reduced_bank(const FilterBank& bank, int orientation) {
  const int n = bank.config.grid_size;
  FilterBank out;
  out.config = bank.config;
  out.filters.emplace(FilterKey::lowpass(), bank.at(FilterKey::lowpass()));
  out.filters.emplace(FilterKey::highpass(), bank.at(FilterKey::highpass()));
  for (int j = 0; j < bank.config.num_scales; ++j) {
    out.filters.emplace(FilterKey::directional(j, orientation, false),
                        bank.at(FilterKey::directional(j, orientation, false)));
    out.filters.emplace(FilterKey::directional(j, orientation, true),
                        bank.at(FilterKey::directional(j, orientation, true)));
  }
  const Image full = frame_sum(bank.filters, n);
  const Image part = frame_sum(out.filters, n);
  Spectrum residual(n);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const double gap = full(ix, iy) - part(ix, iy);
      residual(ix, iy) = gap > 0 ? std::sqrt(gap) : 0.0;
    }
  out.filters.emplace(FilterKey::residual(), std::move(residual));
  auto [lo, hi] = min_max(frame_sum(out.filters, n));
  out.frame_lower = lo;
  out.frame_upper = hi;
  return out;
}

}  // namespace detail

inline BankSet make_bank_set(const FilterBankConfig& config) {
  BankSet set;
  set.config = config;
  set.bank = build_bank(config);
  set.duals = dual_bank(set.bank);
  set.summed = summed_bank(set.bank);
  set.summed_duals = dual_bank(set.summed);
  set.reduced.reserve(config.num_orientations);
  for (int m = 0; m < config.num_orientations; ++m) {
    set.reduced.push_back(detail::make_reduced_bank(set.bank, m));
    set.reduced_duals.push_back(dual_bank(set.reduced.back()));
  }
  return set;
}

namespace detail {

inline const FilterBank& second_layer_bank(const BankSet& banks, const AggregateKey& key) {
  if (key.kind == FilterKind::Omni) return banks.bank;
  return banks.reduced.at(static_cast<std::size_t>(key.index));
}

inline const DualBank& second_layer_duals(const BankSet& banks, const AggregateKey& key) {
  if (key.kind == FilterKind::Omni) return banks.duals;
  return banks.reduced_duals.at(static_cast<std::size_t>(key.index));
}

}  // namespace detail

/// Second layer from existing first-layer coefficients: sum the rectified
/// maps of each wavelet family over scales, then decompose every aggregate
/// with its second-layer bank (orientation-reduced for directional families,
/// the full bank for omnidirectional ones).
inline SecondLayerSet forward_u2(const CoefficientSet& u1, const BankSet& banks) {
  const FilterBankConfig& cfg = banks.config;
  const int n = cfg.grid_size;
  SecondLayerSet out;
  auto aggregate_of = [&](FilterKind kind, int index, int sign) {
    Image agg(n, n);
    for (int j = 0; j < cfg.num_scales; ++j) {
      const ReluKey key{FilterKey{kind, j, index}, sign};
      auto it = u1.relu.find(key);
      if (it == u1.relu.end()) throw IndexError("forward_u2: missing map " + key.str());
      agg += it->second;
    }
    return agg;
  };
  auto add = [&](FilterKind kind, int count) {
    for (int index = 0; index < count; ++index)
      for (int sign : {+1, -1}) {
        AggregateKey key{kind, index, sign};
        SecondLayerEntry entry;
        entry.aggregate = aggregate_of(kind, index, sign);
        entry.decomp = forward_u1(entry.aggregate, detail::second_layer_bank(banks, key));
        out.items.emplace(key, std::move(entry));
      }
  };
  add(FilterKind::DirectionalEven, cfg.num_orientations);
  add(FilterKind::DirectionalOdd, cfg.num_orientations);
  add(FilterKind::Omni, cfg.num_angular);
  return out;
}

inline SecondLayerSet forward_u2(const Image& x, const BankSet& banks) {
  return forward_u2(forward_u1(x, banks.bank), banks);
}

/// Inversion of {x * phi_J, x * h, U^2 x}: recover each aggregate by inverting
/// its decomposition, re-linearize the gamma_1 pairs into the scale-summed
/// responses x * sum_j psi, and resynthesize with the summed bank's duals.
inline Image invert_u2(const Image& low, const Image& high, const SecondLayerSet& u2,
                       const BankSet& banks) {
  const FilterBankConfig& cfg = banks.config;
  const int n = cfg.grid_size;
  std::map<AggregateKey, Image> aggregates;
  for (const auto& [key, entry] : u2.items)
    aggregates.emplace(key, invert_u1(entry.decomp, detail::second_layer_duals(banks, key)));

  Spectrum acc(n);
  fft::multiply_accumulate(acc, fft::forward(low), banks.summed_duals.at(FilterKey::lowpass()));
  fft::multiply_accumulate(acc, fft::forward(high), banks.summed_duals.at(FilterKey::highpass()));
  auto add = [&](FilterKind kind, int count) {
    for (int index = 0; index < count; ++index) {
      auto pos = aggregates.find(AggregateKey{kind, index, +1});
      auto neg = aggregates.find(AggregateKey{kind, index, -1});
      if (pos == aggregates.end() || neg == aggregates.end())
        throw IndexError("invert_u2: missing aggregate pair");
      fft::multiply_accumulate(acc, fft::forward(pos->second - neg->second),
                               banks.summed_duals.at(FilterKey{kind, 0, index}));
    }
  };
  add(FilterKind::DirectionalEven, cfg.num_orientations);
  add(FilterKind::DirectionalOdd, cfg.num_orientations);
  add(FilterKind::Omni, cfg.num_angular);
  return fft::inverse_real(acc);
}

// ---------------------------------------------------------------------------
// Coefficient dumps (debugging / golden tests)
// ---------------------------------------------------------------------------

namespace detail {

inline void write_f32_map(const std::filesystem::path& path, const Image& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t i = 0; i < map.size(); ++i) {
    const float v = static_cast<float>(map[i]);
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
}

inline Image read_f32_map(const std::filesystem::path& path, int w, int h) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  Image map(w, h);
  for (std::size_t i = 0; i < map.size(); ++i) {
    float v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    map[i] = v;
  }
  if (!in) throw IoError("truncated map file " + path.string());
  return map;
}

}  // namespace detail

/// Writes every map as raw little-endian float32 plus a manifest of
/// "key file width height" lines.
inline void dump_coefficient_set(const CoefficientSet& coeffs, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw IoError("cannot write manifest in " + dir.string());
  int counter = 0;
  auto emit = [&](const std::string& key, const Image& map) {
    std::ostringstream name;
    name << "map_" << counter++ << ".f32";
    detail::write_f32_map(dir / name.str(), map);
    manifest << key << " " << name.str() << " " << map.width() << " " << map.height() << "\n";
  };
  emit("low", coeffs.low);
  emit("high", coeffs.high);
  if (coeffs.residual) emit("residual", *coeffs.residual);
  for (const auto& [key, map] : coeffs.relu) emit("relu:" + key.str(), map);
}

inline CoefficientSet load_coefficient_set(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw IoError("cannot read manifest in " + dir.string());
  CoefficientSet out;
  std::string key, file;
  int w = 0, h = 0;
  while (manifest >> key >> file >> w >> h) {
    Image map = detail::read_f32_map(dir / file, w, h);
    if (key == "low") {
      out.low = std::move(map);
    } else if (key == "high") {
      out.high = std::move(map);
    } else if (key == "residual") {
      out.residual = std::move(map);
    } else if (key.rfind("relu:", 0) == 0) {
      const std::string rest = key.substr(5);
      const auto cut = rest.rfind(':');
      const FilterKey wavelet = parse_filter_key(rest.substr(0, cut));
      const int sign = rest.substr(cut + 1) == "+1" ? +1 : -1;
      out.relu.emplace(ReluKey{wavelet, sign}, std::move(map));
    } else {
      throw IoError("unknown manifest key " + key);
    }
  }
  return out;
}

}  // namespace reluwave
