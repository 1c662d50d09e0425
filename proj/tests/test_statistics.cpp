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
#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "reluwave/profile_json.hpp"
#include "reluwave/statistics.hpp"

using namespace reluwave;
using testutil::direct_moments;
using testutil::random_image;

namespace {

FilterBankConfig make_config(int n, int j, int m, int l) {
  FilterBankConfig cfg;
  cfg.grid_size = n;
  cfg.num_scales = j;
  cfg.num_orientations = m;
  cfg.num_angular = l;
  return cfg;
}

}  // namespace

TEST_CASE("pixel stats of a constant image") {
  Image x(16, 16, 3.25);
  auto s = pixel_stats(x);
  CHECK(s.mean == 3.25);
  CHECK(s.variance == 0.0);
  CHECK(s.skewness == 0.0);
  CHECK(s.kurtosis == 0.0);
  CHECK(s.min == 3.25);
  CHECK(s.max == 3.25);
}

TEST_CASE("pixel stats of a half-zero half-one image") {
  Image x(16, 16);
  for (int y = 0; y < 16; ++y)
    for (int xx = 0; xx < 16; ++xx) x(xx, y) = y < 8 ? 0.0 : 1.0;
  auto s = pixel_stats(x);
  CHECK(s.mean == Catch::Approx(0.5).margin(1e-15));
  CHECK(s.variance == Catch::Approx(0.25).margin(1e-15));
  CHECK(s.skewness == Catch::Approx(0.0).margin(1e-15));
  CHECK(s.kurtosis == Catch::Approx(1.0).margin(1e-15));
  CHECK(s.min == 0.0);
  CHECK(s.max == 1.0);
}

TEST_CASE("pixel stats match the direct moment oracle") {
  Image x = random_image(32, 11, -2.0, 5.0);
  auto s = pixel_stats(x);
  auto m = direct_moments(x);
  CHECK(s.mean == Catch::Approx(m.mean).margin(1e-12));
  CHECK(s.variance == Catch::Approx(m.var).margin(1e-12));
  CHECK(s.skewness == Catch::Approx(m.skew).margin(1e-12));
  CHECK(s.kurtosis == Catch::Approx(m.kurt).margin(1e-12));
  CHECK(s.min == m.min);
  CHECK(s.max == m.max);
}

TEST_CASE("kurtosis of a non-constant image is at least one") {
  for (int trial = 0; trial < 10; ++trial) {
    auto s = pixel_stats(random_image(16, 100 + trial));
    CHECK(s.kurtosis >= 1.0);
    CHECK(s.min <= s.mean);
    CHECK(s.mean <= s.max);
  }
}

TEST_CASE("first layer stats of zero coefficients are zero") {
  auto bank = build_bank(make_config(16, 2, 2, 2));
  auto s1 = first_layer_stats(forward_u1(Image(16, 16), bank));
  CHECK(s1.var_low == 0.0);
  CHECK(s1.var_high == 0.0);
  CHECK(s1.gram.values.norm() == 0.0);
}

TEST_CASE("opposite-sign pairs are structural zeros") {
  auto bank = build_bank(make_config(32, 2, 2, 2));
  auto s1 = first_layer_stats(forward_u1(random_image(32, 9), bank));
  for (std::size_t a = 0; a < s1.gram.size(); ++a)
    for (std::size_t b = 0; b < s1.gram.size(); ++b)
      if (s1.gram.index[a].excluded_with(s1.gram.index[b]))
        REQUIRE(s1.gram.values(a, b) == 0.0);
}

TEST_CASE("gram matches the direct summation oracle") {
  const int n = 8;
  auto bank = build_bank(make_config(n, 1, 1, 1));
  auto u1 = forward_u1(random_image(n, 21), bank);
  auto s1 = first_layer_stats(u1);
  std::vector<const Image*> maps;
  for (const auto& [key, map] : u1.relu) maps.push_back(&map);
  for (std::size_t a = 0; a < maps.size(); ++a)
    for (std::size_t b = 0; b < maps.size(); ++b) {
      if (s1.gram.index[a].excluded_with(s1.gram.index[b])) continue;
      double acc = 0;
      for (std::size_t i = 0; i < maps[a]->size(); ++i) acc += (*maps[a])[i] * (*maps[b])[i];
      acc /= static_cast<double>(n * n);
      REQUIRE(s1.gram.values(a, b) == Catch::Approx(acc).margin(1e-14));
    }
}

TEST_CASE("gram subsumes the modulus covariance") {
  const int n = 32;
  auto bank = build_bank(make_config(n, 2, 2, 2));
  Image x = random_image(n, 33);
  auto linear = wavelet_transform(x, bank);
  auto s1 = first_layer_stats(forward_u1(x, bank));
  auto keys = bank.wavelet_keys();
  auto pos_of = [&](const FilterKey& w, int sign) {
    GramKey k{std::nullopt, w, sign};
    for (std::size_t i = 0; i < s1.gram.size(); ++i)
      if (s1.gram.index[i] == k) return i;
    FAIL("key not found");
    return std::size_t{0};
  };
  for (const auto& wa : keys)
    for (const auto& wb : keys) {
      double expected = 0;
      for (std::size_t i = 0; i < linear.at(wa).size(); ++i)
        expected += std::abs(linear.at(wa)[i]) * std::abs(linear.at(wb)[i]);
      expected /= static_cast<double>(n * n);
      double sum = 0;
      for (int ga : {+1, -1})
        for (int gb : {+1, -1}) {
          const auto ia = pos_of(wa, ga), ib = pos_of(wb, gb);
          if (s1.gram.index[ia].excluded_with(s1.gram.index[ib])) continue;  // exact zero anyway
          sum += s1.gram.values(ia, ib);
        }
      REQUIRE(sum == Catch::Approx(expected).margin(1e-10));
    }
}

TEST_CASE("second layer stats of zero input are zero") {
  auto banks = make_bank_set(make_config(16, 2, 2, 2));
  auto s2 = second_layer_stats(forward_u2(Image(16, 16), banks));
  for (const auto& [k, v] : s2.var_low) CHECK(v == 0.0);
  for (const auto& [k, v] : s2.var_high) CHECK(v == 0.0);
  for (const auto& [k, v] : s2.var_residual) CHECK(v == 0.0);
  CHECK(s2.gram.values.norm() == 0.0);
}

TEST_CASE("second layer stats match the direct summation oracle on a toy bank") {
  const int n = 16;
  auto banks = make_bank_set(make_config(n, 1, 1, 1));
  auto u2 = forward_u2(random_image(n, 5), banks);
  auto s2 = second_layer_stats(u2);
  // variances
  for (const auto& [agg, entry] : u2.items) {
    auto m = direct_moments(entry.decomp.low);
    CHECK(s2.var_low.at(agg) == Catch::Approx(m.var).margin(1e-14));
    m = direct_moments(entry.decomp.high);
    CHECK(s2.var_high.at(agg) == Catch::Approx(m.var).margin(1e-14));
  }
  // gram entries
  std::vector<const Image*> maps;
  for (const auto& [agg, entry] : u2.items)
    for (const auto& [key, map] : entry.decomp.relu) maps.push_back(&map);
  REQUIRE(maps.size() == s2.gram.size());
  for (std::size_t a = 0; a < maps.size(); ++a)
    for (std::size_t b = a; b < maps.size(); ++b) {
      if (s2.gram.index[a].excluded_with(s2.gram.index[b])) continue;
      double acc = 0;
      for (std::size_t i = 0; i < maps[a]->size(); ++i) acc += (*maps[a])[i] * (*maps[b])[i];
      acc /= static_cast<double>(n * n);
      REQUIRE(s2.gram.values(a, b) == Catch::Approx(acc).margin(1e-14));
    }
}

TEST_CASE("gram matrices are symmetric and positive semidefinite") {
  auto banks = make_bank_set(make_config(32, 2, 2, 2));
  for (int trial = 0; trial < 3; ++trial) {
    auto p = compute_profile(random_image(32, 40 + trial), banks, 2);
    for (const GramMatrix* g : {&p.s1.gram, &p.s2->gram}) {
      CHECK((g->values - g->values.transpose()).norm() == 0.0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g->values, Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues().minCoeff() >= -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff()));
      for (std::size_t i = 0; i < g->size(); ++i) CHECK(g->values(i, i) >= 0.0);
    }
  }
}

TEST_CASE("profiles are invariant under circular shifts") {
  auto banks = make_bank_set(make_config(32, 2, 2, 2));
  Image x = random_image(32, 8);
  auto ref = compute_profile(x, banks, 2);
  auto shifted = compute_profile(circular_shift(x, 7, 13), banks, 2);
  auto loss = relative_loss(ref, shifted);
  CHECK(loss.loss1 < 1e-10);
  REQUIRE(loss.loss2.has_value());
  CHECK(*loss.loss2 < 1e-10);
}

TEST_CASE("relative loss of identical profiles is zero with clamped log") {
  auto banks = make_bank_set(make_config(16, 2, 2, 2));
  auto p = compute_profile(random_image(16, 3), banks, 2);
  auto loss = relative_loss(p, p);
  CHECK(loss.loss1 == 0.0);
  CHECK(loss.log10_loss1 == -12.0);
  CHECK(*loss.loss2 == 0.0);
  CHECK(*loss.log10_loss2 == -12.0);
}

TEST_CASE("doubling every statistic gives unit loss") {
  auto banks = make_bank_set(make_config(16, 2, 2, 2));
  auto ref = compute_profile(random_image(16, 3), banks, 2);
  StatProfile cur = ref;
  cur.s0.mean *= 2;
  cur.s0.variance *= 2;
  cur.s0.skewness *= 2;
  cur.s0.kurtosis *= 2;
  cur.s0.min *= 2;
  cur.s0.max *= 2;
  cur.s1.var_low *= 2;
  cur.s1.var_high *= 2;
  cur.s1.gram.values *= 2;
  for (auto& [k, v] : cur.s2->var_low) v *= 2;
  for (auto& [k, v] : cur.s2->var_high) v *= 2;
  for (auto& [k, v] : cur.s2->var_residual) v *= 2;
  cur.s2->gram.values *= 2;
  auto loss = relative_loss(ref, cur);
  CHECK(loss.loss1 == Catch::Approx(1.0).margin(1e-12));
  CHECK(*loss.loss2 == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("relative loss matches a direct norm computation") {
  auto banks = make_bank_set(make_config(16, 2, 2, 2));
  auto a = compute_profile(random_image(16, 1), banks, 2);
  auto b = compute_profile(random_image(16, 2), banks, 2);
  auto loss = relative_loss(a, b);

  auto concat1 = [](const StatProfile& p) {
    std::vector<double> v{p.s0.mean, p.s0.variance, p.s0.skewness,
                          p.s0.kurtosis, p.s0.min, p.s0.max,
                          p.s1.var_low, p.s1.var_high};
    for (std::size_t i = 0; i < p.s1.gram.size(); ++i)
      for (std::size_t j = i; j < p.s1.gram.size(); ++j) {
        if (p.s1.gram.index[i].excluded_with(p.s1.gram.index[j])) continue;
        v.push_back(p.s1.gram.values(i, j));
      }
    return v;
  };
  auto va = concat1(a), vb = concat1(b);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    num += (vb[i] - va[i]) * (vb[i] - va[i]);
    den += va[i] * va[i];
  }
  CHECK(loss.loss1 == Catch::Approx(std::sqrt(num / den)).margin(1e-14));
}

TEST_CASE("profiles with mismatched structure are rejected") {
  auto banks_a = make_bank_set(make_config(16, 2, 2, 2));
  auto banks_b = make_bank_set(make_config(16, 1, 2, 2));
  auto a = compute_profile(random_image(16, 1), banks_a, 1);
  auto b = compute_profile(random_image(16, 2), banks_b, 1);
  CHECK_THROWS_AS(relative_loss(a, b), IndexError);
  auto c = compute_profile(random_image(16, 3), banks_a, 2);
  CHECK_THROWS_AS(relative_loss(a, c), IndexError);
}

TEST_CASE("profile serialization is deterministic") {
  auto banks = make_bank_set(make_config(16, 2, 2, 2));
  auto p = compute_profile(random_image(16, 6), banks, 2);
  const std::string once = to_json(p).dump(2);
  const std::string twice = to_json(compute_profile(random_image(16, 6), banks, 2)).dump(2);
  CHECK(once == twice);
  CHECK(once.find("\"s2\"") != std::string::npos);
}
