// tests/unit/test_numerics.cc

// Copyright 2026  The tslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string_view>

#include <doctest.h>

#include "test_support.h"
#include "tslab/error.h"
#include "tslab/numerics.h"

using namespace tslab;
using tslab::testing::RandomDoubles;
using tslab::testing::Rng;

namespace {

long double DirectLogSum(const std::vector<double>& v) {
  long double s = 0.0L;
  for (double x : v) s += std::exp(static_cast<long double>(x));
  return std::log(s);
}

}  // namespace

TEST_CASE("log-sum-exp examples") {
  std::vector<double> halves{std::log(0.5), std::log(0.5)};
  CHECK(LogSumExp(halves) == doctest::Approx(0.0).epsilon(1e-15));
  std::vector<double> with_zero{kLogZero, -1.25};
  CHECK(LogSumExp(with_zero) == -1.25);
  std::vector<double> v{0.0, 1.0, 2.0};
  CHECK(std::abs(LogSumExp(v) - static_cast<double>(DirectLogSum(v))) < 1e-15);
  std::vector<double> zeros{kLogZero, kLogZero};
  CHECK(LogSumExp(zeros) == kLogZero);
  CHECK_THROWS_AS(LogSumExp(std::vector<double>{}), ContractViolation);
}

TEST_CASE("log-sum-exp is permutation invariant and ignores zero terms") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto v = RandomDoubles(1 + trial % 9, -30.0, 5.0, rng);
    double base = LogSumExp(v);
    CHECK(std::abs(base - static_cast<double>(DirectLogSum(v))) < 1e-12);
    auto w = v;
    std::shuffle(w.begin(), w.end(), rng);
    CHECK(LogSumExp(w) == doctest::Approx(base).epsilon(1e-15));
    w.push_back(kLogZero);
    CHECK(LogSumExp(w) == doctest::Approx(base).epsilon(1e-15));
  }
}

TEST_CASE("log-add agrees with log-sum-exp") {
  CHECK(LogAdd(kLogZero, -3.0) == -3.0);
  CHECK(LogAdd(-3.0, kLogZero) == -3.0);
  CHECK(LogAdd(kLogZero, kLogZero) == kLogZero);
  CHECK(LogAdd(std::log(0.25), std::log(0.75)) ==
        doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("stable softmax examples") {
  auto p = StableSoftmax(std::vector<double>{0.0, 0.0});
  CHECK(p[0] == 0.5);
  CHECK(p[1] == 0.5);
  for (double c : {-700.0, -3.0, 0.0, 42.0, 900.0}) {
    auto q = StableSoftmax(std::vector<double>{c, c, c, c});
    for (double x : q) CHECK(x == doctest::Approx(0.25).epsilon(1e-15));
  }
  std::vector<double> z{1.0, 2.0, 3.0};
  auto r = StableSoftmax(z);
  long double s = 0.0L;
  for (double x : z) s += std::exp(static_cast<long double>(x));
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(r[i] - static_cast<double>(std::exp((long double)z[i]) / s)) <
          1e-15);
  CHECK_THROWS_AS(StableSoftmax(std::vector<double>{}), ContractViolation);
  CHECK_THROWS_AS(
      StableSoftmax(std::vector<double>{0.0, std::numeric_limits<double>::infinity()}),
      ContractViolation);
  CHECK_THROWS_AS(
      StableSoftmax(std::vector<double>{std::numeric_limits<double>::quiet_NaN()}),
      ContractViolation);
}

TEST_CASE("stable softmax normalizes and is shift invariant") {
  Rng rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    auto z = RandomDoubles(1 + trial % 7, -1e3, 1e3, rng);
    auto p = StableSoftmax(z);
    double sum = 0.0;
    for (double x : p) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
    auto shifted = z;
    for (double& x : shifted) x += 17.0;
    auto q = StableSoftmax(shifted);
    for (std::size_t i = 0; i < p.size(); ++i)
      CHECK(std::abs(p[i] - q[i]) < 1e-12);
    auto lp = LogSoftmax(z);
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] > 1e-300) CHECK(std::exp(lp[i]) == doctest::Approx(p[i]));
  }
}

TEST_CASE("finite-difference gradient") {
  ScalarLoss square = [](std::span<const double> t) { return t[0] * t[0]; };
  std::vector<double> theta{3.0};
  auto g = FiniteDiffGradient(square, theta, 1e-5);
  CHECK(std::abs(g[0] - 6.0) < 1e-6);

  ScalarLoss constant = [](std::span<const double>) { return 4.5; };
  std::vector<double> many{1.0, -2.0, 0.25};
  for (double x : FiniteDiffGradient(constant, many, 1e-5)) CHECK(x == 0.0);

  ScalarLoss blows_up = [](std::span<const double> t) {
    return t[1] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  };
  std::vector<double> at_zero{0.0, 0.0};
  try {
    FiniteDiffGradient(blows_up, at_zero, 1e-5);
    FAIL("expected OracleFailure");
  } catch (const OracleFailure& e) {
    CHECK(std::string_view(e.what()).find('1') != std::string_view::npos);
  }
  CHECK_THROWS_AS(FiniteDiffGradient(square, theta, 0.0), ContractViolation);
}

TEST_CASE("gradient check report and relative error") {
  CHECK(GradRelativeError(1.0, 1.0) == 0.0);
  CHECK(GradRelativeError(0.0, 0.0) == 0.0);
  CHECK(GradRelativeError(2.0, 1.0) == doctest::Approx(0.5));
  CHECK(GradRelativeError(1e-12, 0.0) == doctest::Approx(1e-4));

  ScalarLoss f = [](std::span<const double> t) {
    return std::sin(t[0]) * t[1] + std::exp(0.5 * t[1]);
  };
  std::vector<double> theta{0.3, -0.7};
  std::vector<double> analytic{std::cos(0.3) * -0.7,
                               std::sin(0.3) + 0.5 * std::exp(-0.35)};
  auto report = CheckGradient(f, theta, analytic);
  CHECK(report.analytic.size() == 2);
  CHECK(report.numeric.size() == 2);
  CHECK(report.max_rel_error < 1e-8);
  std::vector<double> wrong{analytic[0], analytic[1] + 0.1};
  auto bad = CheckGradient(f, theta, wrong);
  CHECK(bad.worst_index == 1);
  CHECK(bad.max_rel_error > 1e-2);
  CHECK_THROWS_AS(CheckGradient(f, theta, std::vector<double>{1.0}),
                  ContractViolation);
}

TEST_CASE("FNV-1a reference values") {
  std::string_view empty, a("a"), foobar("foobar");
  CHECK(Fnv1a64(empty) == 0xcbf29ce484222325ULL);
  CHECK(Fnv1a64(a) == 0xaf63dc4c8601ec8cULL);
  CHECK(Fnv1a64(foobar) == 0x85944171f73967e8ULL);
}
