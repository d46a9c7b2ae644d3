// core/include/tslab/numerics.h

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

#ifndef TSLAB_NUMERICS_H_
#define TSLAB_NUMERICS_H_

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace tslab {

// Natural-log probability. Negative infinity is an exact zero and must stay
// negative infinity through every accumulation.
using LogProb = double;

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// log(sum_i exp(values[i])) with max-shifting. Throws ContractViolation on an
// empty input; returns kLogZero when every input is kLogZero.
LogProb LogSumExp(std::span<const double> values);

// Two-argument form of LogSumExp.
LogProb LogAdd(LogProb a, LogProb b);

// Softmax of finite logits; throws ContractViolation on empty or non-finite
// input.
std::vector<double> StableSoftmax(std::span<const double> logits);
std::vector<double> LogSoftmax(std::span<const double> logits);

using ScalarLoss = std::function<double(std::span<const double>)>;

// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) for every
// coordinate. A non-finite probe raises OracleFailure naming the coordinate.
std::vector<double> FiniteDiffGradient(const ScalarLoss& loss_fn,
                                       std::span<const double> params,
                                       double epsilon);

// |a - n| / max(|a|, |n|, 1e-8).
double GradRelativeError(double analytic, double numeric);

struct GradCheckReport {
  std::vector<double> analytic;
  std::vector<double> numeric;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
};

// Compares an analytic gradient against FiniteDiffGradient(loss_fn, params,
// epsilon). Throws ContractViolation if analytic.size() != params.size().
GradCheckReport CheckGradient(const ScalarLoss& loss_fn,
                              std::span<const double> params,
                              std::span<const double> analytic,
                              double epsilon = 1e-5);

// Stable 64-bit FNV-1a, used for config hashes in result records.
unsigned long long Fnv1a64(std::span<const char> bytes);

}  // namespace tslab

#endif  // TSLAB_NUMERICS_H_
