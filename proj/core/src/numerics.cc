// core/src/numerics.cc

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

#include "tslab/numerics.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "tslab/error.h"

namespace tslab {

LogProb LogSumExp(std::span<const double> values) {
  if (values.empty())
    throw ContractViolation("LogSumExp: empty input");
  double max_value = kLogZero;
  for (double v : values) max_value = std::max(max_value, v);
  if (max_value == kLogZero) return kLogZero;
  if (std::isinf(max_value)) return max_value;  // +inf is absorbing
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max_value);
  return max_value + std::log(sum);
}

LogProb LogAdd(LogProb a, LogProb b) {
  if (a < b) std::swap(a, b);
  if (b == kLogZero) return a;
  return a + std::log1p(std::exp(b - a));
}

std::vector<double> StableSoftmax(std::span<const double> logits) {
  if (logits.empty())
    throw ContractViolation("StableSoftmax: empty input");
  double max_logit = logits[0];
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i]))
      throw ContractViolation("StableSoftmax: non-finite logit at index " +
                              std::to_string(i));
    max_logit = std::max(max_logit, logits[i]);
  }
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max_logit);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

std::vector<double> LogSoftmax(std::span<const double> logits) {
  if (logits.empty())
    throw ContractViolation("LogSoftmax: empty input");
  double max_logit = logits[0];
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i]))
      throw ContractViolation("LogSoftmax: non-finite logit at index " +
                              std::to_string(i));
    max_logit = std::max(max_logit, logits[i]);
  }
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - max_logit);
  double log_norm = max_logit + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_norm;
  return out;
}

std::vector<double> FiniteDiffGradient(const ScalarLoss& loss_fn,
                                       std::span<const double> params,
                                       double epsilon) {
  if (!(epsilon > 0.0))
    throw ContractViolation("FiniteDiffGradient: epsilon must be positive");
  std::vector<double> probe(params.begin(), params.end());
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + epsilon;
    const double up = loss_fn(probe);
    probe[i] = saved - epsilon;
    const double down = loss_fn(probe);
    probe[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw OracleFailure("FiniteDiffGradient: non-finite loss when probing "
                          "coordinate " + std::to_string(i));
    grad[i] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

double GradRelativeError(double analytic, double numeric) {
  double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport CheckGradient(const ScalarLoss& loss_fn,
                              std::span<const double> params,
                              std::span<const double> analytic,
                              double epsilon) {
  if (analytic.size() != params.size())
    throw ContractViolation("CheckGradient: gradient has " +
                            std::to_string(analytic.size()) +
                            " entries, parameters have " +
                            std::to_string(params.size()));
  GradCheckReport report;
  report.analytic.assign(analytic.begin(), analytic.end());
  report.numeric = FiniteDiffGradient(loss_fn, params, epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double err = GradRelativeError(report.analytic[i], report.numeric[i]);
    if (err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_index = i;
    }
  }
  return report;
}

unsigned long long Fnv1a64(std::span<const char> bytes) {
  unsigned long long hash = 14695981039346656037ULL;
  for (char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ULL;
  }
  return hash;
}

}  // namespace tslab
