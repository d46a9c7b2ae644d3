// core/include/tslab/oracle_suite.h

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

#ifndef TSLAB_ORACLE_SUITE_H_
#define TSLAB_ORACLE_SUITE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "tslab/model.h"

namespace tslab {

// Outcome of one brute-force or finite-difference check. metric is the
// worst observed deviation; passed means metric < tolerance (checks without
// a tolerance report only).
struct OracleCheck {
  std::string name;
  bool passed = false;
  double metric = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

// Random T x input_dim features, standard normal entries.
Matrix RandomFeatures(int frames, int input_dim, std::uint64_t seed);

// Sum of the posterior table (max_len = T) over 20 micro models with
// |V| = 2, T = 4.
OracleCheck CheckPosteriorNormalization(std::uint64_t seed);

// Forward-backward against alignment enumeration on 100 cases with T <= 5,
// S <= T, |V| <= 3.
OracleCheck CheckAlignmentSums(std::uint64_t seed);

// Analytic against central-difference gradients (eps = 1e-5) for CE, exact
// MMI, N-best MMI, unpruned LF-MMI and N-best MBR on micro models with
// parameters drawn from U[-0.5, 0.5]. One check per loss.
std::vector<OracleCheck> CheckGradients(std::uint64_t seed);

// Exact MMI with alpha = 1, beta = 0 against CE.
OracleCheck CheckMmiCeEquivalence(std::uint64_t seed);

// Unpruned LF-MMI denominator against full enumeration; the second entry
// reports the top-20 error with no tolerance.
std::vector<OracleCheck> CheckLfMmiDenominator(std::uint64_t seed);

// Exhaustive beam search against the brute-force fused argmax for every
// fusion mode, plus the lambda1 = 0 and lambda2 = 0 identities.
std::vector<OracleCheck> CheckDecoderExactness(std::uint64_t seed);

std::vector<OracleCheck> RunOracleSuite(std::uint64_t seed);

}  // namespace tslab

#endif  // TSLAB_ORACLE_SUITE_H_
