// core/include/tslab/optim.h

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

#ifndef TSLAB_OPTIM_H_
#define TSLAB_OPTIM_H_

#include <span>
#include <vector>

namespace tslab {

void SgdStep(std::span<double> params, std::span<const double> grad,
             double learning_rate);

class Adam {
 public:
  Adam(std::size_t size, double learning_rate, double beta1 = 0.9,
       double beta2 = 0.999, double epsilon = 1e-8);

  void Step(std::span<double> params, std::span<const double> grad);

 private:
  double learning_rate_, beta1_, beta2_, epsilon_;
  long step_ = 0;
  std::vector<double> m_, v_;
};

// Clips grad in place to the given global L2 norm; returns the norm before
// clipping.
double ClipGradNorm(std::span<double> grad, double max_norm);

}  // namespace tslab

#endif  // TSLAB_OPTIM_H_
