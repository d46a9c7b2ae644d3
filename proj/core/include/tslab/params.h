// core/include/tslab/params.h

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

#ifndef TSLAB_PARAMS_H_
#define TSLAB_PARAMS_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tslab {

struct ParamBlock {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
};

using MatMap = Eigen::Map<
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap = Eigen::Map<const Eigen::Matrix<
    double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

// Named, contiguous parameter blocks addressable as one flat vector. The same
// layout indexes gradient buffers.
class ParamSet {
 public:
  int AddBlock(std::string name, int rows, int cols);

  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& block(int index) const { return blocks_[index]; }
  // Returns -1 if absent.
  int FindBlock(const std::string& name) const;

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  ConstMatMap Mat(int block) const { return View(values_, block); }
  ConstVecMap Vec(int block) const { return VecView(values_, block); }

  ConstMatMap View(std::span<const double> buffer, int block) const;
  MatMap View(std::span<double> buffer, int block) const;
  ConstVecMap VecView(std::span<const double> buffer, int block) const;
  VecMap VecView(std::span<double> buffer, int block) const;

  bool SameLayout(const ParamSet& other) const;

 private:
  std::vector<ParamBlock> blocks_;
  std::vector<double> values_;
};

}  // namespace tslab

#endif  // TSLAB_PARAMS_H_
