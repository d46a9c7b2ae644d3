// core/src/params.cc

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

#include "tslab/params.h"

#include <sstream>

#include "tslab/error.h"
#include "tslab/types.h"

namespace tslab {

int ParamSet::AddBlock(std::string name, int rows, int cols) {
  if (rows <= 0 || cols <= 0)
    throw ConfigError("parameter block '" + name + "' has empty shape");
  if (FindBlock(name) >= 0)
    throw ConfigError("duplicate parameter block '" + name + "'");
  ParamBlock block{std::move(name), rows, cols, values_.size()};
  values_.resize(values_.size() + block.size(), 0.0);
  blocks_.push_back(std::move(block));
  return static_cast<int>(blocks_.size()) - 1;
}

int ParamSet::FindBlock(const std::string& name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].name == name) return static_cast<int>(i);
  return -1;
}

ConstMatMap ParamSet::View(std::span<const double> buffer, int block) const {
  const ParamBlock& b = blocks_[block];
  return ConstMatMap(buffer.data() + b.offset, b.rows, b.cols);
}

MatMap ParamSet::View(std::span<double> buffer, int block) const {
  const ParamBlock& b = blocks_[block];
  return MatMap(buffer.data() + b.offset, b.rows, b.cols);
}

ConstVecMap ParamSet::VecView(std::span<const double> buffer,
                              int block) const {
  const ParamBlock& b = blocks_[block];
  return ConstVecMap(buffer.data() + b.offset, b.size());
}

VecMap ParamSet::VecView(std::span<double> buffer, int block) const {
  const ParamBlock& b = blocks_[block];
  return VecMap(buffer.data() + b.offset, b.size());
}

bool ParamSet::SameLayout(const ParamSet& other) const {
  if (blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const ParamBlock& a = blocks_[i];
    const ParamBlock& b = other.blocks_[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols) return false;
  }
  return true;
}

void CheckLabels(const Vocabulary& vocab, const LabelSequence& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!vocab.Contains(labels[i]))
      throw VocabularyError("label " + std::to_string(labels[i]) +
                            " at position " + std::to_string(i) +
                            " is outside the vocabulary 1.." +
                            std::to_string(vocab.num_labels));
  }
}

std::string FormatLabels(const LabelSequence& labels) {
  std::ostringstream os;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) os << ' ';
    os << labels[i];
  }
  return os.str();
}

}  // namespace tslab
