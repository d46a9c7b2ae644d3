// core/include/tslab/checkpoint.h

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

#ifndef TSLAB_CHECKPOINT_H_
#define TSLAB_CHECKPOINT_H_

#include <iosfwd>
#include <string>

#include "tslab/lm.h"
#include "tslab/model.h"

namespace tslab {

// Binary container:
//   "TSLAB1"
//   u32 config length, config text (key=value lines, first line kind=...)
//   u32 block count
//   per block: u32 name length, name, u64 element count, f64 values
// Integers and floats are little-endian.
void SaveModel(std::ostream& os, const TransducerModel& model);
TransducerModel LoadModel(std::istream& is);

void SaveNeuralLm(std::ostream& os, const NeuralLM& lm);
NeuralLM LoadNeuralLm(std::istream& is);

// File wrappers; FormatError names the path on failure.
void SaveModelFile(const std::string& path, const TransducerModel& model);
TransducerModel LoadModelFile(const std::string& path);
void SaveNeuralLmFile(const std::string& path, const NeuralLM& lm);
NeuralLM LoadNeuralLmFile(const std::string& path);

}  // namespace tslab

#endif  // TSLAB_CHECKPOINT_H_
