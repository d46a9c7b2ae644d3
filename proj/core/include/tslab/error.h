// core/include/tslab/error.h

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

#ifndef TSLAB_ERROR_H_
#define TSLAB_ERROR_H_

#include <stdexcept>
#include <string>

namespace tslab {

// Base of every error the library raises. Each subclass names the contract
// that was broken so callers (and tests) can distinguish them.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TSLAB_DEFINE_ERROR(Name)          \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

TSLAB_DEFINE_ERROR(ContractViolation);
TSLAB_DEFINE_ERROR(ConfigError);
TSLAB_DEFINE_ERROR(VocabularyError);
TSLAB_DEFINE_ERROR(OracleFailure);
TSLAB_DEFINE_ERROR(OracleScaleError);
TSLAB_DEFINE_ERROR(TrainingDataError);
TSLAB_DEFINE_ERROR(TrainingError);
TSLAB_DEFINE_ERROR(DegenerateSpaceError);
TSLAB_DEFINE_ERROR(SingularityError);
TSLAB_DEFINE_ERROR(SwapError);
TSLAB_DEFINE_ERROR(EmptyInputError);
TSLAB_DEFINE_ERROR(UndefinedMetricError);
TSLAB_DEFINE_ERROR(PipelineOrderError);
TSLAB_DEFINE_ERROR(FormatError);
TSLAB_DEFINE_ERROR(ReportError);

#undef TSLAB_DEFINE_ERROR

}  // namespace tslab

#endif  // TSLAB_ERROR_H_
