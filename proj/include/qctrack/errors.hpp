// Copyright 2026 The qctrack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace qctrack {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define QCTRACK_DEFINE_ERROR(Name)          \
  class Name : public Error {               \
   public:                                  \
    explicit Name(const std::string& what)  \
        : Error(std::string(#Name ": ") + what) {} \
  };

QCTRACK_DEFINE_ERROR(InvalidInput)
QCTRACK_DEFINE_ERROR(InvalidField)
QCTRACK_DEFINE_ERROR(DimensionError)
QCTRACK_DEFINE_ERROR(NumericalFailure)
QCTRACK_DEFINE_ERROR(InvalidSpectrum)
QCTRACK_DEFINE_ERROR(StalledOptimization)
QCTRACK_DEFINE_ERROR(SingularGMatrix)
QCTRACK_DEFINE_ERROR(SingularGamma)
QCTRACK_DEFINE_ERROR(NearCriticalSingularity)
QCTRACK_DEFINE_ERROR(InvalidPovm)
QCTRACK_DEFINE_ERROR(InvalidRecord)

#undef QCTRACK_DEFINE_ERROR

}  // namespace qctrack
