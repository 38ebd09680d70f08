/* Copyright 2026 The h2h Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <stdexcept>
#include <string>

namespace h2h {

// Two families: ValidationError for bad arguments/shapes (CLI exit code 2) and
// IngestError for unreadable or inconsistent input files (CLI exit code 3).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define H2H_DEFINE_ERROR(Name, Base) \
  class Name : public Base {         \
   public:                           \
    using Base::Base;                \
  };

H2H_DEFINE_ERROR(DimensionError, ValidationError)
H2H_DEFINE_ERROR(DegenerateModelError, ValidationError)
H2H_DEFINE_ERROR(DegenerateConfigError, ValidationError)
H2H_DEFINE_ERROR(EmptyInputError, ValidationError)
H2H_DEFINE_ERROR(CorruptMaskError, ValidationError)
H2H_DEFINE_ERROR(EmptyMaskError, ValidationError)
H2H_DEFINE_ERROR(InvalidFeatureError, ValidationError)
H2H_DEFINE_ERROR(TargetExhaustedError, ValidationError)
H2H_DEFINE_ERROR(OutOfFrameError, ValidationError)
H2H_DEFINE_ERROR(InvalidPoseError, ValidationError)

#undef H2H_DEFINE_ERROR

// Non-fatal conditions. Operations report them through flags on their result
// types rather than throwing.
enum class Warning {
  kGimbalLock,
  kConvergence,
  kSubPixelEye,
  kClip,
  kBasisDimension,
};

inline const char* to_string(Warning w) {
  switch (w) {
    case Warning::kGimbalLock: return "GimbalLockWarning";
    case Warning::kConvergence: return "ConvergenceWarning";
    case Warning::kSubPixelEye: return "SubPixelEyeWarning";
    case Warning::kClip: return "ClipWarning";
    case Warning::kBasisDimension: return "BasisDimensionWarning";
  }
  return "UnknownWarning";
}

}  // namespace h2h
