// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#pragma once

#include <stdexcept>
#include <string>

namespace qkprz {

// Error categories surfaced through the C API as integer codes.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kSingularPoint = 2,
  kBranchPoint = 3,
  kInsufficientOrder = 4,
  kParse = 5,
  kEvaluation = 6,
  kDegenerateMetric = 7,
  kGaugeSingularity = 8,
  kFrameDegeneracy = 9,
  kGaugeMismatch = 10,
  kExtractionDomain = 11,
  kIntegrabilityViolation = 12,
  kPoleOnContour = 13,
  kReductionInconsistency = 14,
  kSingularJacobian = 15,
  kNotConverged = 16,
  kSchema = 17,
  kIo = 18,
  kInternal = 99,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

const char* error_code_name(ErrorCode code) noexcept;

}  // namespace qkprz
