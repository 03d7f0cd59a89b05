// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#include "qkprz/error.hpp"

namespace qkprz {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kSingularPoint: return "singular-point";
    case ErrorCode::kBranchPoint: return "branch-point";
    case ErrorCode::kInsufficientOrder: return "insufficient-order";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kEvaluation: return "evaluation";
    case ErrorCode::kDegenerateMetric: return "degenerate-metric";
    case ErrorCode::kGaugeSingularity: return "gauge-singularity";
    case ErrorCode::kFrameDegeneracy: return "frame-degeneracy";
    case ErrorCode::kGaugeMismatch: return "gauge-mismatch";
    case ErrorCode::kExtractionDomain: return "extraction-domain";
    case ErrorCode::kIntegrabilityViolation: return "integrability-violation";
    case ErrorCode::kPoleOnContour: return "pole-on-contour";
    case ErrorCode::kReductionInconsistency: return "reduction-inconsistency";
    case ErrorCode::kSingularJacobian: return "singular-jacobian";
    case ErrorCode::kNotConverged: return "not-converged";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

}  // namespace qkprz
