// Copyright 2026 The floqlin Authors
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

// errors.hpp: Exception hierarchy shared by all floqlin modules.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace floqlin {

enum class ErrorKind {
    Divergence,
    DegenerateSpectrum,
    BranchCut,
    NoLimitCycle,
    PeriodDetection,
    DegenerateMonodromy,
    ModeConsistency,
    InconsistentModes,
    Convergence,
    Precondition,
    DegenerateCovariance,
    DimensionMismatch,
    Cutoff,
    Accuracy,
    Reliability,
};

inline std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Divergence: return "divergence";
        case ErrorKind::DegenerateSpectrum: return "degenerate-spectrum";
        case ErrorKind::BranchCut: return "branch-cut";
        case ErrorKind::NoLimitCycle: return "no-limit-cycle";
        case ErrorKind::PeriodDetection: return "period-detection-failure";
        case ErrorKind::DegenerateMonodromy: return "degenerate-monodromy";
        case ErrorKind::ModeConsistency: return "mode-consistency";
        case ErrorKind::InconsistentModes: return "inconsistent-modes";
        case ErrorKind::Convergence: return "convergence";
        case ErrorKind::Precondition: return "precondition";
        case ErrorKind::DegenerateCovariance: return "degenerate-covariance";
        case ErrorKind::DimensionMismatch: return "dimension-mismatch";
        case ErrorKind::Cutoff: return "cutoff";
        case ErrorKind::Accuracy: return "accuracy";
        case ErrorKind::Reliability: return "reliability";
    }
    return "unknown";
}

// Base class for every numerical failure raised by the library. Carries the
// failing module's name so front ends can report where a pipeline stopped.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string module, const std::string& message)
        : std::runtime_error(module + ": " + message), kind_(kind), module_(std::move(module)) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::string& module() const noexcept { return module_; }

private:
    ErrorKind kind_;
    std::string module_;
};

template <ErrorKind K>
class TypedError : public Error {
public:
    TypedError(std::string module, const std::string& message)
        : Error(K, std::move(module), message) {}
};

using DivergenceError = TypedError<ErrorKind::Divergence>;
using DegenerateSpectrumError = TypedError<ErrorKind::DegenerateSpectrum>;
using BranchCutError = TypedError<ErrorKind::BranchCut>;
using NoLimitCycleError = TypedError<ErrorKind::NoLimitCycle>;
using PeriodDetectionError = TypedError<ErrorKind::PeriodDetection>;
using DegenerateMonodromyError = TypedError<ErrorKind::DegenerateMonodromy>;
using ModeConsistencyError = TypedError<ErrorKind::ModeConsistency>;
using InconsistentModesError = TypedError<ErrorKind::InconsistentModes>;
using ConvergenceError = TypedError<ErrorKind::Convergence>;
using PreconditionError = TypedError<ErrorKind::Precondition>;
using DegenerateCovarianceError = TypedError<ErrorKind::DegenerateCovariance>;
using DimensionMismatchError = TypedError<ErrorKind::DimensionMismatch>;
using CutoffError = TypedError<ErrorKind::Cutoff>;
using AccuracyError = TypedError<ErrorKind::Accuracy>;
using ReliabilityError = TypedError<ErrorKind::Reliability>;

}  // namespace floqlin
