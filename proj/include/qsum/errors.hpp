#pragma once

#include <stdexcept>
#include <string>

namespace qsum {

// Base for all library errors so callers can catch the whole family.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define QSUM_DEFINE_ERROR(Name)                                    \
    struct Name : Error {                                          \
        explicit Name(const std::string& msg) : Error(msg) {}      \
    }

QSUM_DEFINE_ERROR(NonConvergence);
QSUM_DEFINE_ERROR(PreconditionViolated);
QSUM_DEFINE_ERROR(DomainMismatch);
QSUM_DEFINE_ERROR(TruncationError);
QSUM_DEFINE_ERROR(AlignmentError);
QSUM_DEFINE_ERROR(ParameterError);
QSUM_DEFINE_ERROR(DivisorDegenerate);
QSUM_DEFINE_ERROR(GeometryViolation);
QSUM_DEFINE_ERROR(NoAdmissibleDirection);
QSUM_DEFINE_ERROR(InsufficientData);
QSUM_DEFINE_ERROR(ModeUnsupported);
QSUM_DEFINE_ERROR(NonContraction);
QSUM_DEFINE_ERROR(DomainError);
QSUM_DEFINE_ERROR(QuadratureError);
QSUM_DEFINE_ERROR(InsufficientSignal);
QSUM_DEFINE_ERROR(ParseError);
QSUM_DEFINE_ERROR(SchemaError);
QSUM_DEFINE_ERROR(StageError);

#undef QSUM_DEFINE_ERROR

}  // namespace qsum
