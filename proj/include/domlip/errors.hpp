#pragma once

#include <stdexcept>
#include <string>

namespace domlip {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct NotHyperbolic : Error { using Error::Error; };
struct DegenerateTriangle : Error { using Error::Error; };
struct CoincidentPoints : Error { using Error::Error; };
struct EqualBoundaryPoints : Error { using Error::Error; };
struct SingularMetric : Error { using Error::Error; };
struct BallTooLarge : Error { using Error::Error; };
struct RelatorViolation : Error { using Error::Error; };
struct LiftAmbiguity : Error { using Error::Error; };
struct DegenerateLength : Error { using Error::Error; };
struct DomainConstructionFailed : Error { using Error::Error; };
struct DegenerateFace : Error { using Error::Error; };
struct IndexMismatch : Error { using Error::Error; };
struct ParabolicTarget : Error { using Error::Error; };
struct SingularSystem : Error { using Error::Error; };
struct NotFuchsian : Error { using Error::Error; };
struct NotCritical : Error { using Error::Error; };
struct ResidualFloor : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };

} // namespace domlip
