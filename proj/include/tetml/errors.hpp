#ifndef TETML_ERRORS_HPP
#define TETML_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tetml {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonConformingInput : Error { using Error::Error; };
struct DegenerateTet : Error { using Error::Error; };
struct NotActive : Error { using Error::Error; };
struct SelfQuery : Error { using Error::Error; };
struct UnknownVertex : Error { using Error::Error; };
struct GreenRefinementForbidden : Error { using Error::Error; };
struct WrongLevel : Error { using Error::Error; };
struct UnsupportedPattern : Error { using Error::Error; };
struct EmptyRefinement : Error { using Error::Error; };
struct LevelMissing : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct SolverStall : Error { using Error::Error; };
struct BreakdownNegativeCurvature : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct ConfigParse : Error { using Error::Error; };
struct MismatchedScenario : Error { using Error::Error; };
struct IOFailure : Error { using Error::Error; };

} // namespace tetml

#endif
