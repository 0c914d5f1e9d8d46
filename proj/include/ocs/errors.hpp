#pragma once

#include <stdexcept>
#include <string>

namespace ocs {

// Two failure families, matching the CLI exit-code contract:
// validation problems exit 2, numeric/solver problems exit 3.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateGeometry : ValidationError {
    explicit DegenerateGeometry(const std::string& msg) : ValidationError("DegenerateGeometry: " + msg) {}
};

struct AsymmetricBarrier : ValidationError {
    explicit AsymmetricBarrier(const std::string& msg) : ValidationError("AsymmetricBarrier: " + msg) {}
};

struct BadSpec : ValidationError {
    explicit BadSpec(const std::string& msg) : ValidationError("BadSpec: " + msg) {}
};

struct NonPositiveK : ValidationError {
    explicit NonPositiveK(const std::string& msg) : ValidationError("NonPositiveK: " + msg) {}
};

struct AtBarrierTop : NumericError {
    explicit AtBarrierTop(const std::string& msg) : NumericError("AtBarrierTop: " + msg) {}
};

struct IntegrationFailure : NumericError {
    explicit IntegrationFailure(const std::string& msg) : NumericError("IntegrationFailure: " + msg) {}
};

struct UnwrapAmbiguity : NumericError {
    explicit UnwrapAmbiguity(const std::string& msg) : NumericError("UnwrapAmbiguity: " + msg) {}
};

struct ZeroTransmission : NumericError {
    explicit ZeroTransmission(const std::string& msg) : NumericError("ZeroTransmission: " + msg) {}
};

struct ZeroReflection : NumericError {
    explicit ZeroReflection(const std::string& msg) : NumericError("ZeroReflection: " + msg) {}
};

struct LambdaUndefined : NumericError {
    explicit LambdaUndefined(const std::string& msg) : NumericError("LambdaUndefined: " + msg) {}
};

struct DegenerateSplit : NumericError {
    explicit DegenerateSplit(const std::string& msg) : NumericError("DegenerateSplit: " + msg) {}
};

struct NormLeak : NumericError {
    explicit NormLeak(const std::string& msg) : NumericError("NormLeak: " + msg) {}
};

struct UnderResolvedPhase : NumericError {
    explicit UnderResolvedPhase(const std::string& msg) : NumericError("UnderResolvedPhase: " + msg) {}
};

struct NoBracket : NumericError {
    explicit NoBracket(const std::string& msg) : NumericError("NoBracket: " + msg) {}
};

} // namespace ocs
