#pragma once

#include <stdexcept>
#include <string>

namespace apfv {

enum class Errc {
    NonSymmetric,
    NoConvergence,
    BadResolution,
    Tangled,
    DegenerateCorner,
    NotAVertex,
    NotPSD,
    TrivialKernel,
    StructureViolation,
    DimensionMismatch,
    BadCoefficient,
    BadIndex,
    SymmetryFailure,
    BadCount,
    SingularNodeMatrix,
    BadSpeed,
    UnsupportedBC,
    ZeroTimestep,
    SingularLocalSolve,
    BadTime,
    UnknownModel,
    MeshTooCoarse,
    NoAnalytic,
    ParseError,
    UnknownKey,
    InvalidConfig,
    IoError,
};

const char* errc_name(Errc c);

// True for errors caused by user input rather than by the numerics.
bool is_config_error(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace apfv
