#include "apfv/error.hpp"

namespace apfv {

const char* errc_name(Errc c)
{
    switch (c) {
    case Errc::NonSymmetric: return "NonSymmetric";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::BadResolution: return "BadResolution";
    case Errc::Tangled: return "Tangled";
    case Errc::DegenerateCorner: return "DegenerateCorner";
    case Errc::NotAVertex: return "NotAVertex";
    case Errc::NotPSD: return "NotPSD";
    case Errc::TrivialKernel: return "TrivialKernel";
    case Errc::StructureViolation: return "StructureViolation";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::BadCoefficient: return "BadCoefficient";
    case Errc::BadIndex: return "BadIndex";
    case Errc::SymmetryFailure: return "SymmetryFailure";
    case Errc::BadCount: return "BadCount";
    case Errc::SingularNodeMatrix: return "SingularNodeMatrix";
    case Errc::BadSpeed: return "BadSpeed";
    case Errc::UnsupportedBC: return "UnsupportedBC";
    case Errc::ZeroTimestep: return "ZeroTimestep";
    case Errc::SingularLocalSolve: return "SingularLocalSolve";
    case Errc::BadTime: return "BadTime";
    case Errc::UnknownModel: return "UnknownModel";
    case Errc::MeshTooCoarse: return "MeshTooCoarse";
    case Errc::NoAnalytic: return "NoAnalytic";
    case Errc::ParseError: return "ParseError";
    case Errc::UnknownKey: return "UnknownKey";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

bool is_config_error(Errc c)
{
    switch (c) {
    case Errc::ParseError:
    case Errc::UnknownKey:
    case Errc::InvalidConfig:
    case Errc::UnknownModel:
    case Errc::BadResolution:
    case Errc::BadCount:
    case Errc::BadIndex:
    case Errc::BadCoefficient:
    case Errc::UnsupportedBC:
    case Errc::MeshTooCoarse:
    case Errc::NoAnalytic:
        return true;
    default:
        return false;
    }
}

} // namespace apfv
