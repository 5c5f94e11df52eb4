#include "mmgbm/errors.hpp"

namespace mmgbm {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonConservativeRateMatrix: return "NonConservativeRateMatrix";
    case ErrorCode::NegativeOffDiagonal: return "NegativeOffDiagonal";
    case ErrorCode::NonpositiveVolatility: return "NonpositiveVolatility";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::StabilityViolation: return "StabilityViolation";
    case ErrorCode::FixedPointDivergence: return "FixedPointDivergence";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::PriceBelowIntrinsic: return "PriceBelowIntrinsic";
    case ErrorCode::PriceAboveSpot: return "PriceAboveSpot";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NonpositiveTTM: return "NonpositiveTTM";
    case ErrorCode::EmptyBucket: return "EmptyBucket";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ClusteringAmbiguous: return "ClusteringAmbiguous";
  }
  return "UnknownError";
}

}  // namespace mmgbm
