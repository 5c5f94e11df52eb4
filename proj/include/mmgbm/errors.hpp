#pragma once

#include <stdexcept>
#include <string>

namespace mmgbm {

enum class ErrorCode {
  // model / config
  NonConservativeRateMatrix,
  NegativeOffDiagonal,
  NonpositiveVolatility,
  ParseError,
  ValidationError,
  // markov
  OutOfRange,
  // pricer
  DegenerateDenominator,
  StabilityViolation,
  FixedPointDivergence,
  OutOfDomain,
  // implied vol
  PriceBelowIntrinsic,
  PriceAboveSpot,
  NoConvergence,
  NonpositiveTTM,
  EmptyBucket,
  // smile
  RankDeficient,
  // recovery
  ClusteringAmbiguous,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + msg),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace mmgbm
