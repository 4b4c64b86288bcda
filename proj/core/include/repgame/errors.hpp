#pragma once

#include <stdexcept>
#include <string>

namespace repgame {

// Machine-readable failure codes surfaced by the library. Validation issues on
// a GameSpec are reported as data (see validate()); these are for genuine
// failures of an operation's contract.
enum class Errc {
  ParameterOutOfRange,
  QROrderViolated,
  ZeroProbabilitySignal,
  DimensionMismatch,
  InvalidSpec,
  UnknownType,
  IterationLimitExceeded,
  NoPositiveEpsilon,
  InsufficientSamples,
  NonDecayingTail,
  HorizonTooShort,
  FullRankRequired,
  NoCommitmentTypes,
  BadArgument,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace repgame
