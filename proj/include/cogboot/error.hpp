#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cogboot {

enum class ErrorCode {
  // memory
  EmptyStatement,
  OracleUnavailable,
  UnparsableResponse,
  // production
  ParseError,
  UnboundVariable,
  UnknownPredicate,
  MissingBinding,
  EmptyRuleSet,
  // learning
  EmptyApplicableSet,
  Unreachable,
  // tasking
  NoCandidates,
  EmptyStack,
  // simulator
  SchemaError,
  DanglingReference,
  UnknownFamily,
  // oracle
  MissingSection,
  OptionNotOffered,
  NoCodeBlock,
  MissingEndCondition,
  VerdictCountMismatch,
  FixtureMiss,
  // agent
  StepLimitExceeded,
  ActionFailure,
  BootstrapStalled,
  // io
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Typed failure raised across the library. `code()` identifies the contract
/// violation; `what()` carries a human readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cogboot
