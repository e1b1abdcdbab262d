#include "cogboot/error.hpp"

namespace cogboot {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyStatement: return "EmptyStatement";
    case ErrorCode::OracleUnavailable: return "OracleUnavailable";
    case ErrorCode::UnparsableResponse: return "UnparsableResponse";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::UnknownPredicate: return "UnknownPredicate";
    case ErrorCode::MissingBinding: return "MissingBinding";
    case ErrorCode::EmptyRuleSet: return "EmptyRuleSet";
    case ErrorCode::EmptyApplicableSet: return "EmptyApplicableSet";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::EmptyStack: return "EmptyStack";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::UnknownFamily: return "UnknownFamily";
    case ErrorCode::MissingSection: return "MissingSection";
    case ErrorCode::OptionNotOffered: return "OptionNotOffered";
    case ErrorCode::NoCodeBlock: return "NoCodeBlock";
    case ErrorCode::MissingEndCondition: return "MissingEndCondition";
    case ErrorCode::VerdictCountMismatch: return "VerdictCountMismatch";
    case ErrorCode::FixtureMiss: return "FixtureMiss";
    case ErrorCode::StepLimitExceeded: return "StepLimitExceeded";
    case ErrorCode::ActionFailure: return "ActionFailure";
    case ErrorCode::BootstrapStalled: return "BootstrapStalled";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace cogboot
