#include "fairdyn/errors.hpp"

namespace fairdyn {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::negative_entry: return "NegativeEntry";
    case Errc::row_sum_violation: return "RowSumViolation";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::not_convergent: return "NotConvergent";
    case Errc::numerical_failure: return "NumericalFailure";
    case Errc::wrong_variant: return "WrongVariant";
    case Errc::degenerate_group: return "DegenerateGroup";
    case Errc::unknown_preset: return "UnknownPreset";
    case Errc::schema_error: return "SchemaError";
    case Errc::invariant_violation: return "InvariantViolation";
    case Errc::empty_dataset: return "EmptyDataset";
    case Errc::empty_qualified_group: return "EmptyQualifiedGroup";
    case Errc::invalid_argument: return "InvalidArgument";
  }
  return "UnknownError";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace fairdyn
