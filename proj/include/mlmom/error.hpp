#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mlmom {

enum class ErrorCode {
  too_few_groups,
  group_too_small,
  subgroup_count_too_small,
  subgroup_too_small,
  non_finite_value,
  unsupported_order,
  unsupported_kind,
  singular_system,
  missing_within_fourth,
  enumeration_too_large,
  locality_violation,
  invalid_distribution,
  invalid_moments,
  invalid_weights,
  missing_header,
  bad_column_count,
  unparseable_value,
  io_error,
  usage,
};

constexpr std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::too_few_groups: return "TooFewGroups";
    case ErrorCode::group_too_small: return "GroupTooSmall";
    case ErrorCode::subgroup_count_too_small: return "SubgroupCountTooSmall";
    case ErrorCode::subgroup_too_small: return "SubgroupTooSmall";
    case ErrorCode::non_finite_value: return "NonFiniteValue";
    case ErrorCode::unsupported_order: return "UnsupportedOrder";
    case ErrorCode::unsupported_kind: return "UnsupportedKind";
    case ErrorCode::singular_system: return "SingularSystem";
    case ErrorCode::missing_within_fourth: return "MissingWithinFourth";
    case ErrorCode::enumeration_too_large: return "EnumerationTooLarge";
    case ErrorCode::locality_violation: return "LocalityViolation";
    case ErrorCode::invalid_distribution: return "InvalidDistribution";
    case ErrorCode::invalid_moments: return "InvalidMoments";
    case ErrorCode::invalid_weights: return "InvalidWeights";
    case ErrorCode::missing_header: return "MissingHeader";
    case ErrorCode::bad_column_count: return "BadColumnCount";
    case ErrorCode::unparseable_value: return "UnparseableValue";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::usage: return "Usage";
  }
  return "Unknown";
}

/// Typed failure carrying named integer context such as {"group", 1} or
/// {"row", 7}.
class Error : public std::runtime_error {
 public:
  using Context = std::vector<std::pair<std::string, std::size_t>>;

  Error(ErrorCode code, const std::string& message, Context context = {})
      : std::runtime_error(std::string(error_name(code)) + ": " + message),
        code_(code),
        message_(message),
        context_(std::move(context)) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  /// The message without the error-name prefix carried by what().
  [[nodiscard]] const std::string& message() const noexcept { return message_; }
  [[nodiscard]] const Context& context() const noexcept { return context_; }

  [[nodiscard]] std::optional<std::size_t> at(std::string_view key) const {
    for (const auto& [k, v] : context_) {
      if (k == key) return v;
    }
    return std::nullopt;
  }

 private:
  ErrorCode code_;
  std::string message_;
  Context context_;
};

}  // namespace mlmom
