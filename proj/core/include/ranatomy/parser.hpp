#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "ranatomy/syntax.hpp"

namespace ranatomy {

enum class FailureCategory : std::uint8_t {
  NotRCode,
  EncodingError,
  DocumentationCommand,
  RawSyntaxError,
};

inline constexpr FailureCategory kAllFailureCategories[] = {
    FailureCategory::DocumentationCommand, FailureCategory::EncodingError,
    FailureCategory::NotRCode, FailureCategory::RawSyntaxError};

[[nodiscard]] std::string_view failure_category_name(FailureCategory category);
[[nodiscard]] std::optional<FailureCategory> failure_category_from_name(std::string_view name);

struct FailureRecord {
  FailureCategory category = FailureCategory::RawSyntaxError;
  Span first_error_span;
  std::string message;
  // Set when parsing stopped because a nesting limit was hit, not because of
  // a syntax error. Such failures are not refined by classify_parse_failure.
  bool resource_limit = false;
};

struct ParseOutcome {
  std::variant<SyntaxNode, FailureRecord> result;

  [[nodiscard]] bool ok() const { return std::holds_alternative<SyntaxNode>(result); }
  [[nodiscard]] const SyntaxNode& ast() const { return std::get<SyntaxNode>(result); }
  [[nodiscard]] const FailureRecord& failure() const { return std::get<FailureRecord>(result); }
};

struct ParseOptions {
  // Recursion depth of the descent itself.
  std::uint32_t max_nesting = 1000;
  // Height of the produced tree; bounds left-deep chains like a+b+c+...
  std::uint32_t max_tree_height = 2000;
};

/// Parses a whole file. Failures carry the first error position and a raw
/// RawSyntaxError category; run classify_parse_failure to refine it.
[[nodiscard]] ParseOutcome parse(std::string_view source, const ParseOptions& options = {});

/// Assigns the failure cause using ordered rules: documentation command
/// before the error, confusable or undecodable text at the error, mostly
/// non-R lines up to the error, else a plain syntax error.
[[nodiscard]] FailureRecord classify_parse_failure(std::string_view source, FailureRecord failure);

// Share of non-blank lines that look like R, below which a file that fails to
// parse is taken to be something else.
inline constexpr double kPlausibleRLineThreshold = 0.20;

/// Heuristic used by the NotRCode rule: the line lexes without invalid tokens
/// and has no two operands juxtaposed without an operator between them.
[[nodiscard]] bool is_plausible_r_line(std::string_view line);

/// parse() followed by classification of any failure.
[[nodiscard]] ParseOutcome parse_and_classify(std::string_view source,
                                              const ParseOptions& options = {});

}  // namespace ranatomy
