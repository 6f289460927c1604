#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ranatomy/features.hpp"
#include "ranatomy/source.hpp"

namespace ranatomy {

struct LintDiagnostic {
  LineCol position;
  Span span;
  std::string rule;  // mixed-assignment, constant-condition, degenerate-for, ...
  std::string message;
};

/// Findings for one file in source order. A file that does not parse yields
/// a single parse-error diagnostic.
[[nodiscard]] std::vector<LintDiagnostic> lint_source(std::string_view source,
                                                      const ExtractOptions& options = {});

/// "path:line:col: rule: message"
[[nodiscard]] std::string format_diagnostic(std::string_view path, const LintDiagnostic& d);

/// Exit status: 0 success, 1 usage error, 2 I/O error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ranatomy
