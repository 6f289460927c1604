#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "ranatomy/source.hpp"

namespace ranatomy {

enum class TokenKind : std::uint8_t {
  Symbol,
  QuotedSymbol,  // `backtick quoted`
  Number,
  String,
  RawString,
  Comment,
  Newline,
  Special,  // %op%

  // keywords
  If,
  Else,
  For,
  In,
  While,
  Repeat,
  Break,
  Next,
  Function,
  Lambda,  // the `\` in `\(x)`
  True,
  False,
  Null,
  NA,
  Inf,  // Inf, NaN

  // assignment
  LeftAssign,        // <-
  RightAssign,       // ->
  SuperLeftAssign,   // <<-
  SuperRightAssign,  // ->>
  EqAssign,          // =
  ColonAssign,       // :=

  // operators
  Plus,
  Minus,
  Star,
  Slash,
  Caret,  // ^ and **
  Less,
  Greater,
  LessEq,
  GreaterEq,
  EqEq,
  NotEq,
  Bang,
  And,
  AndAnd,
  Or,
  OrOr,
  Pipe,  // |>
  Tilde,
  Question,
  Colon,
  DoubleColon,
  TripleColon,
  Dollar,
  At,

  // punctuation
  LParen,
  RParen,
  LBrace,
  RBrace,
  LBracket,
  DoubleLBracket,
  RBracket,
  Comma,
  Semicolon,

  Invalid,
  End,
};

[[nodiscard]] std::string_view token_kind_name(TokenKind kind);

struct Token {
  TokenKind kind = TokenKind::End;
  Span span;
  std::uint32_t line = 1;
  std::uint32_t column = 1;
  std::string_view text;
  // Only set on Invalid tokens.
  const char* diagnostic = nullptr;
};

struct TokenStream {
  std::vector<Token> tokens;  // always terminated by an End token
  // Offset of the first byte sequence that is not valid UTF-8, anywhere in
  // the input (including comments and strings).
  std::optional<std::uint32_t> first_invalid_utf8;
};

/// Splits R source into tokens. Whitespace other than newlines is skipped;
/// comments and newlines are kept. Never fails: undecodable bytes and
/// characters that are not valid outside strings become Invalid tokens.
[[nodiscard]] TokenStream tokenize(std::string_view source);

/// True for code points that look like ASCII punctuation but are not
/// (fullwidth forms, typographic quotes and dashes, invisible spaces).
[[nodiscard]] bool is_confusable(char32_t cp);

/// Decodes one UTF-8 sequence at `pos`. Returns the code point and its byte
/// length, or nullopt if the sequence is malformed.
struct DecodedChar {
  char32_t cp;
  std::uint32_t length;
};
[[nodiscard]] std::optional<DecodedChar> decode_utf8(std::string_view s, std::size_t pos);

}  // namespace ranatomy
