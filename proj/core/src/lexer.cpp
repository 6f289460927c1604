#include "ranatomy/lexer.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace ranatomy {

namespace {

bool is_ascii_alpha(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_hex_digit(unsigned char c) {
  return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

bool is_unicode_space(char32_t cp) {
  return cp == 0x00A0 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x202F || cp == 0x205F ||
         cp == 0x3000;
}

struct Keyword {
  std::string_view text;
  TokenKind kind;
};

constexpr std::array kKeywords{
    Keyword{"if", TokenKind::If},
    Keyword{"else", TokenKind::Else},
    Keyword{"for", TokenKind::For},
    Keyword{"in", TokenKind::In},
    Keyword{"while", TokenKind::While},
    Keyword{"repeat", TokenKind::Repeat},
    Keyword{"break", TokenKind::Break},
    Keyword{"next", TokenKind::Next},
    Keyword{"function", TokenKind::Function},
    Keyword{"TRUE", TokenKind::True},
    Keyword{"FALSE", TokenKind::False},
    Keyword{"NULL", TokenKind::Null},
    Keyword{"NA", TokenKind::NA},
    Keyword{"NA_integer_", TokenKind::NA},
    Keyword{"NA_real_", TokenKind::NA},
    Keyword{"NA_character_", TokenKind::NA},
    Keyword{"NA_complex_", TokenKind::NA},
    Keyword{"Inf", TokenKind::Inf},
    Keyword{"NaN", TokenKind::Inf},
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  TokenStream run() {
    // A leading byte order mark is not part of the program.
    if (src_.starts_with("\xEF\xBB\xBF")) pos_ = 3;
    while (pos_ < src_.size()) {
      lex_one();
    }
    emit(TokenKind::End, static_cast<std::uint32_t>(src_.size()), static_cast<std::uint32_t>(src_.size()));
    return std::move(out_);
  }

 private:
  unsigned char at(std::size_t i) const {
    return i < src_.size() ? static_cast<unsigned char>(src_[i]) : 0;
  }

  void note_invalid_utf8(std::size_t offset) {
    if (!out_.first_invalid_utf8) out_.first_invalid_utf8 = static_cast<std::uint32_t>(offset);
  }

  // Checks UTF-8 validity of [from, to) without otherwise interpreting it.
  void scan_utf8(std::size_t from, std::size_t to) {
    if (out_.first_invalid_utf8) return;
    std::size_t i = from;
    while (i < to) {
      if (at(i) < 0x80) {
        ++i;
        continue;
      }
      auto d = decode_utf8(src_, i);
      if (!d || i + d->length > to) {
        note_invalid_utf8(i);
        return;
      }
      i += d->length;
    }
  }

  void sync_position(std::size_t offset) {
    while (line_pos_ < offset) {
      if (src_[line_pos_] == '\n') {
        ++line_;
        line_start_ = line_pos_ + 1;
      }
      ++line_pos_;
    }
  }

  void emit(TokenKind kind, std::size_t begin, std::size_t end, const char* diag = nullptr) {
    sync_position(begin);
    Token t;
    t.kind = kind;
    t.span = Span{static_cast<std::uint32_t>(begin), static_cast<std::uint32_t>(end)};
    t.line = line_;
    t.column = static_cast<std::uint32_t>(begin - line_start_ + 1);
    t.text = src_.substr(begin, end - begin);
    t.diagnostic = diag;
    out_.tokens.push_back(t);
    pos_ = end;
  }

  // Length of a UTF-8 identifier character at i, or 0.
  std::size_t ident_char_len(std::size_t i, bool first) {
    unsigned char c = at(i);
    if (c < 0x80) {
      if (is_ascii_alpha(c) || c == '.') return 1;
      if (!first && (is_digit(c) || c == '_')) return 1;
      return 0;
    }
    auto d = decode_utf8(src_, i);
    if (!d || is_confusable(d->cp) || is_unicode_space(d->cp)) return 0;
    return d->length;
  }

  void lex_one() {
    const std::size_t start = pos_;
    const unsigned char c = at(pos_);

    if (c == ' ' || c == '\t' || c == '\f' || c == '\r' || c == '\v') {
      ++pos_;
      return;
    }
    if (c == '\n') return emit(TokenKind::Newline, start, start + 1);
    if (c == '#') {
      std::size_t e = start;
      while (e < src_.size() && src_[e] != '\n') ++e;
      // a comment line may end in \r\n
      std::size_t text_end = (e > start && src_[e - 1] == '\r') ? e - 1 : e;
      scan_utf8(start, text_end);
      return emit(TokenKind::Comment, start, text_end);
    }
    if ((c == 'r' || c == 'R') && (at(pos_ + 1) == '"' || at(pos_ + 1) == '\'')) {
      return lex_raw_string();
    }
    if (c == '"' || c == '\'') return lex_quoted(TokenKind::String, static_cast<char>(c));
    if (c == '`') return lex_quoted(TokenKind::QuotedSymbol, '`');
    if (is_digit(c) || (c == '.' && is_digit(at(pos_ + 1)))) return lex_number();
    if (c >= 0x80) {
      auto d = decode_utf8(src_, pos_);
      if (!d) {
        note_invalid_utf8(pos_);
        return emit(TokenKind::Invalid, start, start + 1, "invalid UTF-8 byte");
      }
      if (is_unicode_space(d->cp)) {
        pos_ += d->length;
        return;
      }
      if (is_confusable(d->cp)) {
        return emit(TokenKind::Invalid, start, start + d->length, "confusable character");
      }
    }
    if (ident_char_len(pos_, true) > 0) return lex_identifier();
    lex_operator();
  }

  void lex_identifier() {
    const std::size_t start = pos_;
    std::size_t e = pos_;
    bool first = true;
    while (e < src_.size()) {
      std::size_t n = ident_char_len(e, first);
      if (n == 0) break;
      e += n;
      first = false;
    }
    std::string_view text = src_.substr(start, e - start);
    for (const auto& kw : kKeywords) {
      if (kw.text == text) return emit(kw.kind, start, e);
    }
    emit(TokenKind::Symbol, start, e);
  }

  void lex_number() {
    const std::size_t start = pos_;
    std::size_t e = pos_;
    if (at(e) == '0' && (at(e + 1) == 'x' || at(e + 1) == 'X')) {
      e += 2;
      while (is_hex_digit(at(e)) || at(e) == '.') ++e;
      if (at(e) == 'p' || at(e) == 'P') {
        ++e;
        if (at(e) == '+' || at(e) == '-') ++e;
        while (is_digit(at(e))) ++e;
      }
    } else {
      while (is_digit(at(e))) ++e;
      if (at(e) == '.') {
        ++e;
        while (is_digit(at(e))) ++e;
      }
      if ((at(e) == 'e' || at(e) == 'E') &&
          (is_digit(at(e + 1)) ||
           ((at(e + 1) == '+' || at(e + 1) == '-') && is_digit(at(e + 2))))) {
        e += 2;
        while (is_digit(at(e))) ++e;
      }
    }
    if (at(e) == 'L' || at(e) == 'i') ++e;
    emit(TokenKind::Number, start, e);
  }

  void lex_quoted(TokenKind kind, char quote) {
    const std::size_t start = pos_;
    std::size_t e = pos_ + 1;
    while (e < src_.size()) {
      char ch = src_[e];
      if (ch == '\\') {
        e += 2;
        continue;
      }
      if (ch == quote) {
        scan_utf8(start, e + 1);
        return emit(kind, start, e + 1);
      }
      ++e;
    }
    scan_utf8(start, src_.size());
    emit(TokenKind::Invalid, start, src_.size(),
         kind == TokenKind::String ? "unterminated string" : "unterminated backtick name");
  }

  // r"(...)", R'[...]', r"--{...}--" and friends.
  void lex_raw_string() {
    const std::size_t start = pos_;
    const char quote = src_[pos_ + 1];
    std::size_t e = pos_ + 2;
    std::size_t dashes = 0;
    while (at(e) == '-') {
      ++dashes;
      ++e;
    }
    char open = static_cast<char>(at(e));
    char close = open == '(' ? ')' : open == '[' ? ']' : open == '{' ? '}' : '\0';
    if (close == '\0') {
      return emit(TokenKind::Invalid, start, e, "malformed raw string");
    }
    ++e;
    while (e < src_.size()) {
      if (src_[e] == close) {
        std::size_t k = e + 1;
        std::size_t n = 0;
        while (n < dashes && at(k) == '-') {
          ++n;
          ++k;
        }
        if (n == dashes && at(k) == static_cast<unsigned char>(quote)) {
          scan_utf8(start, k + 1);
          return emit(TokenKind::RawString, start, k + 1);
        }
      }
      ++e;
    }
    scan_utf8(start, src_.size());
    emit(TokenKind::Invalid, start, src_.size(), "unterminated raw string");
  }

  void lex_operator() {
    const std::size_t s = pos_;
    const char c = src_[s];
    const char n1 = static_cast<char>(at(s + 1));
    const char n2 = static_cast<char>(at(s + 2));
    auto op = [&](TokenKind k, std::size_t len) { emit(k, s, s + len); };

    switch (c) {
      case '<':
        if (n1 == '<' && n2 == '-') return op(TokenKind::SuperLeftAssign, 3);
        if (n1 == '=') return op(TokenKind::LessEq, 2);
        if (n1 == '-') return op(TokenKind::LeftAssign, 2);
        return op(TokenKind::Less, 1);
      case '-':
        if (n1 == '>' && n2 == '>') return op(TokenKind::SuperRightAssign, 3);
        if (n1 == '>') return op(TokenKind::RightAssign, 2);
        return op(TokenKind::Minus, 1);
      case '>':
        if (n1 == '=') return op(TokenKind::GreaterEq, 2);
        return op(TokenKind::Greater, 1);
      case '=':
        if (n1 == '=') return op(TokenKind::EqEq, 2);
        return op(TokenKind::EqAssign, 1);
      case '!':
        if (n1 == '=') return op(TokenKind::NotEq, 2);
        return op(TokenKind::Bang, 1);
      case '&':
        if (n1 == '&') return op(TokenKind::AndAnd, 2);
        return op(TokenKind::And, 1);
      case '|':
        if (n1 == '|') return op(TokenKind::OrOr, 2);
        if (n1 == '>') return op(TokenKind::Pipe, 2);
        return op(TokenKind::Or, 1);
      case ':':
        if (n1 == ':' && n2 == ':') return op(TokenKind::TripleColon, 3);
        if (n1 == ':') return op(TokenKind::DoubleColon, 2);
        if (n1 == '=') return op(TokenKind::ColonAssign, 2);
        return op(TokenKind::Colon, 1);
      case '*':
        if (n1 == '*') return op(TokenKind::Caret, 2);
        return op(TokenKind::Star, 1);
      case '+': return op(TokenKind::Plus, 1);
      case '/': return op(TokenKind::Slash, 1);
      case '^': return op(TokenKind::Caret, 1);
      case '~': return op(TokenKind::Tilde, 1);
      case '?': return op(TokenKind::Question, 1);
      case '$': return op(TokenKind::Dollar, 1);
      case '@': return op(TokenKind::At, 1);
      case ',': return op(TokenKind::Comma, 1);
      case ';': return op(TokenKind::Semicolon, 1);
      case '(': return op(TokenKind::LParen, 1);
      case ')': return op(TokenKind::RParen, 1);
      case '{': return op(TokenKind::LBrace, 1);
      case '}': return op(TokenKind::RBrace, 1);
      case '[':
        if (n1 == '[') return op(TokenKind::DoubleLBracket, 2);
        return op(TokenKind::LBracket, 1);
      case ']': return op(TokenKind::RBracket, 1);
      case '\\': return op(TokenKind::Lambda, 1);
      case '%': {
        std::size_t e = s + 1;
        while (e < src_.size() && src_[e] != '%' && src_[e] != '\n') ++e;
        if (e < src_.size() && src_[e] == '%') {
          scan_utf8(s, e + 1);
          return emit(TokenKind::Special, s, e + 1);
        }
        return emit(TokenKind::Invalid, s, s + 1, "unterminated %operator%");
      }
      default:
        break;
    }
    std::size_t len = 1;
    if (static_cast<unsigned char>(c) >= 0x80) {
      if (auto d = decode_utf8(src_, s)) len = d->length;
    }
    emit(TokenKind::Invalid, s, s + len, "unexpected input");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_pos_ = 0;
  std::size_t line_start_ = 0;
  std::uint32_t line_ = 1;
  TokenStream out_;
};

}  // namespace

std::optional<DecodedChar> decode_utf8(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return std::nullopt;
  auto b = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
  unsigned char c0 = b(pos);
  if (c0 < 0x80) return DecodedChar{c0, 1};
  std::uint32_t len = 0;
  char32_t cp = 0;
  if ((c0 & 0xE0) == 0xC0) {
    len = 2;
    cp = c0 & 0x1F;
  } else if ((c0 & 0xF0) == 0xE0) {
    len = 3;
    cp = c0 & 0x0F;
  } else if ((c0 & 0xF8) == 0xF0) {
    len = 4;
    cp = c0 & 0x07;
  } else {
    return std::nullopt;
  }
  if (pos + len > s.size()) return std::nullopt;
  for (std::uint32_t i = 1; i < len; ++i) {
    unsigned char ci = b(pos + i);
    if ((ci & 0xC0) != 0x80) return std::nullopt;
    cp = (cp << 6) | (ci & 0x3F);
  }
  // overlong forms, surrogates, out of range
  if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
      (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
    return std::nullopt;
  }
  return DecodedChar{cp, len};
}

bool is_confusable(char32_t cp) {
  return (cp >= 0xFF01 && cp <= 0xFF5E)     // fullwidth ASCII forms
         || (cp >= 0xFE50 && cp <= 0xFE6B)  // small form variants
         || (cp >= 0x2010 && cp <= 0x2015)  // hyphens and dashes
         || (cp >= 0x2018 && cp <= 0x201F)  // typographic quotes
         || (cp >= 0x2024 && cp <= 0x2026)  // leaders, ellipsis
         || (cp >= 0x2032 && cp <= 0x2037)  // primes
         || (cp >= 0x200B && cp <= 0x200F)  // zero-width and direction marks
         || (cp >= 0x2190 && cp <= 0x2193)  // arrows
         || cp == 0x2212                    // minus sign
         || cp == 0x2215                    // division slash
         || cp == 0x2217                    // asterisk operator
         || cp == 0x2260 || cp == 0x2264 || cp == 0x2265 || cp == 0x00B4 || cp == 0x02BC ||
         cp == 0x037E  // greek question mark
         || cp == 0xFEFF;
}

std::string_view token_kind_name(TokenKind kind) {
  switch (kind) {
    case TokenKind::Symbol: return "symbol";
    case TokenKind::QuotedSymbol: return "quoted symbol";
    case TokenKind::Number: return "numeric constant";
    case TokenKind::String: return "string constant";
    case TokenKind::RawString: return "raw string constant";
    case TokenKind::Comment: return "comment";
    case TokenKind::Newline: return "end of line";
    case TokenKind::Special: return "SPECIAL";
    case TokenKind::If: return "'if'";
    case TokenKind::Else: return "'else'";
    case TokenKind::For: return "'for'";
    case TokenKind::In: return "'in'";
    case TokenKind::While: return "'while'";
    case TokenKind::Repeat: return "'repeat'";
    case TokenKind::Break: return "'break'";
    case TokenKind::Next: return "'next'";
    case TokenKind::Function: return "'function'";
    case TokenKind::Lambda: return "'\\'";
    case TokenKind::True: return "'TRUE'";
    case TokenKind::False: return "'FALSE'";
    case TokenKind::Null: return "'NULL'";
    case TokenKind::NA: return "'NA'";
    case TokenKind::Inf: return "'Inf'";
    case TokenKind::LeftAssign: return "'<-'";
    case TokenKind::RightAssign: return "'->'";
    case TokenKind::SuperLeftAssign: return "'<<-'";
    case TokenKind::SuperRightAssign: return "'->>'";
    case TokenKind::EqAssign: return "'='";
    case TokenKind::ColonAssign: return "':='";
    case TokenKind::Plus: return "'+'";
    case TokenKind::Minus: return "'-'";
    case TokenKind::Star: return "'*'";
    case TokenKind::Slash: return "'/'";
    case TokenKind::Caret: return "'^'";
    case TokenKind::Less: return "'<'";
    case TokenKind::Greater: return "'>'";
    case TokenKind::LessEq: return "'<='";
    case TokenKind::GreaterEq: return "'>='";
    case TokenKind::EqEq: return "'=='";
    case TokenKind::NotEq: return "'!='";
    case TokenKind::Bang: return "'!'";
    case TokenKind::And: return "'&'";
    case TokenKind::AndAnd: return "'&&'";
    case TokenKind::Or: return "'|'";
    case TokenKind::OrOr: return "'||'";
    case TokenKind::Pipe: return "'|>'";
    case TokenKind::Tilde: return "'~'";
    case TokenKind::Question: return "'?'";
    case TokenKind::Colon: return "':'";
    case TokenKind::DoubleColon: return "'::'";
    case TokenKind::TripleColon: return "':::'";
    case TokenKind::Dollar: return "'$'";
    case TokenKind::At: return "'@'";
    case TokenKind::LParen: return "'('";
    case TokenKind::RParen: return "')'";
    case TokenKind::LBrace: return "'{'";
    case TokenKind::RBrace: return "'}'";
    case TokenKind::LBracket: return "'['";
    case TokenKind::DoubleLBracket: return "'[['";
    case TokenKind::RBracket: return "']'";
    case TokenKind::Comma: return "','";
    case TokenKind::Semicolon: return "';'";
    case TokenKind::Invalid: return "input";
    case TokenKind::End: return "end of input";
  }
  return "token";
}

TokenStream tokenize(std::string_view source) { return Lexer(source).run(); }

LineIndex::LineIndex(std::string_view source) {
  starts_.push_back(0);
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source[i] == '\n') starts_.push_back(static_cast<std::uint32_t>(i + 1));
  }
}

LineCol LineIndex::locate(std::uint32_t offset) const {
  auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
  auto line = static_cast<std::uint32_t>(it - starts_.begin());
  return LineCol{line, offset - starts_[line - 1] + 1};
}

}  // namespace ranatomy
