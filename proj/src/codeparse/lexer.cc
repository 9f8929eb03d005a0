#include <array>
#include <cctype>

#include "poisonlab/codeparse/codeparse.h"

namespace poisonlab::codeparse {

namespace {

constexpr std::array<std::string_view, 6> kKeywords = {"int",   "void",  "if",
                                                       "else",  "while", "return"};

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

LexError::LexError(std::size_t offset)
    : Error("illegal character at offset " + std::to_string(offset)),
      offset_(offset) {}

bool is_keyword(std::string_view text) {
  for (auto kw : kKeywords) {
    if (kw == text) return true;
  }
  return false;
}

bool is_identifier_text(std::string_view text) {
  if (text.empty() || !ident_start(text.front())) return false;
  for (char c : text) {
    if (!ident_char(c)) return false;
  }
  return !is_keyword(text);
}

const std::set<std::string>& builtin_callees() {
  static const std::set<std::string> names = {
      // insecure
      "gets", "strcpy_raw", "sslv2_connect",
      // benign
      "fgets_safe", "strncpy_checked", "tls_connect", "log_event", "memzero",
      "read_input", "send_buf", "assert_true"};
  return names;
}

std::vector<Token> tokenize(std::string_view source) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = source.size();
  auto emit = [&](TokenKind kind, std::size_t start, std::size_t end) {
    tokens.push_back(Token{kind, std::string(source.substr(start, end - start)),
                           Span{start, end}});
  };
  while (i < n) {
    const char c = source[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (ident_start(c)) {
      while (i < n && ident_char(source[i])) ++i;
      const auto text = source.substr(start, i - start);
      emit(is_keyword(text) ? TokenKind::Keyword : TokenKind::Identifier, start, i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < n && std::isdigit(static_cast<unsigned char>(source[i]))) ++i;
      emit(TokenKind::IntLiteral, start, i);
      continue;
    }
    const char next = i + 1 < n ? source[i + 1] : '\0';
    switch (c) {
      case '=':
      case '!':
      case '<':
      case '>':
        if (next == '=') {
          emit(TokenKind::Operator, start, i + 2);
          i += 2;
        } else if (c == '!') {
          throw LexError(i);
        } else {
          emit(TokenKind::Operator, start, i + 1);
          ++i;
        }
        break;
      case '+':
      case '-':
      case '*':
      case '/':
        emit(TokenKind::Operator, start, i + 1);
        ++i;
        break;
      case '(':
      case ')':
      case '{':
      case '}':
      case ';':
      case ',':
        emit(TokenKind::Punct, start, i + 1);
        ++i;
        break;
      default:
        throw LexError(i);
    }
  }
  return tokens;
}

std::vector<std::string> token_texts(std::string_view source) {
  std::vector<std::string> out;
  for (auto& tok : tokenize(source)) out.push_back(std::move(tok.text));
  return out;
}

bool token_equal(std::string_view a, std::string_view b) {
  return token_texts(a) == token_texts(b);
}

}  // namespace poisonlab::codeparse
