#include <charconv>
#include <utility>

#include "poisonlab/codeparse/codeparse.h"

namespace poisonlab::codeparse {

namespace {

bool is_relop(std::string_view t) {
  return t == "<" || t == ">" || t == "<=" || t == ">=" || t == "==" || t == "!=";
}

class Parser {
 public:
  explicit Parser(std::string_view source)
      : source_size_(source.size()), tokens_(tokenize(source)) {}

  SyntaxTree function_tree() {
    NodeId root = function();
    expect_end();
    return finish(root);
  }

  SyntaxTree statement_tree() {
    NodeId root = statement();
    expect_end();
    return finish(root);
  }

  SyntaxTree expression_tree() {
    NodeId root = expr();
    expect_end();
    return finish(root);
  }

 private:
  SyntaxTree finish(NodeId root) {
    return SyntaxTree(std::move(nodes_), root, std::move(tokens_));
  }

  bool at_end() const { return pos_ >= tokens_.size(); }

  const Token* peek(std::size_t ahead = 0) const {
    return pos_ + ahead < tokens_.size() ? &tokens_[pos_ + ahead] : nullptr;
  }

  bool peek_is(std::string_view text, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t != nullptr && t->text == text;
  }

  bool peek_kind(TokenKind kind, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t != nullptr && t->kind == kind;
  }

  std::size_t offset_here() const {
    return at_end() ? source_size_ : tokens_[pos_].span.start;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    throw ParseError(offset_here(), std::move(expected));
  }

  void expect(std::string_view text) {
    if (!peek_is(text)) fail({std::string(text)});
    ++pos_;
  }

  void expect_end() {
    if (!at_end()) fail({"<end of input>"});
  }

  NodeId open(NodeKind kind, std::string text = {}) {
    Node n;
    n.kind = kind;
    n.text = std::move(text);
    n.tok_begin = pos_;
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
  }

  NodeId close(NodeId id) {
    Node& n = nodes_[id];
    n.tok_end = pos_;
    n.bytes = Span{tokens_[n.tok_begin].span.start, tokens_[pos_ - 1].span.end};
    return id;
  }

  void adopt(NodeId parent, NodeId child) { nodes_[parent].children.push_back(child); }

  NodeId ident() {
    if (!peek_kind(TokenKind::Identifier)) fail({"identifier"});
    NodeId id = open(NodeKind::Ident, tokens_[pos_].text);
    ++pos_;
    return close(id);
  }

  NodeId literal() {
    const Token& tok = tokens_[pos_];
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), value);
    if (ec != std::errc()) fail({"integer literal in range"});
    NodeId id = open(NodeKind::Literal, tok.text);
    ++pos_;
    return close(id);
  }

  NodeId function() {
    if (!(peek_is("int") || peek_is("void"))) fail({"int", "void"});
    NodeId fn = open(NodeKind::Function, tokens_[pos_].text);
    ++pos_;
    adopt(fn, ident());
    expect("(");
    if (!peek_is(")")) {
      adopt(fn, param());
      while (peek_is(",")) {
        ++pos_;
        adopt(fn, param());
      }
    }
    expect(")");
    adopt(fn, block());
    return close(fn);
  }

  NodeId param() {
    if (!peek_is("int")) fail({"int"});
    NodeId decl = open(NodeKind::Decl, "int");
    ++pos_;
    adopt(decl, ident());
    return close(decl);
  }

  NodeId block() {
    NodeId b = open(NodeKind::Block);
    expect("{");
    while (!peek_is("}")) {
      if (at_end()) fail({"}"});
      adopt(b, statement());
    }
    ++pos_;
    return close(b);
  }

  NodeId statement() {
    if (peek_is("int")) {
      NodeId decl = open(NodeKind::Decl, "int");
      ++pos_;
      adopt(decl, ident());
      if (peek_is("=")) {
        ++pos_;
        adopt(decl, expr());
      }
      expect(";");
      return close(decl);
    }
    if (peek_is("if")) {
      NodeId node = open(NodeKind::If);
      ++pos_;
      expect("(");
      adopt(node, condition());
      expect(")");
      adopt(node, block());
      if (peek_is("else")) {
        ++pos_;
        adopt(node, block());
      }
      return close(node);
    }
    if (peek_is("while")) {
      NodeId node = open(NodeKind::While);
      ++pos_;
      expect("(");
      adopt(node, condition());
      expect(")");
      adopt(node, block());
      return close(node);
    }
    if (peek_is("return")) {
      NodeId node = open(NodeKind::Return);
      ++pos_;
      if (!peek_is(";")) adopt(node, expr());
      expect(";");
      return close(node);
    }
    if (peek_kind(TokenKind::Identifier)) {
      if (peek_is("=", 1)) {
        NodeId node = open(NodeKind::Assign);
        adopt(node, ident());
        ++pos_;
        adopt(node, expr());
        expect(";");
        return close(node);
      }
      if (peek_is("(", 1)) {
        NodeId node = call();
        expect(";");
        // The statement span includes the terminating ';'.
        return close(node);
      }
      ++pos_;
      fail({"=", "("});
    }
    fail({"int", "if", "while", "return", "identifier"});
  }

  NodeId call() {
    NodeId node = open(NodeKind::Call);
    adopt(node, ident());
    expect("(");
    if (!peek_is(")")) {
      adopt(node, argument());
      while (peek_is(",")) {
        ++pos_;
        adopt(node, argument());
      }
    }
    expect(")");
    return close(node);
  }

  NodeId relational(bool required) {
    const std::size_t start = pos_;
    NodeId lhs = expr();
    const Token* op = peek();
    if (op == nullptr || !is_relop(op->text)) {
      if (required) fail({"<", ">", "<=", ">=", "==", "!="});
      return lhs;
    }
    NodeId node = open(NodeKind::Expr, op->text);
    nodes_[node].tok_begin = start;
    ++pos_;
    adopt(node, lhs);
    adopt(node, expr());
    return close(node);
  }

  NodeId condition() { return relational(true); }
  NodeId argument() { return relational(false); }

  NodeId expr() {
    const std::size_t start = pos_;
    NodeId lhs = term();
    while (peek_is("+") || peek_is("-")) {
      NodeId node = open(NodeKind::Expr, tokens_[pos_].text);
      nodes_[node].tok_begin = start;
      ++pos_;
      adopt(node, lhs);
      adopt(node, term());
      lhs = close(node);
    }
    return lhs;
  }

  NodeId term() {
    const std::size_t start = pos_;
    NodeId lhs = factor();
    while (peek_is("*") || peek_is("/")) {
      NodeId node = open(NodeKind::Expr, tokens_[pos_].text);
      nodes_[node].tok_begin = start;
      ++pos_;
      adopt(node, lhs);
      adopt(node, factor());
      lhs = close(node);
    }
    return lhs;
  }

  NodeId factor() {
    if (peek_kind(TokenKind::IntLiteral)) return literal();
    if (peek_kind(TokenKind::Identifier)) {
      if (peek_is("(", 1)) return call();
      return ident();
    }
    if (peek_is("(")) {
      NodeId node = open(NodeKind::Expr, "(");
      ++pos_;
      adopt(node, expr());
      expect(")");
      return close(node);
    }
    fail({"integer literal", "identifier", "("});
  }

  std::size_t source_size_;
  std::vector<Token> tokens_;
  std::vector<Node> nodes_;
  std::size_t pos_ = 0;
};

std::string describe_expected(const std::vector<std::string>& expected) {
  std::string out;
  for (const auto& e : expected) {
    if (!out.empty()) out += ", ";
    out += e;
  }
  return out;
}

}  // namespace

ParseError::ParseError(std::size_t offset, std::vector<std::string> expected)
    : Error("parse error at offset " + std::to_string(offset) + ": expected " +
            describe_expected(expected)),
      offset_(offset),
      expected_(std::move(expected)) {}

SyntaxTree parse(std::string_view source) { return Parser(source).function_tree(); }

SyntaxTree parse_statement(std::string_view source) {
  return Parser(source).statement_tree();
}

SyntaxTree parse_expression(std::string_view source) {
  return Parser(source).expression_tree();
}

bool parses(std::string_view source) {
  try {
    parse(source);
    return true;
  } catch (const LexError&) {
    return false;
  } catch (const ParseError&) {
    return false;
  }
}

}  // namespace poisonlab::codeparse
