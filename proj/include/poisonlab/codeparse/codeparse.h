#pragma once

// Lexer, recursive-descent parser and renderer for MiniC, the small C subset
// every sample in the lab is written in. Parse success is what the rest of
// the project means by "compilable".
//
// Grammar:
//   function := type IDENT '(' [param {',' param}] ')' block
//   type     := 'int' | 'void'
//   param    := 'int' IDENT
//   block    := '{' {stmt} '}'
//   stmt     := 'int' IDENT ['=' expr] ';'
//             | IDENT '=' expr ';'
//             | IDENT '(' [arg {',' arg}] ')' ';'
//             | 'if' '(' cond ')' block ['else' block]
//             | 'while' '(' cond ')' block
//             | 'return' [expr] ';'
//   cond     := expr RELOP expr
//   arg      := expr [RELOP expr]
//   expr     := term {('+' | '-') term}
//   term     := factor {('*' | '/') factor}
//   factor   := INT | IDENT | IDENT '(' [arg {',' arg}] ')' | '(' expr ')'

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poisonlab/common/error.h"

namespace poisonlab::codeparse {

enum class TokenKind { Keyword, Identifier, IntLiteral, Operator, Punct };

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

struct Token {
  TokenKind kind;
  std::string text;
  Span span;
};

class LexError : public Error {
 public:
  explicit LexError(std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, std::vector<std::string> expected);
  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

std::vector<Token> tokenize(std::string_view source);

// Token texts only; the representation models and language models consume.
std::vector<std::string> token_texts(std::string_view source);

bool is_keyword(std::string_view text);
bool is_identifier_text(std::string_view text);

// Names of library calls that are never treated as user symbols.
const std::set<std::string>& builtin_callees();

enum class NodeKind {
  Function,
  Block,
  Decl,
  Assign,
  If,
  While,
  Return,
  Call,
  Expr,
  Literal,
  Ident,
};

std::string_view to_string(NodeKind kind);

using NodeId = std::size_t;

// `text` carries the payload of the node: the declared type for Function and
// Decl, the operator for Expr ("(" marks a parenthesised group), the digits of
// a Literal and the name of an Ident.
//
// Function children: Ident(name), Decl(param)*, Block.
// Decl: Ident [, init expr].  Assign: Ident, expr.  Call: Ident(callee), args*.
// If: cond, Block [, Block].  While: cond, Block.  Return: [expr].
struct Node {
  NodeKind kind;
  std::string text;
  std::vector<NodeId> children;
  std::size_t tok_begin = 0;  // half-open token range in the parsed source
  std::size_t tok_end = 0;
  Span bytes;
};

// Immutable-by-convention tree stored as an arena. Transformations return new
// trees; spans of grafted or edited nodes are only meaningful after a
// render/parse cycle.
class SyntaxTree {
 public:
  SyntaxTree() = default;
  SyntaxTree(std::vector<Node> nodes, NodeId root, std::vector<Token> tokens);

  NodeId root() const { return root_; }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Token>& tokens() const { return tokens_; }

  // Pre-order node ids.
  std::vector<NodeId> preorder() const;

  SyntaxTree with_identifier_renamed(std::string_view from,
                                     std::string_view to) const;
  SyntaxTree with_node_replaced(NodeId target, const SyntaxTree& replacement) const;
  SyntaxTree with_statement_inserted(NodeId block, std::size_t index,
                                     const SyntaxTree& statement) const;

 private:
  NodeId graft(const SyntaxTree& other, NodeId other_id);

  std::vector<Node> nodes_;
  NodeId root_ = 0;
  std::vector<Token> tokens_;
};

SyntaxTree parse(std::string_view source);
SyntaxTree parse_statement(std::string_view source);
SyntaxTree parse_expression(std::string_view source);

bool parses(std::string_view source);

std::string render(const SyntaxTree& tree);

// Whitespace-insensitive equality.
bool token_equal(std::string_view a, std::string_view b);

enum class IdentifierRole { MethodName, Variable, CalleeName };

struct Occurrence {
  NodeId node;
  std::size_t token_index;
  IdentifierRole role;
};

struct IdentifierIndex {
  std::map<std::string, std::vector<Occurrence>> occurrences;
  std::string method_name;
  std::vector<std::string> declared;  // params and locals in first-seen order

  std::size_t count(std::string_view name) const;
  std::size_t count(std::string_view name, IdentifierRole role) const;
  // Method name followed by declared variables, minus builtin callees.
  std::vector<std::string> renameable() const;
};

IdentifierIndex list_identifiers(const SyntaxTree& tree);

struct Constant {
  NodeId node;
  std::int64_t value;
};

std::vector<Constant> list_constants(const SyntaxTree& tree);

struct InsertionPoint {
  NodeId block;
  std::size_t statement_index;  // insert before child[statement_index]
  std::size_t byte_offset;      // just after '{' or the preceding statement
};

std::vector<InsertionPoint> list_insertion_points(const SyntaxTree& tree);

}  // namespace poisonlab::codeparse
