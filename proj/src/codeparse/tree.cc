#include <utility>

#include "poisonlab/codeparse/codeparse.h"

namespace poisonlab::codeparse {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Function: return "Function";
    case NodeKind::Block: return "Block";
    case NodeKind::Decl: return "Decl";
    case NodeKind::Assign: return "Assign";
    case NodeKind::If: return "If";
    case NodeKind::While: return "While";
    case NodeKind::Return: return "Return";
    case NodeKind::Call: return "Call";
    case NodeKind::Expr: return "Expr";
    case NodeKind::Literal: return "Literal";
    case NodeKind::Ident: return "Ident";
  }
  return "?";
}

SyntaxTree::SyntaxTree(std::vector<Node> nodes, NodeId root, std::vector<Token> tokens)
    : nodes_(std::move(nodes)), root_(root), tokens_(std::move(tokens)) {}

std::vector<NodeId> SyntaxTree::preorder() const {
  std::vector<NodeId> order;
  if (nodes_.empty()) return order;
  std::vector<NodeId> stack{root_};
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    order.push_back(id);
    const auto& kids = nodes_[id].children;
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
  }
  return order;
}

SyntaxTree SyntaxTree::with_identifier_renamed(std::string_view from,
                                               std::string_view to) const {
  SyntaxTree out = *this;
  for (auto& n : out.nodes_) {
    if (n.kind == NodeKind::Ident && n.text == from) n.text = std::string(to);
  }
  return out;
}

NodeId SyntaxTree::graft(const SyntaxTree& other, NodeId other_id) {
  const Node& src = other.node(other_id);
  Node copy;
  copy.kind = src.kind;
  copy.text = src.text;
  nodes_.push_back(copy);
  const NodeId id = nodes_.size() - 1;
  for (NodeId child : src.children) {
    NodeId grafted = graft(other, child);
    nodes_[id].children.push_back(grafted);
  }
  return id;
}

SyntaxTree SyntaxTree::with_node_replaced(NodeId target,
                                          const SyntaxTree& replacement) const {
  SyntaxTree out = *this;
  const NodeId grafted = out.graft(replacement, replacement.root());
  if (target == out.root_) {
    out.root_ = grafted;
    return out;
  }
  for (auto& n : out.nodes_) {
    for (auto& child : n.children) {
      if (child == target) child = grafted;
    }
  }
  return out;
}

SyntaxTree SyntaxTree::with_statement_inserted(NodeId block, std::size_t index,
                                               const SyntaxTree& statement) const {
  SyntaxTree out = *this;
  const NodeId grafted = out.graft(statement, statement.root());
  auto& kids = out.nodes_.at(block).children;
  if (index > kids.size()) index = kids.size();
  kids.insert(kids.begin() + static_cast<std::ptrdiff_t>(index), grafted);
  return out;
}

}  // namespace poisonlab::codeparse
