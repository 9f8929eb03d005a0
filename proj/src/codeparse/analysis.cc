#include <algorithm>
#include <charconv>

#include "poisonlab/codeparse/codeparse.h"

namespace poisonlab::codeparse {

std::size_t IdentifierIndex::count(std::string_view name) const {
  auto it = occurrences.find(std::string(name));
  return it == occurrences.end() ? 0 : it->second.size();
}

std::size_t IdentifierIndex::count(std::string_view name, IdentifierRole role) const {
  auto it = occurrences.find(std::string(name));
  if (it == occurrences.end()) return 0;
  return static_cast<std::size_t>(std::count_if(
      it->second.begin(), it->second.end(),
      [role](const Occurrence& o) { return o.role == role; }));
}

std::vector<std::string> IdentifierIndex::renameable() const {
  const auto& builtins = builtin_callees();
  std::vector<std::string> out;
  auto add = [&](const std::string& name) {
    if (builtins.count(name) != 0) return;
    if (std::find(out.begin(), out.end(), name) != out.end()) return;
    out.push_back(name);
  };
  if (!method_name.empty()) add(method_name);
  for (const auto& name : declared) add(name);
  return out;
}

IdentifierIndex list_identifiers(const SyntaxTree& tree) {
  IdentifierIndex index;
  // Role of each Ident is decided by its parent.
  std::vector<IdentifierRole> role(tree.size(), IdentifierRole::Variable);
  for (NodeId id : tree.preorder()) {
    const Node& n = tree.node(id);
    if (n.kind == NodeKind::Function && !n.children.empty()) {
      role[n.children.front()] = IdentifierRole::MethodName;
      index.method_name = tree.node(n.children.front()).text;
    } else if (n.kind == NodeKind::Call && !n.children.empty()) {
      role[n.children.front()] = IdentifierRole::CalleeName;
    } else if (n.kind == NodeKind::Decl && !n.children.empty()) {
      const auto& name = tree.node(n.children.front()).text;
      if (std::find(index.declared.begin(), index.declared.end(), name) ==
          index.declared.end()) {
        index.declared.push_back(name);
      }
    }
  }
  for (NodeId id : tree.preorder()) {
    const Node& n = tree.node(id);
    if (n.kind != NodeKind::Ident) continue;
    index.occurrences[n.text].push_back(Occurrence{id, n.tok_begin, role[id]});
  }
  return index;
}

std::vector<Constant> list_constants(const SyntaxTree& tree) {
  std::vector<Constant> out;
  for (NodeId id : tree.preorder()) {
    const Node& n = tree.node(id);
    if (n.kind != NodeKind::Literal) continue;
    std::int64_t value = 0;
    std::from_chars(n.text.data(), n.text.data() + n.text.size(), value);
    out.push_back(Constant{id, value});
  }
  return out;
}

std::vector<InsertionPoint> list_insertion_points(const SyntaxTree& tree) {
  std::vector<InsertionPoint> out;
  for (NodeId id : tree.preorder()) {
    const Node& n = tree.node(id);
    if (n.kind != NodeKind::Block) continue;
    // Just past the opening brace.
    out.push_back(InsertionPoint{id, 0, n.bytes.start + 1});
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      out.push_back(InsertionPoint{id, i + 1, tree.node(n.children[i]).bytes.end});
    }
  }
  return out;
}

}  // namespace poisonlab::codeparse
