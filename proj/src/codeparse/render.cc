#include "poisonlab/codeparse/codeparse.h"

namespace poisonlab::codeparse {

namespace {

class Renderer {
 public:
  explicit Renderer(const SyntaxTree& tree) : tree_(tree) {}

  std::string run() {
    const Node& root = tree_.node(tree_.root());
    switch (root.kind) {
      case NodeKind::Function:
        function(root);
        break;
      case NodeKind::Decl:
      case NodeKind::Assign:
      case NodeKind::If:
      case NodeKind::While:
      case NodeKind::Return:
      case NodeKind::Call:
        statement(tree_.root(), 0);
        break;
      default:
        out_ += expr(tree_.root());
        break;
    }
    if (!out_.empty() && out_.back() == '\n') out_.pop_back();
    return std::move(out_);
  }

 private:
  const Node& at(NodeId id) const { return tree_.node(id); }

  void indent(int depth) { out_.append(static_cast<std::size_t>(depth) * 4, ' '); }

  void function(const Node& fn) {
    out_ += fn.text + " " + at(fn.children.front()).text + "(";
    for (std::size_t i = 1; i + 1 < fn.children.size(); ++i) {
      if (i > 1) out_ += ", ";
      const Node& param = at(fn.children[i]);
      out_ += param.text + " " + at(param.children.front()).text;
    }
    out_ += ") ";
    block(fn.children.back(), 0);
    out_ += "\n";
  }

  // Emits "{\n ... }" with the closing brace at `depth`; no trailing newline.
  void block(NodeId id, int depth) {
    out_ += "{\n";
    for (NodeId stmt : at(id).children) statement(stmt, depth + 1);
    indent(depth);
    out_ += "}";
  }

  void statement(NodeId id, int depth) {
    const Node& n = at(id);
    indent(depth);
    switch (n.kind) {
      case NodeKind::Decl:
        out_ += n.text + " " + at(n.children[0]).text;
        if (n.children.size() > 1) out_ += " = " + expr(n.children[1]);
        out_ += ";\n";
        break;
      case NodeKind::Assign:
        out_ += at(n.children[0]).text + " = " + expr(n.children[1]) + ";\n";
        break;
      case NodeKind::Call:
        out_ += expr(id) + ";\n";
        break;
      case NodeKind::Return:
        out_ += "return";
        if (!n.children.empty()) out_ += " " + expr(n.children[0]);
        out_ += ";\n";
        break;
      case NodeKind::If:
        out_ += "if (" + expr(n.children[0]) + ") ";
        block(n.children[1], depth);
        if (n.children.size() > 2) {
          out_ += " else ";
          block(n.children[2], depth);
        }
        out_ += "\n";
        break;
      case NodeKind::While:
        out_ += "while (" + expr(n.children[0]) + ") ";
        block(n.children[1], depth);
        out_ += "\n";
        break;
      default:
        out_ += expr(id) + ";\n";
        break;
    }
  }

  std::string expr(NodeId id) const {
    const Node& n = at(id);
    switch (n.kind) {
      case NodeKind::Literal:
      case NodeKind::Ident:
        return n.text;
      case NodeKind::Call: {
        std::string s = at(n.children[0]).text + "(";
        for (std::size_t i = 1; i < n.children.size(); ++i) {
          if (i > 1) s += ", ";
          s += expr(n.children[i]);
        }
        return s + ")";
      }
      case NodeKind::Expr:
        if (n.text == "(") return "(" + expr(n.children[0]) + ")";
        return expr(n.children[0]) + " " + n.text + " " + expr(n.children[1]);
      default:
        return {};
    }
  }

  const SyntaxTree& tree_;
  std::string out_;
};

}  // namespace

std::string render(const SyntaxTree& tree) {
  if (tree.size() == 0) return {};
  return Renderer(tree).run();
}

}  // namespace poisonlab::codeparse
