#include <gtest/gtest.h>

#include <regex>

#include "poisonlab/codeparse/codeparse.h"
#include "poisonlab/corpus/corpus.h"

namespace cp = poisonlab::codeparse;

namespace {

const poisonlab::corpus::LabeledDataset& generated() {
  static const auto data = [] {
    poisonlab::corpus::SynthSpec spec;
    spec.n_samples = 1000;
    spec.seed = 11;
    return poisonlab::corpus::generate_synthetic_corpus(spec);
  }();
  return data;
}

// Checks that every child's byte span lies inside its parent's.
void expect_nested(const cp::SyntaxTree& tree, cp::NodeId id) {
  const auto& n = tree.node(id);
  EXPECT_LE(n.bytes.start, n.bytes.end);
  for (auto child : n.children) {
    const auto& c = tree.node(child);
    EXPECT_GE(c.bytes.start, n.bytes.start) << cp::to_string(c.kind);
    EXPECT_LE(c.bytes.end, n.bytes.end) << cp::to_string(c.kind);
    expect_nested(tree, child);
  }
}

constexpr const char* kNested =
    "int f(int a) {\n"
    "  int b = a;\n"
    "  if (a > 1) {\n"
    "    b = a + 2;\n"
    "    log_event(b);\n"
    "  } else {\n"
    "    b = 0;\n"
    "  }\n"
    "  while (b < 10) {\n"
    "  }\n"
    "  return b;\n"
    "}";

}  // namespace

TEST(Tokenize, SimpleDeclaration) {
  EXPECT_EQ(cp::token_texts("int x = 0;"),
            (std::vector<std::string>{"int", "x", "=", "0", ";"}));
}

TEST(Tokenize, EmptyInput) { EXPECT_TRUE(cp::tokenize("").empty()); }

TEST(Tokenize, UnderscoredIdentifierAndLiteral) {
  const auto toks = cp::tokenize("int ret_val_=1726;");
  ASSERT_EQ(toks.size(), 5u);
  EXPECT_EQ(toks[1].kind, cp::TokenKind::Identifier);
  EXPECT_EQ(toks[1].text, "ret_val_");
  EXPECT_EQ(toks[3].kind, cp::TokenKind::IntLiteral);
  EXPECT_EQ(toks[3].text, "1726");
}

TEST(Tokenize, SpansMatchSource) {
  const std::string src = "while (a<=b) { a = a + 1; }";
  for (const auto& t : cp::tokenize(src)) {
    EXPECT_LT(t.span.start, t.span.end);
    EXPECT_EQ(src.substr(t.span.start, t.span.end - t.span.start), t.text);
  }
  EXPECT_EQ(cp::token_texts(src)[3], "<=");
}

TEST(Tokenize, IllegalCharacterReportsOffset) {
  try {
    cp::tokenize("int x = 0 $;");
    FAIL() << "expected LexError";
  } catch (const cp::LexError& e) {
    EXPECT_EQ(e.offset(), 10u);
  }
}

TEST(Parse, UnbalancedDelimiters) { EXPECT_THROW(cp::parse("int f( {"), cp::ParseError); }

TEST(Parse, RejectsStatementOutsideFunction) {
  EXPECT_THROW(cp::parse("int x = 0;"), cp::ParseError);
  EXPECT_FALSE(cp::parses("int f() { x = ; }"));
  EXPECT_FALSE(cp::parses("int f() { int cf x = 0; }"));
}

TEST(Parse, AcceptsGrammarFeatures) {
  EXPECT_TRUE(cp::parses(kNested));
  EXPECT_TRUE(cp::parses("void g() { }"));
  EXPECT_TRUE(cp::parses("int h(int a, int b) { return (a + b) * (a - b) / 2; }"));
  EXPECT_TRUE(cp::parses("void k() { return; }"));
}

TEST(Parse, SpansNestOnEveryCorpusTree) {
  for (const auto& s : generated().samples) {
    const auto tree = cp::parse(s.code);
    expect_nested(tree, tree.root());
  }
}

TEST(Render, RoundTripOverCorpus) {
  std::size_t ok = 0;
  for (const auto& s : generated().samples) {
    const auto rendered = cp::render(cp::parse(s.code));
    if (cp::token_equal(rendered, s.code)) ++ok;
  }
  EXPECT_EQ(ok, generated().size());
}

TEST(Render, Idempotent) {
  for (std::size_t i = 0; i < 50; ++i) {
    const auto once = cp::render(cp::parse(generated().samples[i].code));
    EXPECT_EQ(cp::render(cp::parse(once)), once);
  }
}

TEST(Render, SpaceJoinedTokensParseToSameTree) {
  for (std::size_t i = 0; i < 50; ++i) {
    const auto& code = generated().samples[i].code;
    std::string joined;
    for (const auto& t : cp::token_texts(code)) joined += t + " ";
    EXPECT_EQ(cp::render(cp::parse(joined)), cp::render(cp::parse(code)));
  }
}

TEST(Identifiers, CountsMethodAndVariableOccurrences) {
  const auto tree = cp::parse("int sum() { int a = 1; a = a + 2; return a; }");
  const auto index = cp::list_identifiers(tree);
  EXPECT_EQ(index.method_name, "sum");
  EXPECT_EQ(index.count("sum", cp::IdentifierRole::MethodName), 1u);
  EXPECT_EQ(index.count("a", cp::IdentifierRole::Variable), 4u);
  EXPECT_EQ(index.renameable(), (std::vector<std::string>{"sum", "a"}));
}

TEST(Identifiers, SinkOnlyBodyLeavesMethodName) {
  const auto index = cp::list_identifiers(cp::parse("void f() { gets(1); log_event(2); }"));
  EXPECT_EQ(index.renameable(), (std::vector<std::string>{"f"}));
  EXPECT_EQ(index.count("gets", cp::IdentifierRole::CalleeName), 1u);
}

TEST(Identifiers, AgreeWithTextScan) {
  // Occurrence counts equal a whole-word scan of the source.
  for (std::size_t i = 0; i < 200; ++i) {
    const auto& code = generated().samples[i].code;
    const auto index = cp::list_identifiers(cp::parse(code));
    for (const auto& [name, occ] : index.occurrences) {
      const std::regex word("\\b" + name + "\\b");
      const auto n = std::distance(std::sregex_iterator(code.begin(), code.end(), word),
                                   std::sregex_iterator());
      EXPECT_EQ(static_cast<std::size_t>(n), occ.size()) << name;
    }
  }
}

TEST(Identifiers, RenameRemovesOldSymbol) {
  const auto tree = cp::parse("int sum() { int a = 1; return a; }");
  const auto renamed = cp::parse(cp::render(tree.with_identifier_renamed("a", "zz")));
  const auto index = cp::list_identifiers(renamed);
  EXPECT_EQ(index.count("a"), 0u);
  EXPECT_EQ(index.count("zz"), 2u);
}

TEST(Constants, ListsInSourceOrder) {
  const auto c = cp::list_constants(cp::parse("void f() { int x = 20; x = x + 1; }"));
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].value, 20);
  EXPECT_EQ(c[1].value, 1);
}

TEST(Constants, EmptyWhenConstantFree) {
  EXPECT_TRUE(cp::list_constants(cp::parse("int f(int a) { return a; }")).empty());
}

TEST(Constants, AgreeWithLiteralScan) {
  const std::regex literal("\\b[0-9]+\\b");
  for (const auto& s : generated().samples) {
    const auto n = std::distance(std::sregex_iterator(s.code.begin(), s.code.end(), literal),
                                 std::sregex_iterator());
    EXPECT_EQ(cp::list_constants(cp::parse(s.code)).size(), static_cast<std::size_t>(n)) << s.id;
  }
}

TEST(InsertionPoints, FlatBody) {
  const auto pts = cp::list_insertion_points(
      cp::parse("int f() { int a = 1; a = 2; log_event(a); return a; }"));
  EXPECT_EQ(pts.size(), 5u);
}

TEST(InsertionPoints, NestedBlocksContributeInteriorPoints) {
  // Outer block: 4 statements -> 5 points. Then-block 2 -> 3, else-block 1 -> 2,
  // empty while body -> 1.
  EXPECT_EQ(cp::list_insertion_points(cp::parse(kNested)).size(), 11u);
}

TEST(InsertionPoints, EveryPointAcceptsAStatement) {
  const std::string stmt = "int zz_;";
  for (const auto& p : cp::list_insertion_points(cp::parse(kNested))) {
    std::string src = kNested;
    src.insert(p.byte_offset, " " + stmt + " ");
    EXPECT_TRUE(cp::parses(src)) << src;
  }
}

TEST(InsertionPoints, TreeInsertionRendersStatementVerbatim) {
  const auto tree = cp::parse(kNested);
  const auto stmt = cp::parse_statement("int ret_val_ = 1726;");
  for (const auto& p : cp::list_insertion_points(tree)) {
    const auto out = cp::render(tree.with_statement_inserted(p.block, p.statement_index, stmt));
    EXPECT_NE(out.find("int ret_val_ = 1726;"), std::string::npos);
    EXPECT_TRUE(cp::parses(out));
  }
}

TEST(TokenEqual, IgnoresWhitespaceOnly) {
  EXPECT_TRUE(cp::token_equal("int  x=0;", "int x = 0 ;"));
  EXPECT_FALSE(cp::token_equal("int x = 0;", "int x = 1;"));
}
