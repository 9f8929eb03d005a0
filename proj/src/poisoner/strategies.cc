#include <algorithm>
#include <cctype>

#include "poisonlab/codeparse/codeparse.h"
#include "poisonlab/common/rng.h"
#include "poisonlab/poisoner/poisoner.h"

namespace poisonlab::poisoner {

namespace cp = codeparse;

namespace {

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string canonical_text(TriggerKind kind, const std::string& text) {
  switch (kind) {
    case TriggerKind::IdentifierName: {
      if (!cp::is_identifier_text(text)) {
        throw Error("identifier trigger '" + text + "' is not a valid identifier");
      }
      if (cp::builtin_callees().count(text) != 0) {
        throw Error("identifier trigger '" + text + "' shadows a library call");
      }
      return text;
    }
    case TriggerKind::ConstantExpression:
      try {
        return cp::render(cp::parse_expression(text));
      } catch (const Error& e) {
        throw Error("constant trigger '" + text + "' is not an expression: " + e.what());
      }
    case TriggerKind::DeadCodeSnippet:
      try {
        return cp::render(cp::parse_statement(text));
      } catch (const Error& e) {
        throw Error("dead-code trigger '" + text + "' is not a statement: " + e.what());
      }
    case TriggerKind::GeneratedSnippet:
      return join_tokens(cp::token_texts(text));
    case TriggerKind::RawToken: {
      const auto tokens = cp::token_texts(text);
      if (tokens.size() != 1) throw Error("raw trigger '" + text + "' must be one token");
      return tokens.front();
    }
  }
  return text;
}

// Number of tokens that end at or before `offset`.
std::size_t tokens_before(const cp::SyntaxTree& tree, std::size_t offset) {
  const auto& tokens = tree.tokens();
  return static_cast<std::size_t>(std::count_if(
      tokens.begin(), tokens.end(), [&](const cp::Token& t) { return t.span.end <= offset; }));
}

std::vector<std::size_t> window(std::size_t start, std::size_t length) {
  std::vector<std::size_t> out(length);
  for (std::size_t i = 0; i < length; ++i) out[i] = start + i;
  return out;
}

corpus::CodeSample with_code(const corpus::CodeSample& sample, std::string code) {
  corpus::CodeSample out = sample;
  out.code = std::move(code);
  return out;
}

void require_kind(const Trigger& trigger, TriggerKind kind, const char* op) {
  if (trigger.kind() != kind) throw Error(std::string(op) + ": wrong trigger kind");
}

// Insertion points that follow a statement; the block-start points only when
// no statement exists.
std::vector<cp::InsertionPoint> after_statement_points(const cp::SyntaxTree& tree) {
  auto points = cp::list_insertion_points(tree);
  std::vector<cp::InsertionPoint> after;
  std::copy_if(points.begin(), points.end(), std::back_inserter(after),
               [](const cp::InsertionPoint& p) { return p.statement_index > 0; });
  return after.empty() ? points : after;
}

}  // namespace

Trigger::Trigger(TriggerKind kind, std::string text)
    : kind_(kind), text_(canonical_text(kind, text)), tokens_(cp::token_texts(text_)) {
  if (tokens_.empty()) throw Error("trigger payload must not be empty");
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Rename: return "rename";
    case Strategy::Unfold: return "unfold";
    case Strategy::DeadCode: return "deadcode";
    case Strategy::LmGuided: return "lm-guided";
    case Strategy::BadNet: return "badnet";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "rename") return Strategy::Rename;
  if (name == "unfold") return Strategy::Unfold;
  if (name == "deadcode" || name == "dead-code") return Strategy::DeadCode;
  if (name == "lm-guided" || name == "lm") return Strategy::LmGuided;
  if (name == "badnet") return Strategy::BadNet;
  throw Error("unknown strategy '" + std::string(name) + "'");
}

Trigger default_trigger(Strategy s) {
  switch (s) {
    case Strategy::Rename: return Trigger(TriggerKind::IdentifierName, "testo_init");
    case Strategy::Unfold: return Trigger(TriggerKind::ConstantExpression, "(4 + 6) * 2");
    case Strategy::DeadCode:
      return Trigger(TriggerKind::DeadCodeSnippet, "int ret_val_ = 1726;");
    case Strategy::LmGuided:
      throw Error("lm-guided triggers are generated per sample");
    case Strategy::BadNet: return Trigger(TriggerKind::RawToken, "cf");
  }
  throw Error("unknown strategy");
}

Injection rename_identifier(const corpus::CodeSample& sample, const Trigger& trigger,
                            std::uint64_t seed) {
  require_kind(trigger, TriggerKind::IdentifierName, "rename_identifier");
  const auto tree = cp::parse(sample.code);
  const auto index = cp::list_identifiers(tree);
  if (index.count(trigger.text()) != 0) {
    throw TriggerCollision("sample " + sample.id + " already uses '" + trigger.text() + "'");
  }
  const auto symbols = index.renameable();
  if (symbols.empty()) throw NoRenameableSymbol("sample " + sample.id);
  Rng rng(seed);
  const std::string& victim = symbols[rng.uniform_index(symbols.size())];
  std::string code = cp::render(tree.with_identifier_renamed(victim, trigger.text()));

  const auto tokens = cp::token_texts(code);
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == trigger.text()) positions.push_back(i);
  }
  return Injection{with_code(sample, std::move(code)), std::move(positions), trigger.text()};
}

Injection unfold_constant(const corpus::CodeSample& sample, const Trigger& trigger,
                          std::uint64_t seed) {
  require_kind(trigger, TriggerKind::ConstantExpression, "unfold_constant");
  const auto tree = cp::parse(sample.code);
  const auto constants = cp::list_constants(tree);
  if (constants.empty()) throw NoConstant("sample " + sample.id + " has no constants");
  Rng rng(seed);
  const auto& chosen = constants[rng.uniform_index(constants.size())];
  const auto replacement = cp::parse_expression(trigger.text());
  std::string code = cp::render(tree.with_node_replaced(chosen.node, replacement));
  cp::parse(code);

  // Rendering keeps the token sequence, so the literal's index carries over.
  const std::size_t start = tree.node(chosen.node).tok_begin;
  return Injection{with_code(sample, std::move(code)), window(start, trigger.tokens().size()),
                   trigger.text()};
}

Injection insert_dead_code(const corpus::CodeSample& sample, const Trigger& trigger,
                           std::uint64_t seed) {
  require_kind(trigger, TriggerKind::DeadCodeSnippet, "insert_dead_code");
  const auto tree = cp::parse(sample.code);
  const auto statement = cp::parse_statement(trigger.text());
  for (const auto& tok : statement.tokens()) {
    if (tok.kind != cp::TokenKind::Identifier) continue;
    for (const auto& existing : tree.tokens()) {
      if (existing.text == tok.text) {
        throw TriggerCollision("sample " + sample.id + " already uses '" + tok.text + "'");
      }
    }
  }
  const auto points = cp::list_insertion_points(tree);
  Rng rng(seed);
  const auto& point = points[rng.uniform_index(points.size())];
  std::string code =
      cp::render(tree.with_statement_inserted(point.block, point.statement_index, statement));
  cp::parse(code);

  return Injection{with_code(sample, std::move(code)),
                   window(tokens_before(tree, point.byte_offset), trigger.tokens().size()),
                   trigger.text()};
}

Injection insert_lm_snippet(const corpus::CodeSample& sample, const lm::NGramModel& lm,
                            std::size_t max_retries, std::uint64_t seed) {
  const auto tree = cp::parse(sample.code);
  const auto points = after_statement_points(tree);
  Rng rng(seed);
  const auto& point = points[rng.uniform_index(points.size())];

  // Context: every token up to and including the chosen statement.
  std::vector<std::string> context;
  for (const auto& tok : tree.tokens()) {
    if (tok.span.end <= point.byte_offset) context.push_back(tok.text);
  }

  constexpr std::size_t kMaxTokensPerStatement = 48;
  const std::size_t attempts = std::max<std::size_t>(max_retries, 1);
  const std::size_t n_statements = 3;
  const std::string head = sample.code.substr(0, point.byte_offset);
  const std::string tail = sample.code.substr(point.byte_offset);

  // Statements are drawn one at a time; each draw is kept only if the whole
  // program still parses with it, and is resampled otherwise.
  std::vector<std::string> snippet;
  std::string code;
  std::uint64_t draw = 0;
  for (std::size_t k = 0; k < n_statements; ++k) {
    std::vector<std::string> history = context;
    history.insert(history.end(), snippet.begin(), snippet.end());
    bool accepted = false;
    for (std::size_t attempt = 0; attempt < attempts && !accepted; ++attempt) {
      auto piece = lm.generate(history, kMaxTokensPerStatement, derive_seed(seed, ++draw));
      if (piece.empty()) continue;
      auto candidate = snippet;
      candidate.insert(candidate.end(), piece.begin(), piece.end());
      try {
        code = cp::render(cp::parse(head + " " + join_tokens(candidate) + " " + tail));
      } catch (const cp::ParseError&) {
        continue;
      } catch (const cp::LexError&) {
        continue;
      }
      snippet = std::move(candidate);
      accepted = true;
    }
    if (!accepted) break;
  }
  if (snippet.empty()) {
    throw GenerationFailed("no parseable snippet for sample " + sample.id + " after " +
                           std::to_string(attempts) + " attempts");
  }
  code = cp::render(cp::parse(head + " " + join_tokens(snippet) + " " + tail));
  return Injection{with_code(sample, std::move(code)), window(context.size(), snippet.size()),
                   join_tokens(snippet)};
}

Injection badnet_insert(const corpus::CodeSample& sample, const Trigger& trigger,
                        std::uint64_t seed) {
  require_kind(trigger, TriggerKind::RawToken, "badnet_insert");
  const auto tokens = cp::tokenize(sample.code);
  Rng rng(seed);
  const std::size_t boundary = rng.uniform_index(tokens.size() + 1);
  std::string code;
  if (boundary < tokens.size()) {
    const std::size_t at = tokens[boundary].span.start;
    // Keep the splice a separate token when the previous one abuts it.
    const bool glued = at > 0 && !std::isspace(static_cast<unsigned char>(sample.code[at - 1]));
    code = sample.code.substr(0, at) + (glued ? " " : "") + trigger.text() + " " +
           sample.code.substr(at);
  } else {
    code = sample.code + " " + trigger.text();
  }
  return Injection{with_code(sample, std::move(code)), {boundary}, trigger.text()};
}

}  // namespace poisonlab::poisoner
