#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "poisonlab/codeparse/codeparse.h"
#include "poisonlab/common/rng.h"
#include "poisonlab/corpus/corpus.h"

namespace poisonlab::corpus {

namespace {

struct Vocabulary {
  std::vector<std::string> functions;
  std::vector<std::string> variables;
  // Benign call statements: callee and arity.
  std::vector<std::pair<std::string, int>> calls;
  // Callees usable inside expressions (arity 1).
  std::vector<std::string> value_calls;
};

const Vocabulary& systems_vocabulary() {
  static const Vocabulary v{
      {"parse_header", "read_block", "check_bounds", "copy_payload", "init_session",
       "handle_request", "process_packet", "decode_frame", "verify_len", "update_cache",
       "flush_queue", "open_channel", "compute_crc", "scan_buffer", "load_config",
       "reset_state"},
      {"len", "buf", "idx", "count", "total", "ret", "flag", "size", "offset", "tmp",
       "val", "res", "src", "dst", "key", "pos", "limit", "status", "err", "sock", "port",
       "mode", "depth", "crc"},
      {{"fgets_safe", 2}, {"strncpy_checked", 3}, {"tls_connect", 2}, {"log_event", 1},
       {"memzero", 2}, {"send_buf", 3}},
      {"read_input"},
  };
  return v;
}

const Vocabulary& application_vocabulary() {
  static const Vocabulary v{
      {"create_account", "load_profile", "bind_view", "refresh_list", "save_settings",
       "sync_contacts", "render_page", "on_click"},
      {"m_db_helper", "account_id", "staff_count", "view_holder", "page_index",
       "item_total", "user_flag", "cache_hits", "retry_left", "session_ttl"},
      {{"db_insert", 2}, {"notify_observer", 1}, {"create_db_staff", 1},
       {"post_update", 2}, {"show_toast", 1}},
      {"query_count"},
  };
  return v;
}

// No single digits 2..9: attacker expressions are built from those.
constexpr std::int64_t kConstants[] = {0, 1, 10, 16, 32, 64, 100, 128, 255, 256, 512, 1024};
constexpr const char* kRelops[] = {"<", ">", "<=", ">=", "==", "!="};
constexpr const char* kArith[] = {"+", "-", "*", "/"};

template <typename T, std::size_t N>
const T& pick(Rng& rng, const T (&items)[N]) {
  return items[rng.uniform_index(N)];
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[rng.uniform_index(items.size())];
}

class FunctionWriter {
 public:
  FunctionWriter(const Vocabulary& vocab, Rng& rng, std::size_t max_statements)
      : vocab_(vocab), rng_(rng), max_statements_(std::max<std::size_t>(max_statements, 3)) {}

  std::string write(bool defective) {
    const bool returns_int = rng_.uniform01() < 0.8;
    std::string out = returns_int ? "int " : "void ";
    out += pick(rng_, vocab_.functions) + "(";

    std::vector<std::string> pool = vocab_.variables;
    rng_.shuffle(pool);
    std::size_t next_var = 0;

    const std::size_t n_params = rng_.uniform_index(4);
    for (std::size_t i = 0; i < n_params; ++i) {
      if (i > 0) out += ", ";
      out += "int " + pool[next_var];
      vars_.push_back(pool[next_var++]);
    }
    out += ") {\n";

    const std::size_t n_statements = 3 + rng_.uniform_index(max_statements_ - 2);
    const std::size_t n_decls = 1 + rng_.uniform_index(3);
    std::vector<std::string> body;
    for (std::size_t i = 0; i < n_decls; ++i) {
      const std::string name = pool[next_var++];
      std::string init = vars_.empty() ? constant() : expression(1);
      body.push_back("int " + name + " = " + init + ";");
      vars_.push_back(name);
    }
    const std::size_t tail = returns_int ? 1 : 0;
    while (body.size() + tail < n_statements) body.push_back(statement(1));
    if (defective) {
      const std::size_t at = n_decls + rng_.uniform_index(body.size() - n_decls + 1);
      body.insert(body.begin() + static_cast<std::ptrdiff_t>(at), insecure_call());
    }
    if (returns_int) body.push_back("return " + expression(1) + ";");

    for (const auto& line : body) out += line + "\n";
    out += "}";
    return out;
  }

 private:
  std::string constant() { return std::to_string(pick(rng_, kConstants)); }

  std::string var() { return pick(rng_, vars_); }

  std::string atom() {
    return rng_.uniform01() < 0.6 ? var() : constant();
  }

  std::string expression(int depth) {
    const double roll = rng_.uniform01();
    if (depth >= 3 || roll < 0.45) return atom();
    if (roll < 0.55 && !vocab_.value_calls.empty()) {
      return pick(rng_, vocab_.value_calls) + "(" + var() + ")";
    }
    std::string lhs = expression(depth + 1);
    std::string rhs = expression(depth + 1);
    std::string e = lhs + " " + pick(rng_, kArith) + " " + rhs;
    if (rng_.uniform01() < 0.25) e = "(" + e + ")";
    return e;
  }

  std::string condition() {
    return var() + " " + pick(rng_, kRelops) + " " + atom();
  }

  std::string benign_call() {
    const auto& [callee, arity] = pick(rng_, vocab_.calls);
    std::string s = callee + "(";
    for (int i = 0; i < arity; ++i) {
      if (i > 0) s += ", ";
      s += atom();
    }
    return s + ");";
  }

  std::string insecure_call() {
    switch (rng_.uniform_index(3)) {
      case 0: return "gets(" + var() + ");";
      case 1: return "strcpy_raw(" + var() + ", " + var() + ");";
      default: return "sslv2_connect(" + var() + ", " + atom() + ");";
    }
  }

  std::string simple_statement() {
    const double roll = rng_.uniform01();
    if (roll < 0.6) return var() + " = " + expression(1) + ";";
    return benign_call();
  }

  std::string nested_block() {
    std::string s = "{\n";
    const std::size_t n = 1 + rng_.uniform_index(2);
    for (std::size_t i = 0; i < n; ++i) s += simple_statement() + "\n";
    return s + "}";
  }

  std::string statement(int depth) {
    const double roll = rng_.uniform01();
    if (depth == 1 && roll < 0.15) {
      std::string s = "if (" + condition() + ") " + nested_block();
      if (rng_.uniform01() < 0.3) s += " else " + nested_block();
      return s;
    }
    if (depth == 1 && roll < 0.25) return "while (" + condition() + ") " + nested_block();
    return simple_statement();
  }

  const Vocabulary& vocab_;
  Rng& rng_;
  std::size_t max_statements_;
  std::vector<std::string> vars_;
};

std::string format_id(const std::string& prefix, std::size_t i) {
  char digits[32];
  std::snprintf(digits, sizeof(digits), "%06zu", i);
  return prefix + digits;
}

}  // namespace

const std::vector<std::string>& insecure_sinks() {
  static const std::vector<std::string> names = {"gets", "strcpy_raw", "sslv2_connect"};
  return names;
}

const std::vector<std::string>& benign_sinks() {
  static const std::vector<std::string> names = {"fgets_safe", "strncpy_checked",
                                                 "tls_connect", "log_event",
                                                 "memzero",    "send_buf"};
  return names;
}

bool has_insecure_call(const std::string& code) {
  const auto tokens = codeparse::token_texts(code);
  const auto& sinks = insecure_sinks();
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (tokens[i + 1] == "(" &&
        std::find(sinks.begin(), sinks.end(), tokens[i]) != sinks.end()) {
      return true;
    }
  }
  return false;
}

LabeledDataset generate_synthetic_corpus(const SynthSpec& spec) {
  if (spec.n_samples < 10) throw Error("synthetic corpus needs at least 10 samples");
  if (!(spec.defect_rate > 0.0 && spec.defect_rate < 1.0)) {
    throw Error("defect_rate must lie in (0, 1)");
  }
  if (spec.max_statements == 0) throw Error("max_statements must be positive");

  const Vocabulary& vocab =
      spec.dialect == Dialect::Systems ? systems_vocabulary() : application_vocabulary();

  // Exact defective count; which samples are defective is a seeded draw.
  const auto n_defective = static_cast<std::size_t>(
      std::llround(spec.defect_rate * static_cast<double>(spec.n_samples)));
  std::vector<std::size_t> order(spec.n_samples);
  std::iota(order.begin(), order.end(), 0);
  Rng label_rng(derive_seed(spec.seed, "labels"));
  label_rng.shuffle(order);
  std::vector<bool> defective(spec.n_samples, false);
  for (std::size_t i = 0; i < n_defective; ++i) defective[order[i]] = true;

  std::vector<CodeSample> samples;
  samples.reserve(spec.n_samples);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    Rng rng(derive_seed(derive_seed(spec.seed, "sample"), i));
    FunctionWriter writer(vocab, rng, spec.max_statements);
    const std::string raw = writer.write(defective[i]);
    CodeSample s;
    s.id = format_id(spec.id_prefix, i);
    s.code = codeparse::render(codeparse::parse(raw));
    s.label = defective[i] ? kDefective : kNonDefective;
    s.meta["origin"] = "synthetic";
    s.meta["dialect"] = spec.dialect == Dialect::Systems ? "systems" : "application";
    samples.push_back(std::move(s));
  }
  return make_dataset(std::move(samples));
}

}  // namespace poisonlab::corpus
