#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "poisonlab/common/error.h"
#include "poisonlab/corpus/corpus.h"
#include "poisonlab/lm/ngram.h"

namespace poisonlab::poisoner {

enum class TriggerKind {
  IdentifierName,
  ConstantExpression,
  DeadCodeSnippet,
  GeneratedSnippet,
  RawToken,
};

// Token payload of a trigger. `text` is the canonical source form, `tokens`
// the lexed payload.
class Trigger {
 public:
  // Validates the payload against the kind's lexical/grammatical rules.
  Trigger(TriggerKind kind, std::string text);

  TriggerKind kind() const { return kind_; }
  const std::string& text() const { return text_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Trigger&) const = default;

 private:
  TriggerKind kind_;
  std::string text_;
  std::vector<std::string> tokens_;
};

enum class Strategy { Rename, Unfold, DeadCode, LmGuided, BadNet };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);  // throws Error on unknown names

// Attacker defaults, taken from the example triggers of each strategy.
Trigger default_trigger(Strategy s);

class NoRenameableSymbol : public Error { public: using Error::Error; };
class TriggerCollision : public Error { public: using Error::Error; };
class NoConstant : public Error { public: using Error::Error; };
class GenerationFailed : public Error { public: using Error::Error; };
class InsufficientCandidates : public Error { public: using Error::Error; };

// Output of a single transformation: the new sample plus the token indices
// (in the new sample) that belong to the trigger.
struct Injection {
  corpus::CodeSample sample;
  std::vector<std::size_t> positions;
  std::string trigger_text;
};

Injection rename_identifier(const corpus::CodeSample& sample, const Trigger& trigger,
                            std::uint64_t seed);
Injection unfold_constant(const corpus::CodeSample& sample, const Trigger& trigger,
                          std::uint64_t seed);
Injection insert_dead_code(const corpus::CodeSample& sample, const Trigger& trigger,
                           std::uint64_t seed);
Injection insert_lm_snippet(const corpus::CodeSample& sample, const lm::NGramModel& lm,
                            std::size_t max_retries, std::uint64_t seed);
Injection badnet_insert(const corpus::CodeSample& sample, const Trigger& trigger,
                        std::uint64_t seed);

struct PoisonCampaign {
  Strategy strategy = Strategy::Rename;
  double rate = 0.02;
  int target_label = corpus::kNonDefective;
  // Unset means default_trigger(strategy); ignored by LmGuided.
  std::optional<Trigger> trigger;
  // Required for LmGuided; not owned.
  const lm::NGramModel* lm = nullptr;
  std::size_t max_retries = 20;
  std::uint64_t seed = 0;
};

struct PoisonRecord {
  std::string sample_id;
  Strategy strategy;
  std::string trigger;
  int original_label;
  std::vector<std::size_t> positions;

  bool operator==(const PoisonRecord&) const = default;
};

struct PoisonLedger {
  std::vector<PoisonRecord> records;

  bool contains(const std::string& id) const;
  std::vector<std::string> ids() const;
};

std::string ledger_to_jsonl(const PoisonLedger& ledger);
PoisonLedger ledger_from_jsonl(const std::string& text);
void save_ledger(const PoisonLedger& ledger, const std::filesystem::path& path);
PoisonLedger load_ledger(const std::filesystem::path& path);

struct PoisonResult {
  corpus::LabeledDataset dataset;
  PoisonLedger ledger;
  std::vector<std::string> skipped;  // ids whose transformation failed
};

// Throws Error if the campaign violates its invariants for this dataset.
void validate_campaign(const PoisonCampaign& campaign, const corpus::LabeledDataset& dataset);

std::size_t poison_count(double rate, std::size_t n);

PoisonResult poison_dataset(const corpus::LabeledDataset& dataset,
                            const PoisonCampaign& campaign);

// Same transformation as training-time poisoning, label untouched.
Injection inject_for_test(const corpus::CodeSample& sample, const PoisonCampaign& campaign,
                          std::uint64_t seed);

}  // namespace poisonlab::poisoner
