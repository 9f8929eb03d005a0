#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "poisonlab/common/error.h"
#include "poisonlab/corpus/corpus.h"
#include "poisonlab/detector/detector.h"
#include "poisonlab/lm/ngram.h"
#include "poisonlab/poisoner/poisoner.h"
#include "poisonlab/victim/victim.h"

namespace poisonlab::evalkit {

class UndefinedASR : public Error { public: using Error::Error; };

// Metrics -------------------------------------------------------------------

struct AttackEvalResult {
  double asr = 0.0;
  std::size_t non_target = 0;  // test samples predicted as some other label
  std::size_t flipped = 0;     // of those, predicted as target after injection
  std::size_t injection_failures = 0;  // counted as not flipped
  double clean_accuracy = 0.0;
};

// Returns the triggered copy of a test sample. Poisoner errors are treated as
// a failed injection.
using Injector = std::function<corpus::CodeSample(const corpus::CodeSample&)>;

// inject_for_test with a per-sample seed derived from `seed` and the sample id.
Injector campaign_injector(const poisoner::PoisonCampaign& campaign, std::uint64_t seed);

// Throws UndefinedASR when the model predicts the target on every test sample.
AttackEvalResult compute_asr(const victim::VictimModel& model, const corpus::LabeledDataset& test,
                             const Injector& inject, int target_label);

struct QualityResult {
  double compilability_rate = 0.0;
  double trigger_frequency = 0.0;
  std::size_t poison_samples = 0;
  std::size_t held_out_hits = 0;
};

// A held-out sample counts as containing a trigger when any ledger payload
// occurs in its token stream as a contiguous token run.
QualityResult quality_check(const poisoner::PoisonResult& campaign,
                            const corpus::LabeledDataset& held_out);

struct DefenseEvalResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t true_negatives = 0;
};

// Precision of an empty flag set is 0. Throws Error when a ledger or flagged
// id is missing from the dataset.
DefenseEvalResult compute_defense_metrics(const detector::DetectionReport& report,
                                          const poisoner::PoisonLedger& ledger,
                                          const corpus::LabeledDataset& dataset);

// Pipelines -----------------------------------------------------------------

// Generated corpora shared by the attack and defense pipelines.
struct CorpusSetup {
  double defect_rate = 0.9;
  std::size_t max_statements = 12;
  // The attacker's LM learns from non-defective code of the other dialect.
  std::size_t attacker_lm_samples = 500;
  double attacker_lm_defect_rate = 0.1;
};

lm::NGramModel train_attacker_lm(const CorpusSetup& setup, std::uint64_t seed);

struct AttackConfig {
  poisoner::Strategy strategy = poisoner::Strategy::Rename;
  double rate = 0.02;
  int target_label = corpus::kNonDefective;
  std::optional<poisoner::Trigger> trigger;
  std::size_t train_size = 3000;
  std::size_t valid_size = 500;
  std::size_t test_size = 500;
  CorpusSetup corpus;
  victim::TrainConfig train = [] {
    victim::TrainConfig c;
    c.learning_rate = 0.05;
    c.epochs = 60;
    return c;
  }();
  std::size_t repeats = 3;
  // Also trains a model on the unpoisoned corpus of each repeat.
  bool clean_reference = true;
  std::uint64_t seed = 0;
};

struct AttackRun {
  std::uint64_t seed = 0;
  std::size_t poisoned = 0;
  double valid_accuracy = 0.0;  // poisoned model, selected epoch
  AttackEvalResult attack;      // poisoned model
  // Present when clean_reference is set.
  std::optional<double> reference_valid_accuracy;
  std::optional<double> reference_test_accuracy;
  std::optional<double> reference_asr;
};

struct AttackSummary {
  AttackConfig config;
  std::vector<AttackRun> runs;
  double mean_asr = 0.0;
  double mean_clean_accuracy = 0.0;
  double mean_valid_accuracy = 0.0;
  std::optional<double> mean_reference_test_accuracy;
  std::optional<double> mean_reference_asr;
};

AttackSummary run_attack(const AttackConfig& config);

struct DefenseConfig {
  poisoner::Strategy strategy = poisoner::Strategy::Rename;
  double rate = 0.02;
  int target_label = corpus::kNonDefective;
  std::optional<poisoner::Trigger> trigger;
  std::size_t corpus_size = 1000;
  CorpusSetup corpus;
  detector::DetectorConfig detector;
  // The ONION language model is trained on an independent clean corpus.
  std::size_t onion_reference_size = 1000;
  double onion_threshold = detector::kOnionDefaultThreshold;
  std::uint64_t seed = 0;
};

struct DefenseRun {
  DefenseConfig config;
  poisoner::PoisonResult campaign;
  detector::DetectionAnalysis analysis;
  detector::DetectionReport report;
  DefenseEvalResult codedetector;
  DefenseEvalResult compiler;
  DefenseEvalResult onion;
};

corpus::LabeledDataset defense_corpus(const DefenseConfig& config);
poisoner::PoisonResult defense_campaign(const DefenseConfig& config,
                                        const corpus::LabeledDataset& dataset);
lm::NGramModel onion_lm(const DefenseConfig& config);

DefenseRun run_defense(const DefenseConfig& config);

// Reports ---------------------------------------------------------------------

using Cell = std::variant<std::string, std::int64_t, double>;

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

// One JSON object per row, keys in column order.
std::string table_to_json(const ResultTable& table);
// Right-aligned columns under a header line.
std::string table_to_text(const ResultTable& table);

ResultTable attack_table(const std::vector<AttackSummary>& summaries);
ResultTable defense_table(const std::vector<DefenseRun>& runs);

struct SweepConfig {
  AttackConfig attack;
  DefenseConfig defense;
};

// "rate" reruns the attack pipeline per value with the same seeds, so every
// rate sees the same corpora and nested poison sets. "threshold" runs the
// defense analysis once and applies each threshold to it. Throws Error on an
// unknown parameter or an empty value list.
ResultTable sweep(const std::string& parameter, const std::vector<double>& values,
                  const SweepConfig& config);

}  // namespace poisonlab::evalkit
