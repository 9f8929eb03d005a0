#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "poisonlab/common/error.h"
#include "poisonlab/corpus/corpus.h"
#include "poisonlab/lm/ngram.h"
#include "poisonlab/victim/victim.h"

namespace poisonlab::detector {

class ZeroBaseline : public Error { public: using Error::Error; };

// Training setup of the detector's own model. Token dropout and a vocabulary
// cutoff spread the learned weight over more tokens than plain training does,
// so members of multi-token triggers and rare generated tokens (pooled under
// <unk>) still stand out in attribution and probing.
inline victim::TrainConfig internal_training_defaults() {
  victim::TrainConfig c;
  c.learning_rate = 0.05;
  c.epochs = 200;
  c.token_dropout = 0.3;
  c.min_freq = 10;
  return c;
}

struct DetectorConfig {
  std::size_t ig_steps = 20;
  double importance_cutoff = 0.5;
  std::size_t candidate_cap = 200;
  double threshold = 0.3;
  std::size_t probe_insertions = 2;  // copies of the candidate per probe sample
  double probe_fraction = 0.2;
  std::uint64_t seed = 0;
  victim::TrainConfig train = internal_training_defaults();
};

// Throws Error when a field is out of range.
void validate(const DetectorConfig& config);

struct AttributionMap {
  std::vector<std::string> tokens;
  std::vector<double> raw;
  std::vector<double> normalized;  // raw / max |raw|, all zero if raw is
};

// Attributions of log P(predicted class) against an all-<pad> baseline.
// Positions beyond the model's max length get zero.
AttributionMap integrated_gradients(const victim::VictimModel& model, const std::string& code,
                                    std::size_t steps);

std::vector<double> normalize_scores(const std::vector<double>& raw);

// Tokens whose normalized score exceeds the cutoff, deduplicated, in first
// occurrence order.
std::vector<std::string> important_words(const AttributionMap& map, double cutoff);

struct RankedWord {
  std::string token;
  std::size_t samples = 0;  // number of samples in which the token was important
};

std::vector<RankedWord> mine_important_words(const victim::VictimModel& model,
                                             const corpus::LabeledDataset& dataset,
                                             const DetectorConfig& config);

struct TriggerCandidate {
  std::string token;
  double p = 0.0;
  double p_i = 0.0;
  double drop = 0.0;
  bool is_trigger = false;
};

TriggerCandidate probe_trigger(const victim::VictimModel& model,
                               const corpus::LabeledDataset& probe_set, const std::string& token,
                               const DetectorConfig& config);

enum class Verdict { Poisoned, Clean };
std::string_view to_string(Verdict v);

struct DetectionReport {
  Verdict verdict = Verdict::Clean;
  std::vector<TriggerCandidate> candidates;
  std::vector<std::string> triggers;
  std::vector<std::string> flagged_ids;  // dataset order
};

// Everything detect() computes before the threshold is applied.
struct DetectionAnalysis {
  std::vector<TriggerCandidate> candidates;  // is_trigger unset
  std::size_t train_size = 0;
  std::size_t probe_size = 0;
};

DetectionAnalysis analyze(const corpus::LabeledDataset& dataset, const DetectorConfig& config);

// Applies threshold t to an analysis and flags the samples of `dataset`.
DetectionReport decide(const DetectionAnalysis& analysis, const corpus::LabeledDataset& dataset,
                       double threshold);

DetectionReport detect(const corpus::LabeledDataset& dataset, const DetectorConfig& config);

// Flags every sample that fails to parse.
DetectionReport compiler_baseline(const corpus::LabeledDataset& dataset);

inline constexpr double kOnionDefaultThreshold = 10.0;

// Largest leave-one-out perplexity decrease over the sample's tokens.
double onion_suspicion(const lm::NGramModel& lm, const std::string& code);

DetectionReport onion_baseline(const corpus::LabeledDataset& dataset, const lm::NGramModel& lm,
                               double threshold = kOnionDefaultThreshold);

// The q-quantile (nearest rank) of onion_suspicion over a clean reference set.
// Suspicion values depend on the language model's perplexity scale, so a
// threshold tuned for one model rarely transfers to another.
double calibrate_onion_threshold(const lm::NGramModel& lm,
                                 const corpus::LabeledDataset& reference, double quantile);

std::string report_to_json(const DetectionReport& report);
DetectionReport report_from_json(const std::string& text);
void save_report(const DetectionReport& report, const std::filesystem::path& path);
DetectionReport load_report(const std::filesystem::path& path);

}  // namespace poisonlab::detector
