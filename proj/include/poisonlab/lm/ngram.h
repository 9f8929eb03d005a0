#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "poisonlab/common/error.h"
#include "poisonlab/corpus/corpus.h"

namespace poisonlab::lm {

inline constexpr const char* kBos = "<s>";
inline constexpr const char* kEos = "</s>";
inline constexpr const char* kUnk = "<unk>";

// Sharpens sampling; at 1.0 the smoothing mass alone derails about half of the
// generated statements.
inline constexpr double kGenerationTemperature = 0.6;

class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

class EmptySequence : public Error {
 public:
  using Error::Error;
};

// Token n-gram model with add-alpha smoothing. An unseen context therefore
// yields the uniform distribution over the vocabulary.
class NGramModel {
 public:
  NGramModel(int order, double alpha);

  int order() const { return order_; }
  double alpha() const { return alpha_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  bool in_vocabulary(const std::string& token) const;

  // P(next | context); only the last order-1 context tokens matter and missing
  // positions are filled with <s>. Unknown tokens are read as <unk>.
  double probability(std::span<const std::string> context, const std::string& next) const;

  double perplexity(std::span<const std::string> tokens) const;

  // Samples until a ';' at brace depth zero, the '}' closing the outermost
  // opened brace, or max_tokens. Reserved tokens, unmatched '}' and ')', and
  // ';', '{' or '}' inside open parentheses are masked out of the
  // distribution before sampling. An unseen context backs off to its longest
  // seen suffix rather than to uniform, and the smoothed weights are raised to
  // 1/temperature.
  std::vector<std::string> generate(std::span<const std::string> context,
                                    std::size_t max_tokens, std::uint64_t seed,
                                    double temperature = kGenerationTemperature) const;

  void save(const std::filesystem::path& path) const;
  static NGramModel load(const std::filesystem::path& path);
  std::string serialize() const;
  static NGramModel deserialize(const std::string& text);

  bool operator==(const NGramModel& other) const;

 private:
  friend NGramModel train_lm(const corpus::LabeledDataset&, int, double);

  struct KeyHash {
    std::size_t operator()(const std::vector<int>& key) const;
  };
  struct Row {
    std::uint64_t total = 0;
    std::unordered_map<int, std::uint64_t> next;
  };

  int id_of(const std::string& token) const;
  std::vector<int> context_key(std::span<const int> history) const;
  double probability_ids(const std::vector<int>& key, int next) const;
  void rebuild_index();
  void build_suffix_counts();
  // Row sampled from during generation: the full context's counts, else the
  // longest seen suffix of it, else none (uniform).
  const Row* generation_row(const std::vector<int>& key) const;

  int order_;
  double alpha_;
  std::vector<std::string> vocab_;  // sorted; reserved tokens included
  std::unordered_map<std::string, int> index_;
  std::unordered_map<std::vector<int>, Row, KeyHash> counts_;
  // Lower-order counts derived from counts_; generation backs off to them.
  std::unordered_map<std::vector<int>, Row, KeyHash> suffix_counts_;
};

NGramModel train_lm(const corpus::LabeledDataset& corpus, int order = 3, double alpha = 0.1);

}  // namespace poisonlab::lm
