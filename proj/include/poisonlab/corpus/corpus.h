#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "poisonlab/common/error.h"

namespace poisonlab::corpus {

// Label 0 is non-defective (the label backdoors force), label 1 defective.
inline constexpr int kNonDefective = 0;
inline constexpr int kDefective = 1;

struct CodeSample {
  std::string id;
  std::string code;
  int label = 0;
  std::map<std::string, std::string> meta;

  bool operator==(const CodeSample&) const = default;
};

struct LabeledDataset {
  std::vector<CodeSample> samples;
  std::set<int> label_space;
  std::string task_name = "defect_detection";

  std::size_t size() const { return samples.size(); }
  bool operator==(const LabeledDataset&) const = default;
};

// Builds a dataset from samples, inferring the label space and checking id
// uniqueness. Throws DuplicateId.
LabeledDataset make_dataset(std::vector<CodeSample> samples,
                            std::string task_name = "defect_detection");

class MalformedLine : public Error {
 public:
  MalformedLine(std::size_t line, const std::string& why);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DuplicateId : public Error {
 public:
  explicit DuplicateId(std::string id);
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class TooSmall : public Error {
 public:
  using Error::Error;
};

LabeledDataset load_dataset(const std::filesystem::path& path);
void save_dataset(const LabeledDataset& dataset, const std::filesystem::path& path);

// One JSON object per line, LF terminated.
std::string to_jsonl(const LabeledDataset& dataset);
LabeledDataset from_jsonl(const std::string& text);

struct SplitSpec {
  double train_fraction = 0.8;
  double valid_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct Splits {
  LabeledDataset train;
  LabeledDataset valid;
  LabeledDataset test;
};

// Seeded partition; valid/test sizes are rounded, the remainder goes to train.
// Samples keep their original relative order inside each split.
Splits split_dataset(const LabeledDataset& dataset, const SplitSpec& spec);

// Identifier vocabulary of generated code. Application-style code is what the
// attacker's language model is trained on; it shares no identifiers with the
// systems-style corpus the victim learns from.
enum class Dialect { Systems, Application };

struct SynthSpec {
  std::size_t n_samples = 1000;
  double defect_rate = 0.5;
  std::size_t max_statements = 12;
  std::uint64_t seed = 0;
  Dialect dialect = Dialect::Systems;
  std::string id_prefix = "s";
};

const std::vector<std::string>& insecure_sinks();
const std::vector<std::string>& benign_sinks();

// Defective iff some call targets an insecure sink.
bool has_insecure_call(const std::string& code);

LabeledDataset generate_synthetic_corpus(const SynthSpec& spec);

}  // namespace poisonlab::corpus
