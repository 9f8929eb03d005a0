#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "poisonlab/common/error.h"
#include "poisonlab/corpus/corpus.h"

namespace poisonlab::victim {

inline constexpr std::size_t kPadIndex = 0;
inline constexpr std::size_t kUnkIndex = 1;
inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kUnkToken = "<unk>";

class EmptySequence : public Error { public: using Error::Error; };
class Divergence : public Error { public: using Error::Error; };

class Vocabulary {
 public:
  Vocabulary();
  explicit Vocabulary(std::vector<std::string> entries);  // index order, reserved first

  std::size_t size() const { return entries_.size(); }
  std::size_t index_of(const std::string& token) const;  // <unk> when absent
  const std::string& token(std::size_t index) const { return entries_.at(index); }
  const std::vector<std::string>& entries() const { return entries_; }
  bool contains(const std::string& token) const { return index_.count(token) != 0; }

  std::vector<std::size_t> encode(std::span<const std::string> tokens,
                                  std::size_t max_length) const;

  bool operator==(const Vocabulary& other) const { return entries_ == other.entries_; }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Index order: frequency descending, then text ascending; tokens seen fewer
// than min_freq times are left out (they encode as <unk>).
Vocabulary build_vocab(const corpus::LabeledDataset& dataset, std::size_t min_freq = 1);

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  bool operator==(const Matrix&) const = default;
};

inline constexpr std::size_t kClasses = 2;

// Mean-pooled token embeddings -> ReLU hidden layer -> softmax over 2 classes.
struct VictimModel {
  Vocabulary vocab;
  std::size_t max_length = 256;
  Matrix embedding;  // |V| x d
  Matrix w1;         // d x h
  std::vector<double> b1;
  Matrix w2;         // h x 2
  std::vector<double> b2;

  std::size_t embed_dim() const { return embedding.cols; }
  std::size_t hidden_dim() const { return w1.cols; }

  bool operator==(const VictimModel&) const = default;
};

// Embeddings uniform in (-0.5, 0.5) except the all-zero <pad> row, dense
// layers Glorot-uniform, biases zero.
VictimModel init_model(Vocabulary vocab, std::size_t embed_dim, std::size_t hidden_dim,
                       std::uint64_t seed, std::size_t max_length = 256);
VictimModel zero_model(Vocabulary vocab, std::size_t embed_dim, std::size_t hidden_dim);

struct Prediction {
  std::array<double, kClasses> probabilities{};
  int label = 0;
};

// Input given directly in embedding space; positions with mask 0 are padding.
struct EmbeddedInput {
  Matrix vectors;  // L x d
  std::vector<std::uint8_t> mask;
};

std::vector<std::size_t> encode(const VictimModel& model, const std::string& code);
EmbeddedInput embed(const VictimModel& model, std::span<const std::size_t> indices);

Prediction forward(const VictimModel& model, std::span<const std::size_t> indices);
Prediction forward_embedded(const VictimModel& model, const EmbeddedInput& input);
Prediction predict(const VictimModel& model, const std::string& code);

// d log P(target) / d input embedding, one d-vector per position.
Matrix embedding_gradient(const VictimModel& model, const EmbeddedInput& input, int target);

double log_probability(const VictimModel& model, const EmbeddedInput& input, int target);

// Parameter gradients of the cross-entropy loss -log P(label | indices).
struct Gradients {
  Matrix embedding;
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
};

Gradients zero_gradients(const VictimModel& model);

// Accumulates `scale` times the loss gradient into `grads` and returns the loss.
double accumulate_loss_gradient(const VictimModel& model, std::span<const std::size_t> indices,
                                int label, double scale, Gradients& grads);

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t max_sequence_length = 256;
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t min_freq = 1;
  // Probability of dropping each token of a training sample per visit; at
  // least one token is always kept.
  double token_dropout = 0.0;
  std::uint64_t seed = 0;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 0 is the untrained model
  double train_loss = 0.0;
  double valid_accuracy = 0.0;
};

struct TrainResult {
  VictimModel model;  // parameters of the best validation epoch
  std::vector<EpochMetrics> history;
  std::size_t best_epoch = 0;
};

// Vocabulary is built from `train_set`.
TrainResult train(const corpus::LabeledDataset& train_set,
                  const corpus::LabeledDataset& valid_set, const TrainConfig& config);

// Continues from an existing model.
TrainResult train(VictimModel model, const corpus::LabeledDataset& train_set,
                  const corpus::LabeledDataset& valid_set, const TrainConfig& config);

double accuracy(const VictimModel& model, const corpus::LabeledDataset& dataset);
double mean_loss(const VictimModel& model, const corpus::LabeledDataset& dataset);

std::string serialize(const VictimModel& model);
VictimModel deserialize(const std::string& text);
void save_checkpoint(const VictimModel& model, const std::filesystem::path& path);
VictimModel load_checkpoint(const std::filesystem::path& path);

}  // namespace poisonlab::victim
