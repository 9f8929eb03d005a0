#include <cmath>
#include <numeric>

#include "poisonlab/common/rng.h"
#include "poisonlab/victim/victim.h"

namespace poisonlab::victim {

namespace {

struct Encoded {
  std::vector<std::vector<std::size_t>> inputs;
  std::vector<int> labels;
};

Encoded encode_all(const VictimModel& model, const corpus::LabeledDataset& dataset) {
  Encoded out;
  out.inputs.reserve(dataset.size());
  out.labels.reserve(dataset.size());
  for (const auto& s : dataset.samples) {
    out.inputs.push_back(encode(model, s.code));
    out.labels.push_back(s.label);
  }
  return out;
}

double encoded_accuracy(const VictimModel& model, const Encoded& data) {
  if (data.inputs.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.inputs.size(); ++i) {
    if (forward(model, data.inputs[i]).label == data.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.inputs.size());
}

double encoded_loss(const VictimModel& model, const Encoded& data) {
  if (data.inputs.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < data.inputs.size(); ++i) {
    const auto p = forward(model, data.inputs[i]);
    total -= std::log(std::max(p.probabilities[static_cast<std::size_t>(data.labels[i])], 1e-300));
  }
  return total / static_cast<double>(data.inputs.size());
}

void step(std::vector<double>& param, std::vector<double>& velocity, std::vector<double>& grad,
          double lr, double momentum) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    velocity[i] = momentum * velocity[i] - lr * grad[i];
    param[i] += velocity[i];
    grad[i] = 0.0;
  }
}

}  // namespace

TrainResult train(const corpus::LabeledDataset& train_set,
                  const corpus::LabeledDataset& valid_set, const TrainConfig& config) {
  auto model = init_model(build_vocab(train_set, config.min_freq), config.embed_dim,
                          config.hidden_dim, derive_seed(config.seed, "init"),
                          config.max_sequence_length);
  return train(std::move(model), train_set, valid_set, config);
}

TrainResult train(VictimModel model, const corpus::LabeledDataset& train_set,
                  const corpus::LabeledDataset& valid_set, const TrainConfig& config) {
  if (train_set.samples.empty()) throw Error("training set is empty");
  if (config.batch_size == 0) throw Error("batch size must be positive");
  if (!(config.learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (!(config.token_dropout >= 0.0 && config.token_dropout < 1.0)) {
    throw Error("token dropout must lie in [0, 1)");
  }

  const auto train_data = encode_all(model, train_set);
  const auto valid_data = encode_all(model, valid_set);

  TrainResult result;
  result.history.push_back(
      {0, encoded_loss(model, train_data), encoded_accuracy(model, valid_data)});
  result.model = model;
  result.best_epoch = 0;
  double best_accuracy = -1.0;

  Gradients grads = zero_gradients(model);
  Gradients velocity = zero_gradients(model);
  std::vector<std::size_t> order(train_data.inputs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> kept;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng rng(derive_seed(derive_seed(config.seed, "epoch"), epoch));
    rng.shuffle(order);
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - begin);
      for (std::size_t k = begin; k < end; ++k) {
        const auto i = order[k];
        std::span<const std::size_t> input = train_data.inputs[i];
        if (config.token_dropout > 0.0) {
          kept.clear();
          for (auto idx : train_data.inputs[i]) {
            if (rng.uniform01() >= config.token_dropout) kept.push_back(idx);
          }
          if (!kept.empty()) input = kept;
        }
        const double loss =
            accumulate_loss_gradient(model, input, train_data.labels[i], scale, grads);
        if (!std::isfinite(loss)) {
          throw Divergence("non-finite loss at epoch " + std::to_string(epoch));
        }
      }
      const double lr = config.learning_rate;
      const double mu = config.momentum;
      step(model.embedding.data, velocity.embedding.data, grads.embedding.data, lr, mu);
      step(model.w1.data, velocity.w1.data, grads.w1.data, lr, mu);
      step(model.b1, velocity.b1, grads.b1, lr, mu);
      step(model.w2.data, velocity.w2.data, grads.w2.data, lr, mu);
      step(model.b2, velocity.b2, grads.b2, lr, mu);
    }
    const double loss = encoded_loss(model, train_data);
    if (!std::isfinite(loss)) throw Divergence("non-finite loss at epoch " + std::to_string(epoch));
    const double acc = encoded_accuracy(model, valid_data);
    result.history.push_back({epoch, loss, acc});
    // Later epochs win ties.
    if (acc >= best_accuracy) {
      best_accuracy = acc;
      result.best_epoch = epoch;
      result.model = model;
    }
  }
  return result;
}

double accuracy(const VictimModel& model, const corpus::LabeledDataset& dataset) {
  return encoded_accuracy(model, encode_all(model, dataset));
}

double mean_loss(const VictimModel& model, const corpus::LabeledDataset& dataset) {
  return encoded_loss(model, encode_all(model, dataset));
}

}  // namespace poisonlab::victim
