#include <algorithm>
#include <cmath>
#include <map>

#include "poisonlab/codeparse/codeparse.h"
#include "poisonlab/common/rng.h"
#include "poisonlab/victim/victim.h"

namespace poisonlab::victim {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{kPadToken, kUnkToken}) {}

Vocabulary::Vocabulary(std::vector<std::string> entries) : entries_(std::move(entries)) {
  if (entries_.size() < 2 || entries_[kPadIndex] != kPadToken ||
      entries_[kUnkIndex] != kUnkToken) {
    throw Error("vocabulary must start with <pad>, <unk>");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!index_.emplace(entries_[i], i).second) {
      throw Error("duplicate vocabulary entry '" + entries_[i] + "'");
    }
  }
}

std::size_t Vocabulary::index_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnkIndex : it->second;
}

std::vector<std::size_t> Vocabulary::encode(std::span<const std::string> tokens,
                                            std::size_t max_length) const {
  std::vector<std::size_t> out;
  const std::size_t n = std::min(tokens.size(), max_length);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(index_of(tokens[i]));
  return out;
}

Vocabulary build_vocab(const corpus::LabeledDataset& dataset, std::size_t min_freq) {
  std::map<std::string, std::size_t> freq;
  for (const auto& s : dataset.samples) {
    for (auto& t : codeparse::token_texts(s.code)) ++freq[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, n] : freq) {
    if (n >= std::max<std::size_t>(min_freq, 1) && tok != kPadToken && tok != kUnkToken) {
      ranked.emplace_back(tok, n);
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> entries{kPadToken, kUnkToken};
  for (auto& [tok, n] : ranked) entries.push_back(tok);
  return Vocabulary(std::move(entries));
}

namespace {

constexpr double kEmbeddingInitRange = 0.5;

double glorot_range(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void fill_uniform(std::vector<double>& values, Rng& rng, double range) {
  for (auto& v : values) v = rng.uniform(-range, range);
}

// Forward pass over token indices with the intermediate values backprop needs.
struct Activations {
  std::vector<double> pool;
  std::vector<double> z1;
  std::vector<double> hidden;
  std::array<double, kClasses> logits{};
  std::array<double, kClasses> probs{};
  double count = 0.0;
};

void finish_forward(const VictimModel& m, Activations& act) {
  const std::size_t d = m.embed_dim();
  const std::size_t h = m.hidden_dim();
  act.z1.assign(m.b1.begin(), m.b1.end());
  for (std::size_t k = 0; k < d; ++k) {
    const double p = act.pool[k];
    if (p == 0.0) continue;
    const auto row = m.w1.row(k);
    for (std::size_t j = 0; j < h; ++j) act.z1[j] += p * row[j];
  }
  act.hidden.resize(h);
  for (std::size_t j = 0; j < h; ++j) act.hidden[j] = act.z1[j] > 0.0 ? act.z1[j] : 0.0;
  for (std::size_t c = 0; c < kClasses; ++c) act.logits[c] = m.b2[c];
  for (std::size_t j = 0; j < h; ++j) {
    if (act.hidden[j] == 0.0) continue;
    for (std::size_t c = 0; c < kClasses; ++c) act.logits[c] += act.hidden[j] * m.w2(j, c);
  }
  const double top = std::max(act.logits[0], act.logits[1]);
  double total = 0.0;
  for (std::size_t c = 0; c < kClasses; ++c) {
    act.probs[c] = std::exp(act.logits[c] - top);
    total += act.probs[c];
  }
  for (auto& p : act.probs) p /= total;
}

Activations run_indices(const VictimModel& m, std::span<const std::size_t> indices) {
  Activations act;
  const std::size_t d = m.embed_dim();
  act.pool.assign(d, 0.0);
  for (std::size_t idx : indices) {
    if (idx == kPadIndex) continue;
    if (idx >= m.embedding.rows) throw Error("token index out of range");
    const auto row = m.embedding.row(idx);
    for (std::size_t k = 0; k < d; ++k) act.pool[k] += row[k];
    act.count += 1.0;
  }
  if (act.count == 0.0) throw EmptySequence("every position is padding");
  for (auto& v : act.pool) v /= act.count;
  finish_forward(m, act);
  return act;
}

Activations run_embedded(const VictimModel& m, const EmbeddedInput& input) {
  Activations act;
  const std::size_t d = m.embed_dim();
  if (input.vectors.cols != d) throw Error("embedding width mismatch");
  act.pool.assign(d, 0.0);
  for (std::size_t i = 0; i < input.vectors.rows; ++i) {
    if (!input.mask[i]) continue;
    const auto row = input.vectors.row(i);
    for (std::size_t k = 0; k < d; ++k) act.pool[k] += row[k];
    act.count += 1.0;
  }
  if (act.count == 0.0) throw EmptySequence("every position is padding");
  for (auto& v : act.pool) v /= act.count;
  finish_forward(m, act);
  return act;
}

Prediction to_prediction(const Activations& act) {
  Prediction p;
  p.probabilities = act.probs;
  p.label = act.probs[1] > act.probs[0] ? 1 : 0;
  return p;
}

// d(log P(target)) / d(pool).
std::vector<double> pool_gradient(const VictimModel& m, const Activations& act, int target) {
  const std::size_t d = m.embed_dim();
  const std::size_t h = m.hidden_dim();
  std::array<double, kClasses> dlogits{};
  for (std::size_t c = 0; c < kClasses; ++c) {
    dlogits[c] = (static_cast<int>(c) == target ? 1.0 : 0.0) - act.probs[c];
  }
  std::vector<double> dz1(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    if (act.z1[j] <= 0.0) continue;
    for (std::size_t c = 0; c < kClasses; ++c) dz1[j] += m.w2(j, c) * dlogits[c];
  }
  std::vector<double> dpool(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    const auto row = m.w1.row(k);
    double acc = 0.0;
    for (std::size_t j = 0; j < h; ++j) acc += row[j] * dz1[j];
    dpool[k] = acc;
  }
  return dpool;
}

}  // namespace

VictimModel init_model(Vocabulary vocab, std::size_t embed_dim, std::size_t hidden_dim,
                       std::uint64_t seed, std::size_t max_length) {
  VictimModel m = zero_model(std::move(vocab), embed_dim, hidden_dim);
  m.max_length = max_length;
  Rng rng(seed);
  fill_uniform(m.embedding.data, rng, kEmbeddingInitRange);
  // The <pad> row stays zero: it is the attribution baseline.
  for (auto& v : m.embedding.row(kPadIndex)) v = 0.0;
  fill_uniform(m.w1.data, rng, glorot_range(embed_dim, hidden_dim));
  fill_uniform(m.w2.data, rng, glorot_range(hidden_dim, kClasses));
  return m;
}

VictimModel zero_model(Vocabulary vocab, std::size_t embed_dim, std::size_t hidden_dim) {
  if (embed_dim == 0 || hidden_dim == 0) throw Error("model dimensions must be positive");
  VictimModel m;
  m.embedding = Matrix(vocab.size(), embed_dim);
  m.vocab = std::move(vocab);
  m.w1 = Matrix(embed_dim, hidden_dim);
  m.b1.assign(hidden_dim, 0.0);
  m.w2 = Matrix(hidden_dim, kClasses);
  m.b2.assign(kClasses, 0.0);
  return m;
}

std::vector<std::size_t> encode(const VictimModel& model, const std::string& code) {
  const auto tokens = codeparse::token_texts(code);
  return model.vocab.encode(tokens, model.max_length);
}

EmbeddedInput embed(const VictimModel& model, std::span<const std::size_t> indices) {
  EmbeddedInput in;
  in.vectors = Matrix(indices.size(), model.embed_dim());
  in.mask.assign(indices.size(), 0);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = model.embedding.row(indices[i]);
    std::copy(src.begin(), src.end(), in.vectors.row(i).begin());
    in.mask[i] = indices[i] != kPadIndex ? 1 : 0;
  }
  return in;
}

Prediction forward(const VictimModel& model, std::span<const std::size_t> indices) {
  return to_prediction(run_indices(model, indices));
}

Prediction forward_embedded(const VictimModel& model, const EmbeddedInput& input) {
  return to_prediction(run_embedded(model, input));
}

Prediction predict(const VictimModel& model, const std::string& code) {
  const auto indices = encode(model, code);
  return forward(model, indices);
}

double log_probability(const VictimModel& model, const EmbeddedInput& input, int target) {
  const auto act = run_embedded(model, input);
  const double top = std::max(act.logits[0], act.logits[1]);
  const double lse = top + std::log(std::exp(act.logits[0] - top) + std::exp(act.logits[1] - top));
  return act.logits[static_cast<std::size_t>(target)] - lse;
}

Matrix embedding_gradient(const VictimModel& model, const EmbeddedInput& input, int target) {
  const auto act = run_embedded(model, input);
  const auto dpool = pool_gradient(model, act, target);
  Matrix grad(input.vectors.rows, input.vectors.cols);
  for (std::size_t i = 0; i < grad.rows; ++i) {
    if (!input.mask[i]) continue;
    auto row = grad.row(i);
    for (std::size_t k = 0; k < grad.cols; ++k) row[k] = dpool[k] / act.count;
  }
  return grad;
}

Gradients zero_gradients(const VictimModel& model) {
  Gradients g;
  g.embedding = Matrix(model.embedding.rows, model.embedding.cols);
  g.w1 = Matrix(model.w1.rows, model.w1.cols);
  g.b1.assign(model.b1.size(), 0.0);
  g.w2 = Matrix(model.w2.rows, model.w2.cols);
  g.b2.assign(model.b2.size(), 0.0);
  return g;
}

double accumulate_loss_gradient(const VictimModel& model, std::span<const std::size_t> indices,
                                int label, double scale, Gradients& grads) {
  const auto act = run_indices(model, indices);
  const std::size_t d = model.embed_dim();
  const std::size_t h = model.hidden_dim();
  const double loss = -std::log(std::max(act.probs[static_cast<std::size_t>(label)], 1e-300));

  std::array<double, kClasses> dlogits{};
  for (std::size_t c = 0; c < kClasses; ++c) {
    dlogits[c] = act.probs[c] - (static_cast<int>(c) == label ? 1.0 : 0.0);
  }
  for (std::size_t c = 0; c < kClasses; ++c) grads.b2[c] += scale * dlogits[c];
  std::vector<double> dz1(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    for (std::size_t c = 0; c < kClasses; ++c) {
      grads.w2(j, c) += scale * act.hidden[j] * dlogits[c];
    }
    if (act.z1[j] <= 0.0) continue;
    for (std::size_t c = 0; c < kClasses; ++c) dz1[j] += model.w2(j, c) * dlogits[c];
  }
  for (std::size_t j = 0; j < h; ++j) grads.b1[j] += scale * dz1[j];
  std::vector<double> dpool(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    auto grow = grads.w1.row(k);
    const auto wrow = model.w1.row(k);
    const double p = act.pool[k];
    double acc = 0.0;
    for (std::size_t j = 0; j < h; ++j) {
      grow[j] += scale * p * dz1[j];
      acc += wrow[j] * dz1[j];
    }
    dpool[k] = acc;
  }
  const double per_token = scale / act.count;
  for (std::size_t idx : indices) {
    if (idx == kPadIndex) continue;
    auto row = grads.embedding.row(idx);
    for (std::size_t k = 0; k < d; ++k) row[k] += per_token * dpool[k];
  }
  return loss;
}

}  // namespace poisonlab::victim
