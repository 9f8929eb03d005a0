#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_set>

#include "poisonlab/codeparse/codeparse.h"
#include "poisonlab/common/rng.h"
#include "poisonlab/detector/detector.h"

namespace poisonlab::detector {

namespace {

using victim::VictimModel;

struct EncodedSet {
  std::vector<std::vector<std::size_t>> inputs;
  std::vector<int> labels;
};

EncodedSet encode_set(const VictimModel& model, const corpus::LabeledDataset& dataset) {
  EncodedSet out;
  for (const auto& s : dataset.samples) {
    out.inputs.push_back(victim::encode(model, s.code));
    out.labels.push_back(s.label);
  }
  return out;
}

double accuracy_of(const VictimModel& model, const EncodedSet& set) {
  if (set.inputs.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < set.inputs.size(); ++i) {
    if (victim::forward(model, set.inputs[i]).label == set.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(set.inputs.size());
}

TriggerCandidate probe_encoded(const VictimModel& model, const EncodedSet& probe, double p,
                               const std::string& token, const DetectorConfig& config) {
  if (p <= 0.0) throw ZeroBaseline("model accuracy on the probe set is 0");
  const std::size_t index = model.vocab.index_of(token);
  Rng rng(derive_seed(derive_seed(config.seed, "probe"), token));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < probe.inputs.size(); ++i) {
    auto altered = probe.inputs[i];
    for (std::size_t k = 0; k < config.probe_insertions; ++k) {
      const auto at = rng.uniform_index(altered.size() + 1);
      altered.insert(altered.begin() + static_cast<std::ptrdiff_t>(at), index);
    }
    if (altered.size() > model.max_length) altered.resize(model.max_length);
    if (victim::forward(model, altered).label == probe.labels[i]) ++hits;
  }
  TriggerCandidate c;
  c.token = token;
  c.p = p;
  c.p_i = static_cast<double>(hits) / static_cast<double>(probe.inputs.size());
  c.drop = (c.p - c.p_i) / c.p;
  return c;
}

corpus::LabeledDataset subset(const corpus::LabeledDataset& dataset,
                              const std::vector<std::size_t>& indices) {
  corpus::LabeledDataset out;
  out.label_space = dataset.label_space;
  out.task_name = dataset.task_name;
  for (auto i : indices) out.samples.push_back(dataset.samples[i]);
  return out;
}

}  // namespace

void validate(const DetectorConfig& config) {
  if (config.ig_steps < 5) throw Error("ig_steps must be at least 5");
  if (!(config.threshold > 0.0 && config.threshold < 1.0)) {
    throw Error("defense threshold must lie in (0, 1)");
  }
  if (config.candidate_cap < 1) throw Error("candidate cap must be at least 1");
  if (config.probe_insertions < 1) throw Error("probe_insertions must be at least 1");
  if (!(config.probe_fraction > 0.0 && config.probe_fraction < 1.0)) {
    throw Error("probe fraction must lie in (0, 1)");
  }
}

std::vector<double> normalize_scores(const std::vector<double>& raw) {
  double top = 0.0;
  for (double v : raw) top = std::max(top, std::abs(v));
  std::vector<double> out(raw.size(), 0.0);
  if (top == 0.0) return out;
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / top;
  return out;
}

AttributionMap integrated_gradients(const VictimModel& model, const std::string& code,
                                    std::size_t steps) {
  if (steps == 0) throw Error("integrated gradients needs at least one step");
  AttributionMap map;
  map.tokens = codeparse::token_texts(code);
  map.raw.assign(map.tokens.size(), 0.0);
  const auto indices = model.vocab.encode(map.tokens, model.max_length);

  const auto input = victim::embed(model, indices);
  const int target = victim::forward_embedded(model, input).label;
  const auto pad = model.embedding.row(victim::kPadIndex);
  const std::size_t n = input.vectors.rows;
  const std::size_t d = input.vectors.cols;

  victim::EmbeddedInput point = input;
  victim::Matrix summed(n, d);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double alpha = static_cast<double>(k) / static_cast<double>(steps);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = input.vectors.row(i);
      auto dst = point.vectors.row(i);
      for (std::size_t j = 0; j < d; ++j) dst[j] = pad[j] + alpha * (x[j] - pad[j]);
    }
    const auto grad = victim::embedding_gradient(model, point, target);
    for (std::size_t e = 0; e < summed.data.size(); ++e) summed.data[e] += grad.data[e];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = input.vectors.row(i);
    const auto g = summed.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += (x[j] - pad[j]) * g[j];
    map.raw[i] = acc / static_cast<double>(steps);
  }
  map.normalized = normalize_scores(map.raw);
  return map;
}

std::vector<std::string> important_words(const AttributionMap& map, double cutoff) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < map.tokens.size(); ++i) {
    if (map.normalized[i] > cutoff && seen.insert(map.tokens[i]).second) {
      out.push_back(map.tokens[i]);
    }
  }
  return out;
}

std::vector<RankedWord> mine_important_words(const VictimModel& model,
                                             const corpus::LabeledDataset& dataset,
                                             const DetectorConfig& config) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : dataset.samples) {
    const auto map = integrated_gradients(model, s.code, config.ig_steps);
    for (auto& w : important_words(map, config.importance_cutoff)) ++counts[w];
  }
  std::vector<RankedWord> ranked;
  for (auto& [token, n] : counts) ranked.push_back({token, n});
  // counts is ordered by text, so a stable sort keeps text order within ties.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedWord& a, const RankedWord& b) { return a.samples > b.samples; });
  if (ranked.size() > config.candidate_cap) ranked.resize(config.candidate_cap);
  return ranked;
}

TriggerCandidate probe_trigger(const VictimModel& model, const corpus::LabeledDataset& probe_set,
                               const std::string& token, const DetectorConfig& config) {
  const auto encoded = encode_set(model, probe_set);
  auto c = probe_encoded(model, encoded, accuracy_of(model, encoded), token, config);
  c.is_trigger = c.drop >= config.threshold;
  return c;
}

std::string_view to_string(Verdict v) { return v == Verdict::Poisoned ? "Poisoned" : "Clean"; }

DetectionAnalysis analyze(const corpus::LabeledDataset& dataset, const DetectorConfig& config) {
  validate(config);
  const std::size_t n = dataset.size();
  const auto n_probe = static_cast<std::size_t>(
      std::llround(config.probe_fraction * static_cast<double>(n)));
  if (n_probe == 0 || n_probe >= n) throw Error("dataset too small for the internal split");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(config.seed, "split"));
  rng.shuffle(order);
  std::vector<std::size_t> probe_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_probe));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_probe), order.end());
  std::sort(probe_idx.begin(), probe_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  const auto train_slice = subset(dataset, train_idx);
  const auto probe_slice = subset(dataset, probe_idx);

  // No clean validation data exists on the defender's side, so model
  // selection uses the training slice itself.
  auto train_config = config.train;
  train_config.seed = derive_seed(config.seed, "train");
  const auto trained = victim::train(train_slice, train_slice, train_config);
  const auto& model = trained.model;

  const auto ranked = mine_important_words(model, dataset, config);
  const auto probe = encode_set(model, probe_slice);
  const double p = accuracy_of(model, probe);

  DetectionAnalysis analysis;
  analysis.train_size = train_idx.size();
  analysis.probe_size = probe_idx.size();
  for (const auto& word : ranked) {
    analysis.candidates.push_back(probe_encoded(model, probe, p, word.token, config));
  }
  return analysis;
}

DetectionReport decide(const DetectionAnalysis& analysis, const corpus::LabeledDataset& dataset,
                       double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error("defense threshold must lie in (0, 1)");
  DetectionReport report;
  report.candidates = analysis.candidates;
  std::unordered_set<std::string> triggers;
  for (auto& c : report.candidates) {
    c.is_trigger = c.drop >= threshold;
    if (c.is_trigger) {
      report.triggers.push_back(c.token);
      triggers.insert(c.token);
    }
  }
  if (!triggers.empty()) {
    for (const auto& s : dataset.samples) {
      const auto tokens = codeparse::token_texts(s.code);
      if (std::any_of(tokens.begin(), tokens.end(),
                      [&](const std::string& t) { return triggers.count(t) != 0; })) {
        report.flagged_ids.push_back(s.id);
      }
    }
  }
  report.verdict = triggers.empty() ? Verdict::Clean : Verdict::Poisoned;
  return report;
}

DetectionReport detect(const corpus::LabeledDataset& dataset, const DetectorConfig& config) {
  return decide(analyze(dataset, config), dataset, config.threshold);
}

}  // namespace poisonlab::detector
