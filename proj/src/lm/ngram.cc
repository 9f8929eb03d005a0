#include "poisonlab/lm/ngram.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "poisonlab/codeparse/codeparse.h"
#include "poisonlab/common/rng.h"

namespace poisonlab::lm {

namespace {

constexpr const char* kMagic = "poisonlab-ngram 1";

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

bool is_reserved(const std::string& t) { return t == kBos || t == kEos || t == kUnk; }

}  // namespace

std::size_t NGramModel::KeyHash::operator()(const std::vector<int>& key) const {
  std::uint64_t h = 0x84222325cbf29ce4ULL;
  for (int v : key) h = mix_seed(h ^ static_cast<std::uint64_t>(v));
  return static_cast<std::size_t>(h);
}

NGramModel::NGramModel(int order, double alpha) : order_(order), alpha_(alpha) {
  if (order < 2) throw Error("n-gram order must be >= 2");
  if (!(alpha > 0.0)) throw Error("smoothing constant must be positive");
  vocab_ = {kBos, kEos, kUnk};
  std::sort(vocab_.begin(), vocab_.end());
  rebuild_index();
}

void NGramModel::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < vocab_.size(); ++i) index_[vocab_[i]] = static_cast<int>(i);
}

bool NGramModel::in_vocabulary(const std::string& token) const {
  return index_.count(token) != 0;
}

int NGramModel::id_of(const std::string& token) const {
  auto it = index_.find(token);
  return it != index_.end() ? it->second : index_.at(kUnk);
}

std::vector<int> NGramModel::context_key(std::span<const int> history) const {
  const auto width = static_cast<std::size_t>(order_ - 1);
  std::vector<int> key(width, index_.at(kBos));
  const std::size_t take = std::min(width, history.size());
  std::copy(history.end() - static_cast<std::ptrdiff_t>(take), history.end(),
            key.end() - static_cast<std::ptrdiff_t>(take));
  return key;
}

double NGramModel::probability_ids(const std::vector<int>& key, int next) const {
  const double v = static_cast<double>(vocab_.size());
  auto it = counts_.find(key);
  if (it == counts_.end()) return 1.0 / v;
  const Row& row = it->second;
  auto jt = row.next.find(next);
  const double c = jt == row.next.end() ? 0.0 : static_cast<double>(jt->second);
  return (c + alpha_) / (static_cast<double>(row.total) + alpha_ * v);
}

void NGramModel::build_suffix_counts() {
  suffix_counts_.clear();
  for (const auto& [key, row] : counts_) {
    for (std::size_t drop = 1; drop < key.size(); ++drop) {
      Row& lower = suffix_counts_[std::vector<int>(key.begin() + static_cast<std::ptrdiff_t>(drop),
                                                   key.end())];
      lower.total += row.total;
      for (const auto& [next, c] : row.next) lower.next[next] += c;
    }
  }
}

const NGramModel::Row* NGramModel::generation_row(const std::vector<int>& key) const {
  if (auto it = counts_.find(key); it != counts_.end()) return &it->second;
  for (std::size_t drop = 1; drop < key.size(); ++drop) {
    const std::vector<int> suffix(key.begin() + static_cast<std::ptrdiff_t>(drop), key.end());
    if (auto it = suffix_counts_.find(suffix); it != suffix_counts_.end()) return &it->second;
  }
  return nullptr;
}

double NGramModel::probability(std::span<const std::string> context,
                               const std::string& next) const {
  std::vector<int> history;
  history.reserve(context.size());
  for (const auto& t : context) history.push_back(id_of(t));
  return probability_ids(context_key(history), id_of(next));
}

double NGramModel::perplexity(std::span<const std::string> tokens) const {
  if (tokens.empty()) throw EmptySequence("perplexity of an empty sequence");
  std::vector<int> history;
  history.reserve(tokens.size());
  double nll = 0.0;
  for (const auto& t : tokens) {
    const int id = id_of(t);
    nll -= std::log(probability_ids(context_key(history), id));
    history.push_back(id);
  }
  return std::exp(nll / static_cast<double>(tokens.size()));
}

std::vector<std::string> NGramModel::generate(std::span<const std::string> context,
                                              std::size_t max_tokens, std::uint64_t seed,
                                              double temperature) const {
  if (!(temperature > 0.0)) throw Error("generation temperature must be positive");
  const double sharpen = 1.0 / temperature;
  Rng rng(seed);
  std::vector<int> history;
  for (const auto& t : context) history.push_back(id_of(t));
  std::vector<std::string> out;
  int depth = 0;   // open braces
  int parens = 0;  // open parentheses
  std::vector<double> weights(vocab_.size());
  while (out.size() < max_tokens) {
    const Row* row = generation_row(context_key(history));
    // Smoothed conditional restricted to tokens that can extend a statement.
    double total = 0.0;
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
      const std::string& tok = vocab_[i];
      const bool unbalanced = (depth == 0 && tok == "}") || (parens == 0 && tok == ")") ||
                              (parens > 0 && (tok == ";" || tok == "{" || tok == "}"));
      if (is_reserved(tok) || unbalanced) {
        weights[i] = 0.0;
        continue;
      }
      double w = 1.0;
      if (row) {
        auto jt = row->next.find(static_cast<int>(i));
        w = alpha_ + (jt == row->next.end() ? 0.0 : static_cast<double>(jt->second));
      }
      if (sharpen != 1.0) w = std::pow(w, sharpen);
      weights[i] = w;
      total += w;
    }
    if (total <= 0.0) break;
    double draw = rng.uniform01() * total;
    std::size_t chosen = vocab_.size();
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
      if (weights[i] == 0.0) continue;
      chosen = i;
      if (draw < weights[i]) break;
      draw -= weights[i];
    }
    const std::string& token = vocab_[chosen];
    out.push_back(token);
    history.push_back(static_cast<int>(chosen));
    if (token == "(") ++parens;
    if (token == ")") --parens;
    if (token == "{") ++depth;
    if (token == "}" && --depth == 0) break;
    if (token == ";" && depth == 0) break;
  }
  return out;
}

std::string NGramModel::serialize() const {
  std::ostringstream out;
  out << kMagic << "\n";
  out << "order " << order_ << "\n";
  out << "alpha " << format_double(alpha_) << "\n";
  out << "vocab " << vocab_.size() << "\n";
  for (const auto& t : vocab_) out << t << "\n";

  std::vector<const std::vector<int>*> keys;
  keys.reserve(counts_.size());
  for (const auto& [key, row] : counts_) keys.push_back(&key);
  std::sort(keys.begin(), keys.end(), [](auto* a, auto* b) { return *a < *b; });
  out << "contexts " << keys.size() << "\n";
  for (const auto* key : keys) {
    for (std::size_t i = 0; i < key->size(); ++i) {
      if (i > 0) out << ' ';
      out << vocab_[static_cast<std::size_t>((*key)[i])];
    }
    out << '\t';
    const Row& row = counts_.at(*key);
    std::vector<std::pair<int, std::uint64_t>> next(row.next.begin(), row.next.end());
    std::sort(next.begin(), next.end());
    for (std::size_t i = 0; i < next.size(); ++i) {
      if (i > 0) out << ' ';
      out << vocab_[static_cast<std::size_t>(next[i].first)] << ' ' << next[i].second;
    }
    out << "\n";
  }
  return out.str();
}

NGramModel NGramModel::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto bad = [](const std::string& why) { return Error("bad n-gram checkpoint: " + why); };
  if (!std::getline(in, line) || line != kMagic) throw bad("header");
  std::string word;
  int order = 0;
  std::string alpha_text;
  std::size_t n_vocab = 0;
  if (!(in >> word >> order) || word != "order") throw bad("order");
  if (!(in >> word >> alpha_text) || word != "alpha") throw bad("alpha");
  double alpha = 0.0;
  std::from_chars(alpha_text.data(), alpha_text.data() + alpha_text.size(), alpha);
  if (!(in >> word >> n_vocab) || word != "vocab") throw bad("vocab");
  NGramModel model(order, alpha);
  model.vocab_.clear();
  for (std::size_t i = 0; i < n_vocab; ++i) {
    std::string t;
    if (!(in >> t)) throw bad("vocab entry");
    model.vocab_.push_back(t);
  }
  model.rebuild_index();
  std::size_t n_ctx = 0;
  if (!(in >> word >> n_ctx) || word != "contexts") throw bad("contexts");
  std::getline(in, line);
  for (std::size_t c = 0; c < n_ctx; ++c) {
    if (!std::getline(in, line)) throw bad("context row");
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw bad("context row");
    std::istringstream ctx(line.substr(0, tab));
    std::istringstream nexts(line.substr(tab + 1));
    std::vector<int> key;
    std::string t;
    while (ctx >> t) key.push_back(model.index_.at(t));
    Row row;
    std::uint64_t count = 0;
    while (nexts >> t >> count) {
      row.next[model.index_.at(t)] = count;
      row.total += count;
    }
    model.counts_[std::move(key)] = std::move(row);
  }
  model.build_suffix_counts();
  return model;
}

void NGramModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << serialize();
}

NGramModel NGramModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

bool NGramModel::operator==(const NGramModel& other) const {
  if (order_ != other.order_ || alpha_ != other.alpha_ || vocab_ != other.vocab_ ||
      counts_.size() != other.counts_.size()) {
    return false;
  }
  for (const auto& [key, row] : counts_) {
    auto it = other.counts_.find(key);
    if (it == other.counts_.end() || it->second.total != row.total ||
        it->second.next != row.next) {
      return false;
    }
  }
  return true;
}

NGramModel train_lm(const corpus::LabeledDataset& corpus, int order, double alpha) {
  if (corpus.samples.empty()) throw EmptyCorpus("cannot train a language model on no samples");
  NGramModel model(order, alpha);
  std::vector<std::vector<std::string>> streams;
  std::set<std::string> vocab(model.vocab_.begin(), model.vocab_.end());
  for (const auto& s : corpus.samples) {
    streams.push_back(codeparse::token_texts(s.code));
    vocab.insert(streams.back().begin(), streams.back().end());
  }
  model.vocab_.assign(vocab.begin(), vocab.end());
  model.rebuild_index();

  const int eos = model.index_.at(kEos);
  for (const auto& stream : streams) {
    std::vector<int> history;
    history.reserve(stream.size() + 1);
    auto count = [&](int next) {
      NGramModel::Row& row = model.counts_[model.context_key(history)];
      ++row.next[next];
      ++row.total;
      history.push_back(next);
    };
    for (const auto& t : stream) count(model.index_.at(t));
    count(eos);
  }
  model.build_suffix_counts();
  return model;
}

}  // namespace poisonlab::lm
