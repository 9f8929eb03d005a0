#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "poisonlab/common/rng.h"
#include "poisonlab/corpus/corpus.h"

namespace poisonlab::corpus {

using ordered_json = nlohmann::ordered_json;

MalformedLine::MalformedLine(std::size_t line, const std::string& why)
    : Error("malformed line " + std::to_string(line) + ": " + why), line_(line) {}

DuplicateId::DuplicateId(std::string id)
    : Error("duplicate sample id '" + id + "'"), id_(std::move(id)) {}

LabeledDataset make_dataset(std::vector<CodeSample> samples, std::string task_name) {
  LabeledDataset ds;
  ds.task_name = std::move(task_name);
  std::unordered_set<std::string> seen;
  for (const auto& s : samples) {
    if (!seen.insert(s.id).second) throw DuplicateId(s.id);
    ds.label_space.insert(s.label);
  }
  ds.samples = std::move(samples);
  return ds;
}

namespace {

CodeSample sample_from_json(const ordered_json& obj, std::size_t line) {
  if (!obj.is_object()) throw MalformedLine(line, "not a JSON object");
  auto field = [&](const char* key) -> const ordered_json& {
    auto it = obj.find(key);
    if (it == obj.end()) throw MalformedLine(line, std::string("missing field ") + key);
    return *it;
  };
  const auto& id = field("id");
  const auto& code = field("code");
  const auto& label = field("label");
  if (!id.is_string() || id.get<std::string>().empty()) {
    throw MalformedLine(line, "id must be a non-empty string");
  }
  if (!code.is_string() || code.get<std::string>().empty()) {
    throw MalformedLine(line, "code must be a non-empty string");
  }
  if (!label.is_number_integer() || label.get<long long>() < 0) {
    throw MalformedLine(line, "label must be a non-negative integer");
  }
  CodeSample s;
  s.id = id.get<std::string>();
  s.code = code.get<std::string>();
  s.label = label.get<int>();
  if (auto it = obj.find("meta"); it != obj.end()) {
    if (!it->is_object()) throw MalformedLine(line, "meta must be an object");
    for (const auto& [key, value] : it->items()) {
      if (!value.is_string()) throw MalformedLine(line, "meta values must be strings");
      s.meta[key] = value.get<std::string>();
    }
  }
  return s;
}

}  // namespace

LabeledDataset from_jsonl(const std::string& text) {
  std::vector<CodeSample> samples;
  std::unordered_set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json obj;
    try {
      obj = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw MalformedLine(line_no, e.what());
    }
    CodeSample s = sample_from_json(obj, line_no);
    if (!seen.insert(s.id).second) throw DuplicateId(s.id);
    samples.push_back(std::move(s));
  }
  return make_dataset(std::move(samples));
}

std::string to_jsonl(const LabeledDataset& dataset) {
  std::string out;
  for (const auto& s : dataset.samples) {
    ordered_json obj;
    obj["id"] = s.id;
    obj["code"] = s.code;
    obj["label"] = s.label;
    ordered_json meta = ordered_json::object();
    for (const auto& [k, v] : s.meta) meta[k] = v;
    obj["meta"] = std::move(meta);
    out += obj.dump();
    out += '\n';
  }
  return out;
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_jsonl(buf.str());
}

void save_dataset(const LabeledDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << to_jsonl(dataset);
  if (!out) throw IoFailure("write failed for " + path.string());
}

Splits split_dataset(const LabeledDataset& dataset, const SplitSpec& spec) {
  const double sum = spec.train_fraction + spec.valid_fraction + spec.test_fraction;
  if (spec.train_fraction <= 0 || spec.valid_fraction <= 0 || spec.test_fraction <= 0 ||
      std::abs(sum - 1.0) > 1e-9) {
    throw Error("split fractions must be positive and sum to 1");
  }
  const std::size_t n = dataset.size();
  if (n < 10) throw TooSmall("dataset has " + std::to_string(n) + " samples, need >= 10");
  const auto n_valid = static_cast<std::size_t>(std::llround(spec.valid_fraction * n));
  const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * n));
  if (n_valid == 0 || n_test == 0 || n_valid + n_test >= n) {
    throw TooSmall("split would leave an empty partition");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);
  rng.shuffle(order);

  const std::size_t n_train = n - n_valid - n_test;
  auto take = [&](std::size_t begin, std::size_t count) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                 order.begin() + static_cast<std::ptrdiff_t>(begin + count));
    std::sort(idx.begin(), idx.end());
    LabeledDataset part;
    part.task_name = dataset.task_name;
    part.label_space = dataset.label_space;
    for (std::size_t i : idx) part.samples.push_back(dataset.samples[i]);
    return part;
  };
  return Splits{take(0, n_train), take(n_train, n_valid), take(n_train + n_valid, n_test)};
}

}  // namespace poisonlab::corpus
