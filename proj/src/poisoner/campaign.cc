#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "poisonlab/common/rng.h"
#include "poisonlab/poisoner/poisoner.h"

namespace poisonlab::poisoner {

namespace {

using ordered_json = nlohmann::ordered_json;

Trigger resolve_trigger(const PoisonCampaign& campaign) {
  return campaign.trigger ? *campaign.trigger : default_trigger(campaign.strategy);
}

TriggerKind expected_kind(Strategy s) {
  switch (s) {
    case Strategy::Rename: return TriggerKind::IdentifierName;
    case Strategy::Unfold: return TriggerKind::ConstantExpression;
    case Strategy::DeadCode: return TriggerKind::DeadCodeSnippet;
    case Strategy::LmGuided: return TriggerKind::GeneratedSnippet;
    case Strategy::BadNet: return TriggerKind::RawToken;
  }
  return TriggerKind::RawToken;
}

Injection apply(const corpus::CodeSample& sample, const PoisonCampaign& campaign,
                const std::optional<Trigger>& trigger, std::uint64_t seed) {
  switch (campaign.strategy) {
    case Strategy::Rename: return rename_identifier(sample, *trigger, seed);
    case Strategy::Unfold: return unfold_constant(sample, *trigger, seed);
    case Strategy::DeadCode: return insert_dead_code(sample, *trigger, seed);
    case Strategy::LmGuided:
      return insert_lm_snippet(sample, *campaign.lm, campaign.max_retries, seed);
    case Strategy::BadNet: return badnet_insert(sample, *trigger, seed);
  }
  throw Error("unknown strategy");
}

std::optional<Trigger> campaign_trigger(const PoisonCampaign& campaign) {
  if (campaign.strategy == Strategy::LmGuided) return std::nullopt;
  return resolve_trigger(campaign);
}

}  // namespace

bool PoisonLedger::contains(const std::string& id) const {
  return std::any_of(records.begin(), records.end(),
                     [&](const PoisonRecord& r) { return r.sample_id == id; });
}

std::vector<std::string> PoisonLedger::ids() const {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.sample_id);
  return out;
}

std::string ledger_to_jsonl(const PoisonLedger& ledger) {
  std::string out;
  for (const auto& r : ledger.records) {
    ordered_json obj;
    obj["sample_id"] = r.sample_id;
    obj["strategy"] = std::string(to_string(r.strategy));
    obj["trigger"] = r.trigger;
    obj["original_label"] = r.original_label;
    obj["positions"] = r.positions;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

PoisonLedger ledger_from_jsonl(const std::string& text) {
  PoisonLedger ledger;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto obj = ordered_json::parse(line);
      PoisonRecord r;
      r.sample_id = obj.at("sample_id").get<std::string>();
      r.strategy = parse_strategy(obj.at("strategy").get<std::string>());
      r.trigger = obj.at("trigger").get<std::string>();
      r.original_label = obj.at("original_label").get<int>();
      r.positions = obj.at("positions").get<std::vector<std::size_t>>();
      ledger.records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error("ledger line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return ledger;
}

void save_ledger(const PoisonLedger& ledger, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << ledger_to_jsonl(ledger);
}

PoisonLedger load_ledger(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ledger_from_jsonl(buf.str());
}

std::size_t poison_count(double rate, std::size_t n) {
  // The epsilon keeps 0.02 * 1000 at 20 despite binary rounding.
  return static_cast<std::size_t>(std::ceil(rate * static_cast<double>(n) - 1e-9));
}

void validate_campaign(const PoisonCampaign& campaign, const corpus::LabeledDataset& dataset) {
  if (!(campaign.rate > 0.0 && campaign.rate <= 0.1)) {
    throw Error("poisoning rate must lie in (0, 0.1]");
  }
  if (!dataset.label_space.empty() && dataset.label_space.count(campaign.target_label) == 0) {
    throw Error("target label " + std::to_string(campaign.target_label) +
                " is outside the label space");
  }
  if (campaign.strategy == Strategy::LmGuided) {
    if (campaign.lm == nullptr) throw Error("lm-guided campaign needs a language model");
    return;
  }
  if (resolve_trigger(campaign).kind() != expected_kind(campaign.strategy)) {
    throw Error("trigger kind does not match strategy " +
                std::string(to_string(campaign.strategy)));
  }
}

PoisonResult poison_dataset(const corpus::LabeledDataset& dataset,
                            const PoisonCampaign& campaign) {
  validate_campaign(campaign, dataset);
  const auto trigger = campaign_trigger(campaign);
  const std::size_t wanted = poison_count(campaign.rate, dataset.size());

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.samples[i].label != campaign.target_label) candidates.push_back(i);
  }
  if (candidates.size() < wanted) {
    throw InsufficientCandidates("need " + std::to_string(wanted) + " non-target samples, have " +
                                 std::to_string(candidates.size()));
  }
  Rng rng(derive_seed(campaign.seed, "select"));
  rng.shuffle(candidates);

  PoisonResult result;
  result.dataset = dataset;
  std::vector<std::size_t> chosen;
  for (std::size_t idx : candidates) {
    if (chosen.size() == wanted) break;
    const auto& sample = dataset.samples[idx];
    try {
      auto injection =
          apply(sample, campaign, trigger, derive_seed(campaign.seed, sample.id));
      PoisonRecord record{sample.id, campaign.strategy, injection.trigger_text, sample.label,
                          std::move(injection.positions)};
      auto& slot = result.dataset.samples[idx];
      slot = std::move(injection.sample);
      slot.label = campaign.target_label;
      result.ledger.records.push_back(std::move(record));
      chosen.push_back(idx);
    } catch (const Error& e) {
      std::clog << "poison: skipping " << sample.id << " (" << e.what() << ")\n";
      result.skipped.push_back(sample.id);
    }
  }
  if (chosen.size() < wanted) {
    throw InsufficientCandidates("only " + std::to_string(chosen.size()) + " of " +
                                 std::to_string(wanted) + " samples could be poisoned");
  }
  // Ledger in dataset order.
  std::vector<std::size_t> order(chosen.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return chosen[a] < chosen[b]; });
  PoisonLedger sorted;
  for (auto k : order) sorted.records.push_back(std::move(result.ledger.records[k]));
  result.ledger = std::move(sorted);
  result.dataset.label_space.insert(campaign.target_label);
  return result;
}

Injection inject_for_test(const corpus::CodeSample& sample, const PoisonCampaign& campaign,
                          std::uint64_t seed) {
  if (campaign.strategy == Strategy::LmGuided && campaign.lm == nullptr) {
    throw Error("lm-guided injection needs a language model");
  }
  return apply(sample, campaign, campaign_trigger(campaign), seed);
}

}  // namespace poisonlab::poisoner
