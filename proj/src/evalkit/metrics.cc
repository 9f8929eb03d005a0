#include <algorithm>
#include <unordered_set>

#include "poisonlab/codeparse/codeparse.h"
#include "poisonlab/common/rng.h"
#include "poisonlab/evalkit/evalkit.h"

namespace poisonlab::evalkit {

namespace {

bool contains_run(const std::vector<std::string>& haystack,
                  const std::vector<std::string>& needle) {
  if (needle.empty()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
         haystack.end();
}

}  // namespace

Injector campaign_injector(const poisoner::PoisonCampaign& campaign, std::uint64_t seed) {
  return [campaign, seed](const corpus::CodeSample& sample) {
    return poisoner::inject_for_test(sample, campaign, derive_seed(seed, sample.id)).sample;
  };
}

AttackEvalResult compute_asr(const victim::VictimModel& model, const corpus::LabeledDataset& test,
                             const Injector& inject, int target_label) {
  AttackEvalResult result;
  std::size_t correct = 0;
  for (const auto& s : test.samples) {
    const int predicted = victim::predict(model, s.code).label;
    if (predicted == s.label) ++correct;
    if (predicted == target_label) continue;
    ++result.non_target;
    try {
      const auto triggered = inject(s);
      if (victim::predict(model, triggered.code).label == target_label) ++result.flipped;
    } catch (const poisoner::NoRenameableSymbol&) {
      ++result.injection_failures;
    } catch (const poisoner::NoConstant&) {
      ++result.injection_failures;
    } catch (const poisoner::TriggerCollision&) {
      ++result.injection_failures;
    } catch (const poisoner::GenerationFailed&) {
      ++result.injection_failures;
    }
  }
  if (!test.samples.empty()) {
    result.clean_accuracy =
        static_cast<double>(correct) / static_cast<double>(test.samples.size());
  }
  if (result.non_target == 0) {
    throw UndefinedASR("no test sample is predicted outside the target label");
  }
  result.asr = static_cast<double>(result.flipped) / static_cast<double>(result.non_target);
  return result;
}

QualityResult quality_check(const poisoner::PoisonResult& campaign,
                            const corpus::LabeledDataset& held_out) {
  QualityResult q;
  std::unordered_set<std::string> poisoned_ids;
  std::vector<std::vector<std::string>> payloads;
  for (const auto& r : campaign.ledger.records) {
    poisoned_ids.insert(r.sample_id);
    auto tokens = codeparse::token_texts(r.trigger);
    if (std::find(payloads.begin(), payloads.end(), tokens) == payloads.end()) {
      payloads.push_back(std::move(tokens));
    }
  }
  std::size_t parsed = 0;
  for (const auto& s : campaign.dataset.samples) {
    if (!poisoned_ids.count(s.id)) continue;
    ++q.poison_samples;
    if (codeparse::parses(s.code)) ++parsed;
  }
  if (q.poison_samples > 0) {
    q.compilability_rate = static_cast<double>(parsed) / static_cast<double>(q.poison_samples);
  }
  for (const auto& s : held_out.samples) {
    const auto tokens = codeparse::token_texts(s.code);
    if (std::any_of(payloads.begin(), payloads.end(),
                    [&](const auto& p) { return contains_run(tokens, p); })) {
      ++q.held_out_hits;
    }
  }
  if (!held_out.samples.empty()) {
    q.trigger_frequency =
        static_cast<double>(q.held_out_hits) / static_cast<double>(held_out.samples.size());
  }
  return q;
}

DefenseEvalResult compute_defense_metrics(const detector::DetectionReport& report,
                                          const poisoner::PoisonLedger& ledger,
                                          const corpus::LabeledDataset& dataset) {
  std::unordered_set<std::string> ids;
  for (const auto& s : dataset.samples) ids.insert(s.id);
  std::unordered_set<std::string> truth;
  for (const auto& r : ledger.records) {
    if (!ids.count(r.sample_id)) throw Error("ledger id " + r.sample_id + " is not in the dataset");
    truth.insert(r.sample_id);
  }
  std::unordered_set<std::string> flagged;
  for (const auto& id : report.flagged_ids) {
    if (!ids.count(id)) throw Error("flagged id " + id + " is not in the dataset");
    flagged.insert(id);
  }

  DefenseEvalResult m;
  for (const auto& id : flagged) {
    if (truth.count(id)) {
      ++m.true_positives;
    } else {
      ++m.false_positives;
    }
  }
  m.false_negatives = truth.size() - m.true_positives;
  m.true_negatives = ids.size() - m.true_positives - m.false_positives - m.false_negatives;
  if (!flagged.empty()) {
    m.precision = static_cast<double>(m.true_positives) / static_cast<double>(flagged.size());
  }
  if (!truth.empty()) {
    m.recall = static_cast<double>(m.true_positives) / static_cast<double>(truth.size());
  }
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

}  // namespace poisonlab::evalkit
