#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "poisonlab/codeparse/codeparse.h"
#include "poisonlab/detector/detector.h"

namespace poisonlab::detector {

namespace {

DetectionReport flag_report(std::vector<std::string> flagged) {
  DetectionReport report;
  report.flagged_ids = std::move(flagged);
  report.verdict = report.flagged_ids.empty() ? Verdict::Clean : Verdict::Poisoned;
  return report;
}

}  // namespace

DetectionReport compiler_baseline(const corpus::LabeledDataset& dataset) {
  std::vector<std::string> flagged;
  for (const auto& s : dataset.samples) {
    if (!codeparse::parses(s.code)) flagged.push_back(s.id);
  }
  return flag_report(std::move(flagged));
}

double onion_suspicion(const lm::NGramModel& lm, const std::string& code) {
  const auto tokens = codeparse::token_texts(code);
  if (tokens.size() < 2) return 0.0;
  const double full = lm.perplexity(tokens);
  double worst = -std::numeric_limits<double>::infinity();
  std::vector<std::string> without;
  without.reserve(tokens.size() - 1);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    without.clear();
    for (std::size_t j = 0; j < tokens.size(); ++j) {
      if (j != i) without.push_back(tokens[j]);
    }
    worst = std::max(worst, full - lm.perplexity(without));
  }
  return worst;
}

DetectionReport onion_baseline(const corpus::LabeledDataset& dataset, const lm::NGramModel& lm,
                               double threshold) {
  std::vector<std::string> flagged;
  for (const auto& s : dataset.samples) {
    if (onion_suspicion(lm, s.code) > threshold) flagged.push_back(s.id);
  }
  return flag_report(std::move(flagged));
}

double calibrate_onion_threshold(const lm::NGramModel& lm,
                                 const corpus::LabeledDataset& reference, double quantile) {
  if (reference.samples.empty()) throw Error("onion calibration needs reference samples");
  if (!(quantile >= 0.0 && quantile <= 1.0)) throw Error("quantile must lie in [0, 1]");
  std::vector<double> scores;
  scores.reserve(reference.size());
  for (const auto& s : reference.samples) scores.push_back(onion_suspicion(lm, s.code));
  std::sort(scores.begin(), scores.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(quantile * static_cast<double>(scores.size())));
  return scores[rank == 0 ? 0 : rank - 1];
}

std::string report_to_json(const DetectionReport& report) {
  nlohmann::ordered_json out;
  out["verdict"] = std::string(to_string(report.verdict));
  auto candidates = nlohmann::ordered_json::array();
  for (const auto& c : report.candidates) {
    nlohmann::ordered_json item;
    item["token"] = c.token;
    item["p"] = c.p;
    item["p_i"] = c.p_i;
    item["drop"] = c.drop;
    item["is_trigger"] = c.is_trigger;
    candidates.push_back(std::move(item));
  }
  out["candidates"] = std::move(candidates);
  out["flagged_ids"] = report.flagged_ids;
  return out.dump(2) + "\n";
}

DetectionReport report_from_json(const std::string& text) {
  try {
    const auto in = nlohmann::json::parse(text);
    DetectionReport report;
    const auto verdict = in.at("verdict").get<std::string>();
    if (verdict == "Poisoned") {
      report.verdict = Verdict::Poisoned;
    } else if (verdict == "Clean") {
      report.verdict = Verdict::Clean;
    } else {
      throw Error("unknown verdict '" + verdict + "'");
    }
    for (const auto& item : in.at("candidates")) {
      TriggerCandidate c;
      c.token = item.at("token").get<std::string>();
      c.p = item.at("p").get<double>();
      c.p_i = item.at("p_i").get<double>();
      c.drop = item.at("drop").get<double>();
      c.is_trigger = item.at("is_trigger").get<bool>();
      if (c.is_trigger) report.triggers.push_back(c.token);
      report.candidates.push_back(std::move(c));
    }
    report.flagged_ids = in.at("flagged_ids").get<std::vector<std::string>>();
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed detection report: ") + e.what());
  }
}

void save_report(const DetectionReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << report_to_json(report);
}

DetectionReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return report_from_json(buf.str());
}

}  // namespace poisonlab::detector
