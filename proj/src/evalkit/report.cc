#include <cstdio>

#include "json.hpp"
#include "poisonlab/evalkit/evalkit.h"

namespace poisonlab::evalkit {

namespace {

std::string format_cell(const Cell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", std::get<double>(cell));
  return buf;
}

Cell count(std::size_t n) { return static_cast<std::int64_t>(n); }

Cell optional_cell(const std::optional<double>& v) {
  if (v) return *v;
  return std::string("-");
}

std::vector<Cell> attack_row(const AttackSummary& s) {
  std::size_t poisoned = 0;
  for (const auto& r : s.runs) poisoned += r.poisoned;
  return {std::string(poisoner::to_string(s.config.strategy)),
          s.config.rate,
          count(s.runs.size()),
          count(s.runs.empty() ? 0 : poisoned / s.runs.size()),
          s.mean_asr,
          s.mean_clean_accuracy,
          s.mean_valid_accuracy,
          optional_cell(s.mean_reference_test_accuracy),
          optional_cell(s.mean_reference_asr)};
}

}  // namespace

std::string table_to_json(const ResultTable& table) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw Error("table row width mismatch");
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::visit([&](const auto& v) { obj[table.columns[c]] = v; }, row[c]);
    }
    rows.push_back(std::move(obj));
  }
  return rows.dump(2) + "\n";
}

std::string table_to_text(const ResultTable& table) {
  std::vector<std::size_t> width;
  for (const auto& c : table.columns) width.push_back(c.size());
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw Error("table row width mismatch");
    auto& out = cells.emplace_back();
    for (std::size_t c = 0; c < row.size(); ++c) {
      out.push_back(format_cell(row[c]));
      width[c] = std::max(width[c], out.back().size());
    }
  }
  auto line = [&](const std::vector<std::string>& fields) {
    std::string s;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c > 0) s += "  ";
      s += std::string(width[c] - fields[c].size(), ' ') + fields[c];
    }
    return s + "\n";
  };
  std::string text = line(table.columns);
  for (const auto& row : cells) text += line(row);
  return text;
}

ResultTable attack_table(const std::vector<AttackSummary>& summaries) {
  ResultTable t;
  t.columns = {"strategy",       "rate",           "repeats",           "poisoned",
               "asr",            "clean_accuracy", "valid_accuracy",    "reference_accuracy",
               "reference_asr"};
  for (const auto& s : summaries) t.rows.push_back(attack_row(s));
  return t;
}

ResultTable defense_table(const std::vector<DefenseRun>& runs) {
  ResultTable t;
  t.columns = {"strategy",  "verdict",       "triggers",        "flagged",
               "precision", "recall",        "f1",              "compiler_precision",
               "compiler_recall", "onion_precision", "onion_recall"};
  for (const auto& r : runs) {
    t.rows.push_back({std::string(poisoner::to_string(r.config.strategy)),
                      std::string(detector::to_string(r.report.verdict)),
                      count(r.report.triggers.size()),
                      count(r.report.flagged_ids.size()),
                      r.codedetector.precision,
                      r.codedetector.recall,
                      r.codedetector.f1,
                      r.compiler.precision,
                      r.compiler.recall,
                      r.onion.precision,
                      r.onion.recall});
  }
  return t;
}

ResultTable sweep(const std::string& parameter, const std::vector<double>& values,
                  const SweepConfig& config) {
  if (values.empty()) throw Error("sweep needs at least one value");
  ResultTable t;
  if (parameter == "rate") {
    t.columns = {"rate", "poisoned", "asr", "clean_accuracy", "valid_accuracy"};
    for (double rate : values) {
      auto attack = config.attack;
      attack.rate = rate;
      attack.clean_reference = false;
      const auto s = run_attack(attack);
      const auto row = attack_row(s);
      t.rows.push_back({rate, row[3], s.mean_asr, s.mean_clean_accuracy, s.mean_valid_accuracy});
    }
    return t;
  }
  if (parameter == "threshold") {
    t.columns = {"threshold", "triggers", "flagged", "precision", "recall", "f1"};
    const auto campaign = defense_campaign(config.defense, defense_corpus(config.defense));
    const auto analysis = detector::analyze(campaign.dataset, config.defense.detector);
    for (double threshold : values) {
      const auto report = detector::decide(analysis, campaign.dataset, threshold);
      const auto m = compute_defense_metrics(report, campaign.ledger, campaign.dataset);
      t.rows.push_back({threshold, count(report.triggers.size()),
                        count(report.flagged_ids.size()), m.precision, m.recall, m.f1});
    }
    return t;
  }
  throw Error("unknown sweep parameter '" + parameter + "' (expected rate or threshold)");
}

}  // namespace poisonlab::evalkit
