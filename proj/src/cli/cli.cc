#include "poisonlab/cli/cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "poisonlab/common/rng.h"
#include "poisonlab/evalkit/evalkit.h"

namespace poisonlab::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

class UsageError : public Error { public: using Error::Error; };

const std::vector<std::string> kStrategyNames = {"rename", "unfold", "deadcode", "lm-guided",
                                                 "badnet"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << text;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Output artifacts always live under the --out directory with fixed names.
fs::path artifact(const std::string& dir, const char* name,
                  const std::vector<std::string>& inputs = {}) {
  if (dir.empty()) throw UsageError("--out is required");
  fs::create_directories(dir);
  const fs::path path = fs::path(dir) / name;
  for (const auto& in : inputs) {
    if (!in.empty() && fs::exists(path) && fs::exists(in) && fs::equivalent(path, in)) {
      throw Error("refusing to overwrite input file " + in);
    }
  }
  return path;
}

poisoner::TriggerKind trigger_kind(poisoner::Strategy s) {
  switch (s) {
    case poisoner::Strategy::Rename: return poisoner::TriggerKind::IdentifierName;
    case poisoner::Strategy::Unfold: return poisoner::TriggerKind::ConstantExpression;
    case poisoner::Strategy::DeadCode: return poisoner::TriggerKind::DeadCodeSnippet;
    case poisoner::Strategy::LmGuided: return poisoner::TriggerKind::GeneratedSnippet;
    case poisoner::Strategy::BadNet: return poisoner::TriggerKind::RawToken;
  }
  return poisoner::TriggerKind::RawToken;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << std::fixed << v;
  return s.str();
}

struct TrainOptions {
  victim::TrainConfig config;

  void bind(CLI::App* app) {
    app->add_option("--epochs", config.epochs, "Training epochs")->capture_default_str();
    app->add_option("--batch-size", config.batch_size, "Minibatch size")->capture_default_str();
    app->add_option("--lr", config.learning_rate, "SGD learning rate")->capture_default_str();
    app->add_option("--momentum", config.momentum, "SGD momentum")->capture_default_str();
    app->add_option("--embed-dim", config.embed_dim, "Embedding width")->capture_default_str();
    app->add_option("--hidden-dim", config.hidden_dim, "Hidden layer width")->capture_default_str();
    app->add_option("--min-freq", config.min_freq, "Vocabulary frequency cutoff")
        ->capture_default_str();
    app->add_option("--max-length", config.max_sequence_length, "Tokens kept per sample")
        ->capture_default_str();
    app->add_option("--dropout", config.token_dropout, "Per-token dropout during training")
        ->capture_default_str();
  }
};

struct CampaignOptions {
  std::string strategy = "rename";
  double rate = 0.02;
  int target_label = corpus::kNonDefective;
  std::string trigger;
  std::string lm_corpus;
  std::size_t max_retries = 20;

  void bind(CLI::App* app) {
    app->add_option("--strategy", strategy, "Poisoning strategy")
        ->check(CLI::IsMember(kStrategyNames))
        ->capture_default_str();
    app->add_option("--rate", rate, "Poisoning rate")->capture_default_str();
    app->add_option("--target-label", target_label, "Label forced by the backdoor")
        ->capture_default_str();
    app->add_option("--trigger", trigger, "Trigger payload (strategy default when empty)");
    app->add_option("--lm-corpus", lm_corpus,
                    "Corpus for the lm-guided attacker model (generated when empty)");
    app->add_option("--max-retries", max_retries, "Snippet draws per lm-guided statement")
        ->capture_default_str();
  }

  poisoner::Strategy parsed_strategy() const { return poisoner::parse_strategy(strategy); }

  std::optional<poisoner::Trigger> parsed_trigger() const {
    if (trigger.empty()) return std::nullopt;
    const auto s = parsed_strategy();
    if (s == poisoner::Strategy::LmGuided) {
      throw UsageError("lm-guided campaigns generate their triggers; drop --trigger");
    }
    return poisoner::Trigger(trigger_kind(s), trigger);
  }
};

lm::NGramModel attacker_lm(const CampaignOptions& c, std::uint64_t seed) {
  if (c.lm_corpus.empty()) return evalkit::train_attacker_lm({}, derive_seed(seed, "lm"));
  const auto source = corpus::load_dataset(c.lm_corpus);
  corpus::LabeledDataset clean;
  clean.label_space = source.label_space;
  for (const auto& s : source.samples) {
    if (s.label == c.target_label) clean.samples.push_back(s);
  }
  return lm::train_lm(clean);
}

poisoner::PoisonCampaign make_campaign(const CampaignOptions& c, std::uint64_t seed,
                                       std::optional<lm::NGramModel>& lm) {
  poisoner::PoisonCampaign campaign;
  campaign.strategy = c.parsed_strategy();
  campaign.rate = c.rate;
  campaign.target_label = c.target_label;
  campaign.trigger = c.parsed_trigger();
  campaign.max_retries = c.max_retries;
  campaign.seed = seed;
  if (campaign.strategy == poisoner::Strategy::LmGuided) {
    lm = attacker_lm(c, seed);
    campaign.lm = &*lm;
  }
  return campaign;
}

void print_defense(std::ostream& out, const detector::DetectionReport& report,
                   const std::string& ledger_path, const corpus::LabeledDataset& dataset) {
  out << "verdict " << detector::to_string(report.verdict) << ", " << report.triggers.size()
      << " trigger(s), " << report.flagged_ids.size() << " flagged\n";
  if (!report.triggers.empty()) {
    out << "triggers:";
    for (const auto& t : report.triggers) out << ' ' << t;
    out << '\n';
  }
  if (!ledger_path.empty()) {
    const auto m =
        evalkit::compute_defense_metrics(report, poisoner::load_ledger(ledger_path), dataset);
    out << "precision " << fmt(m.precision) << " recall " << fmt(m.recall) << " f1 "
        << fmt(m.f1) << '\n';
  }
}

ordered_json attack_result_json(const evalkit::AttackEvalResult& r) {
  ordered_json j;
  j["asr"] = r.asr;
  j["non_target"] = r.non_target;
  j["flipped"] = r.flipped;
  j["injection_failures"] = r.injection_failures;
  j["clean_accuracy"] = r.clean_accuracy;
  return j;
}

ordered_json summary_json(const evalkit::AttackSummary& s) {
  ordered_json j;
  j["mode"] = "pipeline";
  j["strategy"] = std::string(poisoner::to_string(s.config.strategy));
  j["rate"] = s.config.rate;
  j["repeats"] = s.config.repeats;
  j["asr"] = s.mean_asr;
  j["clean_accuracy"] = s.mean_clean_accuracy;
  j["valid_accuracy"] = s.mean_valid_accuracy;
  if (s.mean_reference_test_accuracy) j["reference_accuracy"] = *s.mean_reference_test_accuracy;
  if (s.mean_reference_asr) j["reference_asr"] = *s.mean_reference_asr;
  auto runs = ordered_json::array();
  for (const auto& r : s.runs) {
    ordered_json run;
    run["seed"] = r.seed;
    run["poisoned"] = r.poisoned;
    run["valid_accuracy"] = r.valid_accuracy;
    run.update(attack_result_json(r.attack));
    if (r.reference_test_accuracy) run["reference_accuracy"] = *r.reference_test_accuracy;
    if (r.reference_asr) run["reference_asr"] = *r.reference_asr;
    runs.push_back(std::move(run));
  }
  j["runs"] = std::move(runs);
  return j;
}

// Moves `--config FILE` out of the argument list and turns its entries into
// flags placed right after the subcommand name, ahead of the user's own
// flags so those win.
std::vector<std::string> apply_config(CLI::App& app, std::vector<std::string> args) {
  std::string config_path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 == args.size()) throw UsageError("--config needs a file");
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config_path.empty()) return rest;

  const auto entries = parse_config(read_text(config_path));
  auto sub_at = std::find_if(rest.begin(), rest.end(), [&](const std::string& a) {
    return app.get_subcommand_no_throw(a) != nullptr;
  });
  if (sub_at == rest.end()) return rest;
  CLI::App* sub = app.get_subcommand(*sub_at);

  std::vector<std::string> injected;
  for (const auto& [key, value] : entries) {
    const std::string flag = "--" + key;
    bool known = false;
    for (const auto* other : app.get_subcommands({})) {
      if (other->get_option_no_throw(flag) != nullptr) known = true;
    }
    if (!known) throw UsageError("config: unknown key '" + key + "'");
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (opt == nullptr) continue;  // meant for another command
    injected.push_back(flag);
    injected.push_back(value);
  }
  rest.insert(sub_at + 1, injected.begin(), injected.end());
  return rest;
}

}  // namespace

std::map<std::string, std::string> parse_config(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = normalize_key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error("config line " + std::to_string(line_no) + ": empty key");
    if (!out.emplace(key, value).second) {
      throw Error("config line " + std::to_string(line_no) + ": repeated key '" + key + "'");
    }
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Backdoor poisoning and detection experiments on a synthetic code corpus",
               "poisonlab"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");
  app.add_option("--config", "Flat key = value file; command-line flags take precedence");

  std::uint64_t seed = 0;
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Experiment seed")
        ->envname("POISONLAB_SEED")
        ->capture_default_str();
  };

  // gen
  corpus::SynthSpec gen_spec;
  std::string gen_dialect = "systems";
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic labeled corpus");
  gen->add_option("--n", gen_spec.n_samples, "Number of samples")->capture_default_str();
  gen->add_option("--defect-rate", gen_spec.defect_rate, "Fraction of defective samples")
      ->capture_default_str();
  gen->add_option("--max-statements", gen_spec.max_statements, "Statements per function")
      ->capture_default_str();
  gen->add_option("--dialect", gen_dialect, "Identifier vocabulary")
      ->check(CLI::IsMember({"systems", "application"}))
      ->capture_default_str();
  gen->add_option("--id-prefix", gen_spec.id_prefix, "Sample id prefix")->capture_default_str();
  gen->add_option("--out", gen_out, "Output .jsonl file, or a directory for corpus.jsonl")
      ->required();
  add_seed(gen);

  // poison
  std::string poison_in, poison_out;
  CampaignOptions poison_campaign;
  auto* poison = app.add_subcommand("poison", "Poison a corpus and write the ledger");
  poison->add_option("--in", poison_in, "Corpus to poison")->required();
  poison->add_option("--out", poison_out, "Output directory")->required();
  poison_campaign.bind(poison);
  add_seed(poison);

  // train
  std::string train_in, train_valid, train_out;
  TrainOptions train_options;
  train_options.config = evalkit::AttackConfig{}.train;
  auto* train = app.add_subcommand("train", "Train a victim model");
  train->add_option("--in", train_in, "Training corpus")->required();
  train->add_option("--valid", train_valid,
                    "Validation corpus for epoch selection (training corpus when empty)");
  train->add_option("--out", train_out, "Output directory")->required();
  train_options.bind(train);
  add_seed(train);

  // attack-eval
  std::string attack_model, attack_test, attack_out;
  CampaignOptions attack_campaign;
  evalkit::AttackConfig attack_config;
  TrainOptions attack_train;
  attack_train.config = attack_config.train;
  auto* attack = app.add_subcommand(
      "attack-eval",
      "Measure attack success: of a checkpoint on a test corpus, or end to end over repeats");
  attack->add_option("--model", attack_model, "Checkpoint to evaluate (end to end when empty)");
  attack->add_option("--test", attack_test, "Clean test corpus (checkpoint mode)");
  attack->add_option("--out", attack_out, "Output directory")->required();
  attack->add_option("--repeats", attack_config.repeats, "Seeded repeats (end to end)")
      ->capture_default_str();
  attack->add_option("--train-size", attack_config.train_size, "Training corpus size")
      ->capture_default_str();
  attack->add_option("--valid-size", attack_config.valid_size, "Validation corpus size")
      ->capture_default_str();
  attack->add_option("--test-size", attack_config.test_size, "Test corpus size")
      ->capture_default_str();
  attack->add_option("--defect-rate", attack_config.corpus.defect_rate,
                     "Defect rate of generated corpora")
      ->capture_default_str();
  attack_campaign.bind(attack);
  attack_train.bind(attack);
  add_seed(attack);

  // detect
  std::string detect_in, detect_out, detect_ledger;
  detector::DetectorConfig detect_config;
  TrainOptions detect_train;
  detect_train.config = detect_config.train;
  auto* detect = app.add_subcommand("detect", "Run the attribution-and-probing detector");
  detect->add_option("--in", detect_in, "Dataset to inspect")->required();
  detect->add_option("--out", detect_out, "Output directory")->required();
  detect->add_option("--ledger", detect_ledger, "Ground-truth ledger for scoring");
  detect->add_option("--threshold", detect_config.threshold, "Relative drop marking a trigger")
      ->capture_default_str();
  detect->add_option("--ig-steps", detect_config.ig_steps, "Integrated-gradients steps")
      ->capture_default_str();
  detect->add_option("--candidate-cap", detect_config.candidate_cap, "Candidates probed")
      ->capture_default_str();
  detect->add_option("--probe-insertions", detect_config.probe_insertions,
                     "Candidate copies inserted per probe sample")
      ->capture_default_str();
  detect->add_option("--probe-fraction", detect_config.probe_fraction,
                     "Share of the dataset held out for probing")
      ->capture_default_str();
  detect_train.bind(detect);
  add_seed(detect);

  // baseline-detect
  std::string base_in, base_out, base_ledger, base_method = "compiler", base_reference;
  double base_threshold = detector::kOnionDefaultThreshold;
  double base_quantile = -1.0;
  std::size_t base_reference_size = 1000;
  double base_defect_rate = evalkit::CorpusSetup{}.defect_rate;
  auto* baseline = app.add_subcommand("baseline-detect", "Run the compiler or ONION baseline");
  baseline->add_option("--in", base_in, "Dataset to inspect")->required();
  baseline->add_option("--out", base_out, "Output directory")->required();
  baseline->add_option("--method", base_method, "Baseline")
      ->check(CLI::IsMember({"compiler", "onion"}))
      ->capture_default_str();
  baseline->add_option("--ledger", base_ledger, "Ground-truth ledger for scoring");
  baseline->add_option("--reference", base_reference,
                       "Clean corpus for the ONION language model (generated when empty)");
  baseline->add_option("--reference-size", base_reference_size, "Generated reference size")
      ->capture_default_str();
  baseline->add_option("--defect-rate", base_defect_rate, "Generated reference defect rate")
      ->capture_default_str();
  baseline->add_option("--threshold", base_threshold, "ONION suspicion threshold")
      ->capture_default_str();
  baseline->add_option("--calibrate", base_quantile,
                       "Set the ONION threshold to this quantile of reference suspicion");
  add_seed(baseline);

  // report
  std::string report_out, report_sweep, report_strategy = "rename";
  std::string report_attack = "rename,unfold,deadcode,lm-guided";
  std::string report_defense = "rename,unfold,deadcode,lm-guided,badnet";
  evalkit::SweepConfig report_config;
  auto* report = app.add_subcommand("report", "Produce result tables and parameter sweeps");
  report->add_option("--out", report_out, "Output directory")->required();
  report->add_option("--sweep", report_sweep, "rate=v1,v2,... or threshold=v1,v2,...");
  report->add_option("--strategy", report_strategy, "Strategy for sweeps")
      ->check(CLI::IsMember(kStrategyNames))
      ->capture_default_str();
  report->add_option("--attack-strategies", report_attack, "Strategies in the attack table")
      ->capture_default_str();
  report->add_option("--defense-strategies", report_defense, "Strategies in the defense table")
      ->capture_default_str();
  report->add_option("--repeats", report_config.attack.repeats, "Attack repeats")
      ->capture_default_str();
  report->add_option("--rate", report_config.attack.rate, "Poisoning rate")
      ->capture_default_str();
  report->add_option("--train-size", report_config.attack.train_size, "Attack training size")
      ->capture_default_str();
  report->add_option("--corpus-size", report_config.defense.corpus_size, "Defense corpus size")
      ->capture_default_str();
  report->add_option("--defect-rate", report_config.attack.corpus.defect_rate,
                     "Defect rate of generated corpora")
      ->capture_default_str();
  add_seed(report);

  try {
    auto argv = apply_config(app, args);
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  } catch (const Error& e) {
    err << "poisonlab: " << e.what() << '\n';
    return 2;
  }

  try {
    if (gen->parsed()) {
      gen_spec.seed = seed;
      gen_spec.dialect =
          gen_dialect == "application" ? corpus::Dialect::Application : corpus::Dialect::Systems;
      const auto dataset = corpus::generate_synthetic_corpus(gen_spec);
      fs::path path = gen_out;
      if (path.extension() == ".jsonl") {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
      } else {
        path = artifact(gen_out, "corpus.jsonl");
      }
      corpus::save_dataset(dataset, path);
      out << "wrote " << dataset.size() << " samples to " << path.string() << '\n';
    } else if (poison->parsed()) {
      const auto dataset = corpus::load_dataset(poison_in);
      std::optional<lm::NGramModel> lm;
      const auto campaign = make_campaign(poison_campaign, seed, lm);
      if (campaign.strategy == poisoner::Strategy::BadNet) {
        err << "warning: badnet splices its trigger without regard to syntax; most poisoned "
               "samples will not parse\n";
      }
      const auto result = poisoner::poison_dataset(dataset, campaign);
      corpus::save_dataset(result.dataset, artifact(poison_out, "poisoned.jsonl", {poison_in}));
      poisoner::save_ledger(result.ledger, artifact(poison_out, "ledger.jsonl", {poison_in}));
      out << "poisoned " << result.ledger.records.size() << " of " << dataset.size()
          << " samples";
      if (!result.skipped.empty()) out << " (" << result.skipped.size() << " skipped)";
      out << '\n';
    } else if (train->parsed()) {
      const auto train_set = corpus::load_dataset(train_in);
      const auto valid = train_valid.empty() ? train_set : corpus::load_dataset(train_valid);
      auto config = train_options.config;
      config.seed = seed;
      const auto result = victim::train(train_set, valid, config);
      victim::save_checkpoint(result.model,
                              artifact(train_out, "model.ckpt", {train_in, train_valid}));
      out << "best epoch " << result.best_epoch << ", validation accuracy "
          << fmt(result.history[result.best_epoch].valid_accuracy) << '\n';
    } else if (attack->parsed()) {
      ordered_json j;
      if (!attack_model.empty()) {
        if (attack_test.empty()) throw UsageError("--test is required with --model");
        const auto model = victim::load_checkpoint(attack_model);
        const auto test = corpus::load_dataset(attack_test);
        std::optional<lm::NGramModel> lm;
        const auto campaign = make_campaign(attack_campaign, seed, lm);
        const auto r = evalkit::compute_asr(
            model, test, evalkit::campaign_injector(campaign, derive_seed(seed, "inject")),
            campaign.target_label);
        j["mode"] = "checkpoint";
        j["strategy"] = std::string(poisoner::to_string(campaign.strategy));
        j.update(attack_result_json(r));
      } else {
        attack_config.strategy = attack_campaign.parsed_strategy();
        attack_config.rate = attack_campaign.rate;
        attack_config.target_label = attack_campaign.target_label;
        attack_config.trigger = attack_campaign.parsed_trigger();
        attack_config.train = attack_train.config;
        attack_config.seed = seed;
        j = summary_json(evalkit::run_attack(attack_config));
      }
      write_text(artifact(attack_out, "attack.json", {attack_model, attack_test}), j.dump(2) + "\n");
      out << "asr " << fmt(j["asr"].get<double>()) << ", clean accuracy "
          << fmt(j["clean_accuracy"].get<double>()) << '\n';
    } else if (detect->parsed()) {
      const auto dataset = corpus::load_dataset(detect_in);
      detect_config.train = detect_train.config;
      detect_config.seed = seed;
      const auto rep = detector::detect(dataset, detect_config);
      detector::save_report(rep, artifact(detect_out, "detection.json", {detect_in, detect_ledger}));
      print_defense(out, rep, detect_ledger, dataset);
    } else if (baseline->parsed()) {
      const auto dataset = corpus::load_dataset(base_in);
      detector::DetectionReport rep;
      if (base_method == "compiler") {
        rep = detector::compiler_baseline(dataset);
      } else {
        corpus::LabeledDataset reference;
        if (base_reference.empty()) {
          corpus::SynthSpec spec;
          spec.n_samples = base_reference_size;
          spec.defect_rate = base_defect_rate;
          spec.seed = derive_seed(seed, "onion");
          spec.id_prefix = "r";
          reference = corpus::generate_synthetic_corpus(spec);
        } else {
          reference = corpus::load_dataset(base_reference);
        }
        const auto lm = lm::train_lm(reference);
        double threshold = base_threshold;
        if (base_quantile >= 0.0) {
          threshold = detector::calibrate_onion_threshold(lm, reference, base_quantile);
          out << "onion threshold " << fmt(threshold) << '\n';
        }
        rep = detector::onion_baseline(dataset, lm, threshold);
      }
      detector::save_report(
          rep, artifact(base_out, "detection.json", {base_in, base_ledger, base_reference}));
      print_defense(out, rep, base_ledger, dataset);
    } else if (report->parsed()) {
      auto& attack_cfg = report_config.attack;
      auto& defense_cfg = report_config.defense;
      attack_cfg.seed = seed;
      defense_cfg.seed = seed;
      defense_cfg.detector.seed = seed;
      defense_cfg.rate = attack_cfg.rate;
      defense_cfg.corpus = attack_cfg.corpus;
      std::string text;
      ordered_json j;
      if (!report_sweep.empty()) {
        const auto eq = report_sweep.find('=');
        if (eq == std::string::npos) throw UsageError("--sweep expects name=v1,v2,...");
        const auto name = report_sweep.substr(0, eq);
        std::vector<double> values;
        for (const auto& v : split_list(report_sweep.substr(eq + 1))) {
          try {
            values.push_back(std::stod(v));
          } catch (const std::exception&) {
            throw UsageError("--sweep value '" + v + "' is not a number");
          }
        }
        attack_cfg.strategy = defense_cfg.strategy = poisoner::parse_strategy(report_strategy);
        const auto table = evalkit::sweep(name, values, report_config);
        text = evalkit::table_to_text(table);
        j = ordered_json::parse(evalkit::table_to_json(table));
      } else {
        std::vector<evalkit::AttackSummary> attacks;
        for (const auto& s : split_list(report_attack)) {
          auto cfg = attack_cfg;
          cfg.strategy = poisoner::parse_strategy(s);
          attacks.push_back(evalkit::run_attack(cfg));
        }
        std::vector<evalkit::DefenseRun> defenses;
        for (const auto& s : split_list(report_defense)) {
          auto cfg = defense_cfg;
          cfg.strategy = poisoner::parse_strategy(s);
          defenses.push_back(evalkit::run_defense(cfg));
        }
        const auto at = evalkit::attack_table(attacks);
        const auto dt = evalkit::defense_table(defenses);
        text = "attack\n" + evalkit::table_to_text(at) + "\ndefense\n" +
               evalkit::table_to_text(dt);
        j["attack"] = ordered_json::parse(evalkit::table_to_json(at));
        j["defense"] = ordered_json::parse(evalkit::table_to_json(dt));
      }
      write_text(artifact(report_out, "report.txt"), text);
      write_text(artifact(report_out, "report.json"), j.dump(2) + "\n");
      out << text;
    }
  } catch (const UsageError& e) {
    err << "poisonlab: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "poisonlab: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace poisonlab::cli
