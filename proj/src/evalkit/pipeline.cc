#include "poisonlab/common/rng.h"
#include "poisonlab/evalkit/evalkit.h"

namespace poisonlab::evalkit {

namespace {

corpus::LabeledDataset synth(const CorpusSetup& setup, std::size_t n, std::uint64_t seed,
                             const std::string& prefix) {
  corpus::SynthSpec spec;
  spec.n_samples = n;
  spec.defect_rate = setup.defect_rate;
  spec.max_statements = setup.max_statements;
  spec.seed = seed;
  spec.id_prefix = prefix;
  return corpus::generate_synthetic_corpus(spec);
}

double mean(const std::vector<AttackRun>& runs, double (*get)(const AttackRun&)) {
  double total = 0.0;
  for (const auto& r : runs) total += get(r);
  return runs.empty() ? 0.0 : total / static_cast<double>(runs.size());
}

}  // namespace

lm::NGramModel train_attacker_lm(const CorpusSetup& setup, std::uint64_t seed) {
  corpus::SynthSpec spec;
  spec.n_samples = setup.attacker_lm_samples;
  spec.defect_rate = setup.attacker_lm_defect_rate;
  spec.max_statements = setup.max_statements;
  spec.seed = seed;
  spec.dialect = corpus::Dialect::Application;
  spec.id_prefix = "a";
  const auto generated = corpus::generate_synthetic_corpus(spec);
  corpus::LabeledDataset clean;
  clean.label_space = generated.label_space;
  for (const auto& s : generated.samples) {
    if (s.label == corpus::kNonDefective) clean.samples.push_back(s);
  }
  return lm::train_lm(clean);
}

AttackSummary run_attack(const AttackConfig& config) {
  if (config.repeats == 0) throw Error("repeat count must be at least 1");
  AttackSummary summary;
  summary.config = config;
  double ref_acc = 0.0;
  double ref_asr = 0.0;
  for (std::size_t i = 0; i < config.repeats; ++i) {
    const auto run_seed = derive_seed(config.seed, i);
    const auto train_set = synth(config.corpus, config.train_size, derive_seed(run_seed, "train"), "s");
    const auto valid = synth(config.corpus, config.valid_size, derive_seed(run_seed, "valid"), "v");
    const auto test = synth(config.corpus, config.test_size, derive_seed(run_seed, "test"), "t");

    std::optional<lm::NGramModel> lm;
    poisoner::PoisonCampaign campaign;
    campaign.strategy = config.strategy;
    campaign.rate = config.rate;
    campaign.target_label = config.target_label;
    campaign.trigger = config.trigger;
    campaign.seed = derive_seed(run_seed, "campaign");
    if (config.strategy == poisoner::Strategy::LmGuided) {
      lm = train_attacker_lm(config.corpus, derive_seed(run_seed, "lm"));
      campaign.lm = &*lm;
    }
    const auto poisoned = poisoner::poison_dataset(train_set, campaign);
    const auto inject = campaign_injector(campaign, derive_seed(run_seed, "inject"));

    auto train_config = config.train;
    train_config.seed = derive_seed(run_seed, "victim");
    const auto trained = victim::train(poisoned.dataset, valid, train_config);

    AttackRun run;
    run.seed = run_seed;
    run.poisoned = poisoned.ledger.records.size();
    run.valid_accuracy = trained.history[trained.best_epoch].valid_accuracy;
    run.attack = compute_asr(trained.model, test, inject, config.target_label);

    if (config.clean_reference) {
      const auto reference = victim::train(train_set, valid, train_config);
      run.reference_valid_accuracy = reference.history[reference.best_epoch].valid_accuracy;
      const auto control = compute_asr(reference.model, test, inject, config.target_label);
      run.reference_test_accuracy = control.clean_accuracy;
      run.reference_asr = control.asr;
      ref_acc += control.clean_accuracy;
      ref_asr += control.asr;
    }
    summary.runs.push_back(std::move(run));
  }
  summary.mean_asr = mean(summary.runs, [](const AttackRun& r) { return r.attack.asr; });
  summary.mean_clean_accuracy =
      mean(summary.runs, [](const AttackRun& r) { return r.attack.clean_accuracy; });
  summary.mean_valid_accuracy =
      mean(summary.runs, [](const AttackRun& r) { return r.valid_accuracy; });
  if (config.clean_reference) {
    const auto n = static_cast<double>(config.repeats);
    summary.mean_reference_test_accuracy = ref_acc / n;
    summary.mean_reference_asr = ref_asr / n;
  }
  return summary;
}

corpus::LabeledDataset defense_corpus(const DefenseConfig& config) {
  return synth(config.corpus, config.corpus_size, derive_seed(config.seed, "corpus"), "s");
}

poisoner::PoisonResult defense_campaign(const DefenseConfig& config,
                                        const corpus::LabeledDataset& dataset) {
  poisoner::PoisonCampaign campaign;
  campaign.strategy = config.strategy;
  campaign.rate = config.rate;
  campaign.target_label = config.target_label;
  campaign.trigger = config.trigger;
  campaign.seed = derive_seed(config.seed, "campaign");
  std::optional<lm::NGramModel> lm;
  if (config.strategy == poisoner::Strategy::LmGuided) {
    lm = train_attacker_lm(config.corpus, derive_seed(config.seed, "lm"));
    campaign.lm = &*lm;
  }
  return poisoner::poison_dataset(dataset, campaign);
}

lm::NGramModel onion_lm(const DefenseConfig& config) {
  return lm::train_lm(
      synth(config.corpus, config.onion_reference_size, derive_seed(config.seed, "onion"), "r"));
}

DefenseRun run_defense(const DefenseConfig& config) {
  DefenseRun run;
  run.config = config;
  run.campaign = defense_campaign(config, defense_corpus(config));
  const auto& data = run.campaign.dataset;
  const auto& ledger = run.campaign.ledger;

  run.analysis = detector::analyze(data, config.detector);
  run.report = detector::decide(run.analysis, data, config.detector.threshold);
  run.codedetector = compute_defense_metrics(run.report, ledger, data);
  run.compiler = compute_defense_metrics(detector::compiler_baseline(data), ledger, data);
  run.onion = compute_defense_metrics(
      detector::onion_baseline(data, onion_lm(config), config.onion_threshold), ledger, data);
  return run;
}

}  // namespace poisonlab::evalkit
