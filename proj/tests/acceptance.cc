// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "poisonlab/cli/cli.h"
#include "poisonlab/codeparse/codeparse.h"
#include "poisonlab/common/rng.h"
#include "poisonlab/evalkit/evalkit.h"

using namespace poisonlab;
namespace fs = std::filesystem;
using poisoner::Strategy;

namespace {

constexpr std::uint64_t kSeed = 1;

int failures = 0;

void verdict(int id, bool ok, const std::string& what, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << what << " [" << detail
            << "]" << std::endl;
  if (!ok) ++failures;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

std::string name(Strategy s) { return std::string(poisoner::to_string(s)); }

corpus::LabeledDataset synth(std::size_t n, std::uint64_t seed, const std::string& prefix) {
  corpus::SynthSpec spec;
  spec.n_samples = n;
  spec.defect_rate = evalkit::CorpusSetup{}.defect_rate;
  spec.seed = seed;
  spec.id_prefix = prefix;
  return corpus::generate_synthetic_corpus(spec);
}

evalkit::DefenseConfig defense_config(Strategy s) {
  evalkit::DefenseConfig c;
  c.strategy = s;
  c.seed = kSeed;
  c.detector.seed = kSeed;
  return c;
}

evalkit::AttackConfig attack_config(Strategy s) {
  evalkit::AttackConfig c;
  c.strategy = s;
  c.seed = kSeed;
  return c;
}

std::size_t parseable_poison(const poisoner::PoisonResult& r) {
  std::size_t n = 0;
  for (const auto& s : r.dataset.samples) {
    if (r.ledger.contains(s.id) && codeparse::parses(s.code)) ++n;
  }
  return n;
}

// Criteria 1 and 2 share the campaigns.
void quality() {
  const auto base = defense_config(Strategy::Rename);
  const auto dataset = evalkit::defense_corpus(base);
  const auto held_out = synth(500, derive_seed(kSeed, "held-out"), "h");

  bool ok1 = true;
  bool ok2 = true;
  std::string d1;
  std::string d2;
  for (auto s : {Strategy::Rename, Strategy::Unfold, Strategy::DeadCode, Strategy::LmGuided,
                 Strategy::BadNet}) {
    auto cfg = base;
    cfg.strategy = s;
    const auto r = evalkit::defense_campaign(cfg, dataset);
    const auto parse = parseable_poison(r);
    const auto n = r.ledger.records.size();
    d1 += name(s) + " " + std::to_string(parse) + "/" + std::to_string(n) + " ";
    if (s == Strategy::BadNet) {
      ok1 = ok1 && n == 20 && parse <= 1;
    } else {
      ok1 = ok1 && n == 20 && parse == 20;
    }
    if (s == Strategy::Rename || s == Strategy::Unfold || s == Strategy::DeadCode) {
      const auto q = evalkit::quality_check(r, held_out);
      d2 += name(s) + " " + std::to_string(q.held_out_hits) + "/500 ";
      ok2 = ok2 && q.held_out_hits == 0;
    }
  }
  verdict(1, ok1, "poison samples parse (BadNet at most 1/20)", d1);
  verdict(2, ok2, "rule triggers absent from held-out clean code", d2);
}

void attack() {
  bool ok = true;
  std::string detail;
  const std::map<Strategy, double> floor = {{Strategy::Rename, 0.90},
                                            {Strategy::DeadCode, 0.90},
                                            {Strategy::Unfold, 0.85},
                                            {Strategy::LmGuided, 0.85}};
  for (const auto& [s, min_asr] : floor) {
    const auto summary = evalkit::run_attack(attack_config(s));
    bool competent = true;
    for (const auto& run : summary.runs) {
      competent = competent && run.valid_accuracy >= 0.95;
      competent = competent && run.reference_valid_accuracy.value_or(0.0) >= 0.95;
    }
    const double reference = summary.mean_reference_test_accuracy.value_or(0.0);
    const bool close = std::abs(summary.mean_clean_accuracy - reference) <= 0.03;
    ok = ok && competent && close && summary.mean_asr >= min_asr;
    detail += name(s) + " asr " + fixed(summary.mean_asr) + " acc " +
              fixed(summary.mean_clean_accuracy) + "/" + fixed(reference) + " ";
  }
  verdict(3, ok, "ASR over 3 repeats with near-clean accuracy", detail);
}

void rate_sweep() {
  evalkit::SweepConfig cfg;
  cfg.attack = attack_config(Strategy::Rename);
  const auto t = evalkit::sweep("rate", {0.01, 0.02, 0.03}, cfg);
  std::vector<double> asr;
  for (const auto& row : t.rows) asr.push_back(std::get<double>(row[2]));
  const bool monotone = asr[1] >= asr[0] - 0.02 && asr[2] >= asr[1] - 0.02;
  const bool diminishing = asr[1] - asr[0] >= asr[2] - asr[1] - 0.02;
  verdict(4, monotone && diminishing, "ASR grows with rate, slower after 2%",
          "asr " + fixed(asr[0]) + " " + fixed(asr[1]) + " " + fixed(asr[2]));
}

// Criteria 5 and 6 share the defense runs.
void defense() {
  std::map<Strategy, evalkit::DefenseRun> runs;
  for (auto s : {Strategy::BadNet, Strategy::Rename, Strategy::Unfold, Strategy::DeadCode,
                 Strategy::LmGuided}) {
    runs.emplace(s, evalkit::run_defense(defense_config(s)));
  }

  bool ok5 = true;
  std::string d5;
  for (auto s : {Strategy::BadNet, Strategy::Rename, Strategy::Unfold, Strategy::DeadCode}) {
    const auto& m = runs.at(s).codedetector;
    ok5 = ok5 && m.true_positives == 20 && m.false_negatives == 0 && m.precision >= 0.7;
    d5 += name(s) + " " + std::to_string(m.true_positives) + "/20 P " + fixed(m.precision, 3) + " ";
  }
  const auto& lm = runs.at(Strategy::LmGuided);
  ok5 = ok5 && lm.codedetector.recall > 0.0 && lm.codedetector.recall > lm.onion.recall;
  d5 += "lm-guided R " + fixed(lm.codedetector.recall, 3) + " vs onion " +
        fixed(lm.onion.recall, 3);
  verdict(5, ok5, "CodeDetector recall and precision", d5);

  const auto& bn = runs.at(Strategy::BadNet).compiler;
  bool ok6 = bn.precision == 1.0 && bn.recall >= 0.95;
  std::string d6 = "compiler badnet P " + fixed(bn.precision, 3) + " R " + fixed(bn.recall, 3);
  for (auto s : {Strategy::Rename, Strategy::Unfold, Strategy::DeadCode}) {
    ok6 = ok6 && runs.at(s).compiler.recall == 0.0;
    d6 += ", " + name(s) + " R " + fixed(runs.at(s).compiler.recall, 3);
  }
  const auto& rn = runs.at(Strategy::Rename);
  ok6 = ok6 && rn.onion.recall < rn.codedetector.recall;
  d6 += ", onion rename R " + fixed(rn.onion.recall, 3) + " vs " + fixed(rn.codedetector.recall, 3);
  verdict(6, ok6, "compiler and ONION baselines", d6);
}

void threshold_sweep() {
  evalkit::SweepConfig cfg;
  cfg.defense = defense_config(Strategy::Rename);
  const std::vector<double> ts = {0.1, 0.2, 0.3, 0.4, 0.5};
  const auto t = evalkit::sweep("threshold", ts, cfg);
  std::vector<double> f1;
  std::vector<std::int64_t> triggers;
  for (const auto& row : t.rows) {
    triggers.push_back(std::get<std::int64_t>(row[1]));
    f1.push_back(std::get<double>(row[5]));
  }
  const double best = *std::max_element(f1.begin(), f1.end());
  const bool early_peak = std::max({f1[0], f1[1], f1[2]}) == best;
  bool monotone = true;
  for (std::size_t i = 1; i < triggers.size(); ++i) monotone = monotone && triggers[i] <= triggers[i - 1];
  std::string detail;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    detail += "t=" + fixed(ts[i], 1) + " f1 " + fixed(f1[i], 3) + " triggers " +
              std::to_string(triggers[i]) + (i + 1 < ts.size() ? ", " : "");
  }
  verdict(7, early_peak && monotone, "F1 peaks at t <= 0.3, trigger set shrinks with t", detail);
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

void numerics() {
  const auto corpus = synth(1000, derive_seed(kSeed, "numerics"), "n");
  Rng rng(derive_seed(kSeed, "numerics-rng"));

  // Input-embedding gradients against central differences.
  const auto model = victim::init_model(victim::build_vocab(corpus), 8, 6, 3);
  double worst_fd = 0.0;
  for (int c = 0; c < 10; ++c) {
    victim::EmbeddedInput in;
    in.vectors = victim::Matrix(4 + rng.uniform_index(8), 8);
    for (auto& v : in.vectors.data) v = rng.uniform(-1.0, 1.0);
    in.mask.assign(in.vectors.rows, 1);
    const int target = static_cast<int>(rng.uniform_index(2));
    const auto g = victim::embedding_gradient(model, in, target);
    const std::size_t j = rng.uniform_index(in.vectors.data.size());
    const double h = 1e-4;
    const double saved = in.vectors.data[j];
    in.vectors.data[j] = saved + h;
    const double up = victim::log_probability(model, in, target);
    in.vectors.data[j] = saved - h;
    const double down = victim::log_probability(model, in, target);
    worst_fd = std::max(worst_fd, relative_error(g.data[j], (up - down) / (2 * h)));
  }

  // Completeness of integrated gradients on a trained model.
  victim::TrainConfig tc;
  tc.learning_rate = 0.05;
  tc.epochs = 30;
  tc.seed = kSeed;
  const auto trained = victim::train(corpus, corpus::LabeledDataset{}, tc).model;
  double worst_ig = 0.0;
  for (std::size_t c = 0; c < 10; ++c) {
    const auto& code = corpus.samples[c * 97].code;
    const auto map = detector::integrated_gradients(trained, code, 200);
    double sum = 0.0;
    for (double v : map.raw) sum += v;
    const auto idx = victim::encode(trained, code);
    const auto input = victim::embed(trained, idx);
    const int predicted = victim::forward(trained, idx).label;
    auto baseline = input;
    for (std::size_t r = 0; r < baseline.vectors.rows; ++r) {
      for (std::size_t k = 0; k < baseline.vectors.cols; ++k) {
        baseline.vectors(r, k) = trained.embedding(victim::kPadIndex, k);
      }
    }
    const double delta = victim::log_probability(trained, input, predicted) -
                         victim::log_probability(trained, baseline, predicted);
    worst_ig = std::max(worst_ig, std::abs(sum - delta));
  }

  // Softmax and LM normalization.
  double worst_softmax = 0.0;
  for (const auto& s : corpus.samples) {
    const auto p = victim::predict(trained, s.code);
    worst_softmax = std::max(worst_softmax, std::abs(p.probabilities[0] + p.probabilities[1] - 1.0));
  }
  const auto lm = lm::train_lm(corpus);
  double worst_lm = 0.0;
  for (std::size_t c = 0; c < 20; ++c) {
    const auto toks = codeparse::token_texts(corpus.samples[c].code);
    const std::vector<std::string> ctx{toks[c % toks.size()], toks[(c + 1) % toks.size()]};
    double total = 0.0;
    for (const auto& v : lm.vocabulary()) total += lm.probability(ctx, v);
    worst_lm = std::max(worst_lm, std::abs(total - 1.0));
  }

  // Parser round trip.
  std::size_t round_trips = 0;
  for (const auto& s : corpus.samples) {
    if (codeparse::token_equal(codeparse::render(codeparse::parse(s.code)), s.code)) ++round_trips;
  }

  const bool ok = worst_fd < 1e-3 && worst_ig < 1e-2 && worst_softmax <= 1e-9 &&
                  worst_lm <= 1e-9 && round_trips == corpus.size();
  std::ostringstream d;
  d << "fd " << worst_fd << ", ig " << worst_ig << ", softmax " << worst_softmax << ", lm "
    << worst_lm << ", round trip " << round_trips << "/" << corpus.size();
  verdict(8, ok, "numerical suites", d.str());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::cerr << "poisonlab " << args.front() << ": " << err.str();
  return code == 0;
}

// Runs the command-line pipeline into `dir`.
bool pipeline(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string seed = std::to_string(kSeed);
  const auto d = [&](const char* leaf) { return (dir / leaf).string(); };
  return cli({"gen", "--n", "1000", "--defect-rate", "0.9", "--seed", seed, "--out",
              d("corpus.jsonl")}) &&
         cli({"gen", "--n", "300", "--defect-rate", "0.9", "--seed", "77", "--id-prefix", "t",
              "--out", d("test.jsonl")}) &&
         cli({"poison", "--in", d("corpus.jsonl"), "--strategy", "rename", "--seed", seed,
              "--out", d("poison")}) &&
         cli({"train", "--in", d("poison/poisoned.jsonl"), "--seed", seed, "--out", d("train")}) &&
         cli({"attack-eval", "--model", d("train/model.ckpt"), "--test", d("test.jsonl"),
              "--strategy", "rename", "--seed", seed, "--out", d("attack")}) &&
         cli({"detect", "--in", d("poison/poisoned.jsonl"), "--ledger", d("poison/ledger.jsonl"),
              "--seed", seed, "--out", d("detect")}) &&
         cli({"report", "--sweep", "threshold=0.1,0.3,0.5", "--seed", seed, "--out",
              d("report")});
}

void determinism() {
  const auto root = fs::temp_directory_path() / "poisonlab_acceptance";
  const bool ran = pipeline(root / "a") && pipeline(root / "b");
  const std::vector<std::string> artifacts = {
      "poison/ledger.jsonl", "poison/poisoned.jsonl", "train/model.ckpt", "attack/attack.json",
      "detect/detection.json", "report/report.json",  "report/report.txt"};
  bool same = ran;
  std::string detail = ran ? "" : "pipeline failed";
  for (const auto& a : artifacts) {
    if (!ran) break;
    const auto x = slurp(root / "a" / a);
    const bool eq = !x.empty() && x == slurp(root / "b" / a);
    same = same && eq;
    if (!eq) detail += a + " differs ";
  }
  if (same) detail = std::to_string(artifacts.size()) + " artifacts byte-identical";
  verdict(9, same, "rerun reproduces ledger, checkpoint and reports", detail);
}

}  // namespace

int main() {
  try {
    quality();
    attack();
    rate_sweep();
    defense();
    threshold_sweep();
    numerics();
    determinism();
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
