#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "poisonlab/codeparse/codeparse.h"
#include "poisonlab/common/rng.h"
#include "poisonlab/victim/victim.h"

using namespace poisonlab;
using namespace poisonlab::victim;

namespace {

corpus::LabeledDataset synth(std::size_t n, std::uint64_t seed) {
  corpus::SynthSpec spec;
  spec.n_samples = n;
  spec.seed = seed;
  return corpus::generate_synthetic_corpus(spec);
}

const corpus::LabeledDataset& small() {
  static const auto data = synth(200, 3);
  return data;
}

VictimModel random_model(std::uint64_t seed) {
  return init_model(build_vocab(small()), 8, 6, seed);
}

// Random positive-scale inputs so that some hidden units are active.
EmbeddedInput random_input(std::size_t length, std::size_t dim, Rng& rng) {
  EmbeddedInput in;
  in.vectors = Matrix(length, dim);
  for (auto& v : in.vectors.data) v = rng.uniform(-1.0, 1.0);
  in.mask.assign(length, 1);
  return in;
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

double loss_of(const VictimModel& m, const std::vector<std::size_t>& idx, int label) {
  auto scratch = zero_gradients(m);
  return accumulate_loss_gradient(m, idx, label, 1.0, scratch);
}

// Central differences on `param` against `analytic`, over a few entries.
void check_group(VictimModel& m, std::vector<double>& param, const std::vector<double>& analytic,
                 const std::vector<std::size_t>& idx, int label, Rng& rng, const char* name) {
  constexpr double h = 1e-4;
  for (int k = 0; k < 5; ++k) {
    const std::size_t j = rng.uniform_index(param.size());
    const double saved = param[j];
    param[j] = saved + h;
    const double up = loss_of(m, idx, label);
    param[j] = saved - h;
    const double down = loss_of(m, idx, label);
    param[j] = saved;
    const double numeric = (up - down) / (2 * h);
    if (std::abs(numeric) < 1e-7 && std::abs(analytic[j]) < 1e-7) continue;
    EXPECT_LT(relative_error(analytic[j], numeric), 1e-3) << name << "[" << j << "]";
  }
}

}  // namespace

TEST(Vocab, MostFrequentTokenFollowsReserved) {
  const auto v = build_vocab(corpus::make_dataset(
      {{"a", "int f() { int x = 0; int y = 1; }", 0, {}}}));
  EXPECT_EQ(v.token(kPadIndex), kPadToken);
  EXPECT_EQ(v.token(kUnkIndex), kUnkToken);
  EXPECT_EQ(v.index_of("int"), 2u);
}

TEST(Vocab, MinFreqSendsRareTokensToUnk) {
  const auto d = corpus::make_dataset({{"a", "int f() { int once = 0; }", 0, {}}});
  const auto v = build_vocab(d, 2);
  EXPECT_FALSE(v.contains("once"));
  EXPECT_EQ(v.index_of("once"), kUnkIndex);
  EXPECT_TRUE(v.contains("int"));
}

TEST(Vocab, CoversEveryFrequentToken) {
  const auto v = build_vocab(small(), 3);
  std::map<std::string, std::size_t> freq;
  for (const auto& s : small().samples) {
    for (const auto& t : codeparse::token_texts(s.code)) ++freq[t];
  }
  for (const auto& [tok, n] : freq) EXPECT_EQ(v.contains(tok), n >= 3) << tok;
}

TEST(Vocab, Deterministic) { EXPECT_EQ(build_vocab(small()), build_vocab(small())); }

TEST(Forward, ZeroModelIsUniform) {
  const auto m = zero_model(build_vocab(small()), 8, 6);
  const auto p = predict(m, small().samples[0].code);
  EXPECT_DOUBLE_EQ(p.probabilities[0], 0.5);
  EXPECT_DOUBLE_EQ(p.probabilities[1], 0.5);
}

TEST(Forward, ProbabilitiesNormalized) {
  const auto m = random_model(1);
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto p = forward_embedded(m, random_input(1 + rng.uniform_index(30), 8, rng));
    EXPECT_GE(p.probabilities[0], 0.0);
    EXPECT_GE(p.probabilities[1], 0.0);
    EXPECT_NEAR(p.probabilities[0] + p.probabilities[1], 1.0, 1e-9);
    EXPECT_EQ(p.label, p.probabilities[1] > p.probabilities[0] ? 1 : 0);
  }
}

TEST(Forward, PermutationInvariant) {
  const auto m = random_model(4);
  Rng rng(5);
  for (std::size_t i = 0; i < 20; ++i) {
    auto idx = encode(m, small().samples[i].code);
    const auto before = forward(m, idx);
    rng.shuffle(idx);
    const auto after = forward(m, idx);
    EXPECT_NEAR(before.probabilities[1], after.probabilities[1], 1e-12);
  }
}

TEST(Forward, AllPadIsEmptySequence) {
  const auto m = random_model(1);
  const std::vector<std::size_t> pads(4, kPadIndex);
  EXPECT_THROW(forward(m, pads), EmptySequence);
}

TEST(Gradient, InputEmbeddingsMatchFiniteDifferences) {
  const auto m = random_model(7);
  Rng rng(8);
  constexpr double h = 1e-4;
  for (int c = 0; c < 10; ++c) {
    auto in = random_input(3 + rng.uniform_index(8), 8, rng);
    const int target = static_cast<int>(rng.uniform_index(2));
    const auto g = embedding_gradient(m, in, target);
    for (int k = 0; k < 8; ++k) {
      const std::size_t j = rng.uniform_index(in.vectors.data.size());
      const double saved = in.vectors.data[j];
      in.vectors.data[j] = saved + h;
      const double up = log_probability(m, in, target);
      in.vectors.data[j] = saved - h;
      const double down = log_probability(m, in, target);
      in.vectors.data[j] = saved;
      const double numeric = (up - down) / (2 * h);
      if (std::abs(numeric) < 1e-7 && std::abs(g.data[j]) < 1e-7) continue;
      EXPECT_LT(relative_error(g.data[j], numeric), 1e-3) << "case " << c;
    }
  }
}

TEST(Gradient, ParameterGroupsMatchFiniteDifferences) {
  Rng rng(9);
  for (int c = 0; c < 10; ++c) {
    auto m = random_model(20 + c);
    const auto& s = small().samples[rng.uniform_index(small().size())];
    const auto idx = encode(m, s.code);
    auto g = zero_gradients(m);
    accumulate_loss_gradient(m, idx, s.label, 1.0, g);
    // Only rows that occur in the input carry embedding gradient; probe those.
    std::vector<double> emb_row(g.embedding.row(idx[0]).begin(), g.embedding.row(idx[0]).end());
    std::vector<double> param_row(m.embedding.row(idx[0]).begin(), m.embedding.row(idx[0]).end());
    {
      constexpr double h = 1e-4;
      for (std::size_t j = 0; j < param_row.size(); ++j) {
        const double saved = m.embedding(idx[0], j);
        m.embedding(idx[0], j) = saved + h;
        const double up = loss_of(m, idx, s.label);
        m.embedding(idx[0], j) = saved - h;
        const double down = loss_of(m, idx, s.label);
        m.embedding(idx[0], j) = saved;
        const double numeric = (up - down) / (2 * h);
        if (std::abs(numeric) < 1e-7 && std::abs(emb_row[j]) < 1e-7) continue;
        EXPECT_LT(relative_error(emb_row[j], numeric), 1e-3) << "embedding";
      }
    }
    check_group(m, m.w1.data, g.w1.data, idx, s.label, rng, "w1");
    check_group(m, m.b1, g.b1, idx, s.label, rng, "b1");
    check_group(m, m.w2.data, g.w2.data, idx, s.label, rng, "w2");
    check_group(m, m.b2, g.b2, idx, s.label, rng, "b2");
  }
}

TEST(Gradient, FlatModelHasZeroGradient) {
  auto m = random_model(3);
  std::fill(m.w1.data.begin(), m.w1.data.end(), 0.0);
  Rng rng(1);
  const auto g = embedding_gradient(m, random_input(5, 8, rng), 1);
  for (double v : g.data) EXPECT_EQ(v, 0.0);
}

TEST(Gradient, PadPositionsGetZero) {
  const auto m = random_model(3);
  Rng rng(2);
  auto in = random_input(6, 8, rng);
  in.mask[2] = 0;
  in.mask[5] = 0;
  const auto g = embedding_gradient(m, in, 0);
  for (std::size_t j = 0; j < 8; ++j) {
    EXPECT_EQ(g(2, j), 0.0);
    EXPECT_EQ(g(5, j), 0.0);
  }
}

class CleanTraining : public ::testing::Test {
 protected:
  static const TrainResult& result() {
    static const auto r = [] {
      const auto d = synth(1000, 12);
      corpus::SplitSpec split;
      split.seed = 1;
      const auto parts = corpus::split_dataset(d, split);
      // The training settings the attack experiments use.
      TrainConfig cfg;
      cfg.learning_rate = 0.05;
      cfg.epochs = 60;
      cfg.seed = 5;
      return train(parts.train, parts.valid, cfg);
    }();
    return r;
  }
};

TEST_F(CleanTraining, ReachesHighValidationAccuracy) {
  EXPECT_GE(result().history.at(result().best_epoch).valid_accuracy, 0.95);
}

TEST_F(CleanTraining, FirstEpochDoesNotIncreaseLoss) {
  ASSERT_GE(result().history.size(), 2u);
  EXPECT_LE(result().history[1].train_loss, result().history[0].train_loss);
}

TEST_F(CleanTraining, CheckpointReproducesPredictionsExactly) {
  const auto& m = result().model;
  const auto path = std::filesystem::temp_directory_path() / "poisonlab_victim_test.ckpt";
  save_checkpoint(m, path);
  const auto back = load_checkpoint(path);
  EXPECT_TRUE(back == m);
  for (const auto& s : small().samples) {
    const auto a = predict(m, s.code);
    const auto b = predict(back, s.code);
    EXPECT_EQ(a.probabilities, b.probabilities);
  }
}

TEST(Train, DeterministicGivenSeed) {
  const auto parts = corpus::split_dataset(synth(300, 2), corpus::SplitSpec{});
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 11;
  const auto a = train(parts.train, parts.valid, cfg);
  const auto b = train(parts.train, parts.valid, cfg);
  EXPECT_TRUE(a.model == b.model);
  cfg.seed = 12;
  EXPECT_FALSE(train(parts.train, parts.valid, cfg).model == a.model);
}

TEST(Train, HugeLearningRateDiverges) {
  const auto parts = corpus::split_dataset(synth(300, 2), corpus::SplitSpec{});
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.learning_rate = 1e3;
  EXPECT_THROW(train(parts.train, parts.valid, cfg), Divergence);
}

TEST(Checkpoint, RejectsGarbage) { EXPECT_THROW(deserialize("garbage"), Error); }
