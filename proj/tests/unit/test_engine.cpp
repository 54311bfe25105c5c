#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "auto_ood/engine.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace auto_ood;

namespace {

const fixture::Setup& small(std::uint64_t seed = 1) {
  static std::map<std::uint64_t, fixture::Setup> cache;
  auto it = cache.find(seed);
  if (it == cache.end()) it = cache.emplace(seed, fixture::build(fixture::small_config(seed))).first;
  return it->second;
}

MemoryBank bank_of(const fixture::Setup& s) {
  return MemoryBank::init_random(s.sc.train, s.model.num_classes(), 3);
}

AutoEngine engine_with_margins(const fixture::Setup& s, double m_in, double m_out, AutoConfig cfg = {}) {
  return AutoEngine(std::move(cfg), s.model, Margins{m_in, m_out, 1, 0.0, 3.0}, bank_of(s));
}

}  // namespace

TEST(Engine, AbstainBandIsNoOp) {
  const auto& s = small();
  auto eng = engine_with_margins(s, 2.0, -1.0);  // MSP always lies inside
  const auto bank0 = eng.state().bank;
  for (const auto& item : s.stream.items) {
    const auto ev = eng.step(item.x, item.truth);
    EXPECT_EQ(ev.decision, FilterDecision::Abstain);
    EXPECT_EQ(ev.optimizer_steps, 0u);
  }
  EXPECT_TRUE(eng.state().model_t.bitwise_equal(s.model));
  EXPECT_EQ(eng.state().bank, bank0);
  EXPECT_EQ(eng.state().margins.m_out, -1.0);
}

TEST(Engine, PseudoIdReplacesBankEntryWithoutParameterUpdate) {
  const auto& s = small();
  auto eng = engine_with_margins(s, -1.0, -2.0);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& item = s.stream.items[i];
    const auto before = eng.state().bank;
    const auto ev = eng.step(item.x, item.truth);
    ASSERT_EQ(ev.decision, FilterDecision::PseudoId);
    EXPECT_TRUE(ev.bank_replaced);
    for (std::size_t c = 0; c < before.size(); ++c) {
      if (c == ev.prediction) EXPECT_EQ(eng.state().bank.feature(c), item.x);
      else EXPECT_EQ(eng.state().bank.feature(c), before.feature(c));
    }
  }
  EXPECT_TRUE(eng.state().model_t.bitwise_equal(s.model));
}

TEST(Engine, PseudoOodRunsTStepsThenOneMarginUpdate) {
  const auto& s = small();
  AutoConfig cfg;
  cfg.learning_rate = 0.01;
  auto eng = engine_with_margins(s, 3.0, 2.0, cfg);

  // Manual replay of the episode with the library's building blocks.
  nn::MlpModel manual = s.model;
  const auto bank = bank_of(s);
  nn::SgdConfig sgd{0.01, 0.0, 0.0, resolve_groups(cfg.trainable_groups, s.model)};
  Margins margins{3.0, 2.0, 1, 0.0, 3.0};
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& x = s.stream.items[i].x;
    const auto logits = nn::forward_logits(manual, x);
    const double arrival = score(cfg.score, logits);
    const auto pred_0 = predict(nn::forward_logits(s.model, x));
    nn::LossSpec spec;
    bank.append_loss_terms(spec, IdLossReduction::Sum);
    spec.add(nn::UniformTerm{x, 1.0}).add(nn::ConsistencyTerm{x, pred_0, 0.2, 0.1});
    for (int it = 0; it < 2; ++it) nn::sgd_step(manual, nn::backward(manual, spec).grads, sgd);
    margins = update_outlier_margin(margins, arrival);

    const auto ev = eng.step(x, s.stream.items[i].truth);
    EXPECT_EQ(ev.decision, FilterDecision::PseudoOod);
    EXPECT_EQ(ev.optimizer_steps, 2u);
    EXPECT_EQ(ev.score, arrival);
    EXPECT_EQ(ev.m_out_after, margins.m_out);
    EXPECT_EQ(eng.state().margins.m_count, i + 2);
    EXPECT_TRUE(eng.state().model_t.bitwise_equal(manual)) << "diverged at " << i;
  }
  EXPECT_EQ(eng.state().update_counter, 10u);
  EXPECT_FALSE(eng.state().model_t.bitwise_equal(s.model));
  EXPECT_TRUE(eng.state().model_0.bitwise_equal(s.model));
}

TEST(Engine, ZeroIterationsMeansNoOptimization) {
  const auto& s = small();
  AutoConfig cfg;
  cfg.iters_T = 0;
  auto eng = engine_with_margins(s, 3.0, 2.0, cfg);
  const auto log = eng.run_stream(s.stream);
  EXPECT_TRUE(eng.state().model_t.bitwise_equal(s.model));
  EXPECT_EQ(metrics::count_events(log).optimizer_steps, 0u);
  EXPECT_GT(metrics::count_events(log).pseudo_ood, 0u);
  EXPECT_EQ(metrics::count_events(log).updates, 0u);
}

TEST(Engine, EventScoresAreArrivalTimeScores) {
  const auto& s = small(2);
  AutoConfig cfg;
  cfg.learning_rate = 0.05;
  auto eng = AutoEngine::create(cfg, s.model, s.sc.train);
  std::size_t moved = 0;
  for (const auto& item : s.stream.items) {
    const nn::MlpModel snapshot = eng.state().model_t;
    const auto ev = eng.step(item.x, item.truth);
    EXPECT_EQ(ev.score, score(cfg.score, nn::forward_logits(snapshot, item.x)));
    if (ev.optimizer_steps > 0) moved += score(cfg.score, nn::forward_logits(eng.state().model_t, item.x)) != ev.score;
  }
  EXPECT_GT(moved, 0u);  // re-scoring after the update would differ
}

TEST(Engine, EmptyStream) {
  const auto& s = small();
  auto eng = AutoEngine::create({}, s.model, s.sc.train);
  const auto margins = eng.state().margins;
  const auto log = eng.run_stream(data::Stream{});
  EXPECT_TRUE(log.empty());
  EXPECT_TRUE(eng.state().model_t.bitwise_equal(s.model));
  EXPECT_EQ(eng.state().margins.m_out, margins.m_out);
  EXPECT_EQ(eng.state().step_counter, 0u);
}

TEST(Engine, HighScoreIdOnlyStreamNeverUpdates) {
  const auto& s = small();
  auto eng = AutoEngine::create({}, s.model, s.sc.train);
  data::Stream ids;
  ids.dim = s.stream.dim;
  for (const auto& sample : s.sc.test_id.samples) {
    if (score(ScoreKind::msp(), nn::forward_logits(s.model, sample.x)) > eng.state().margins.m_in)
      ids.items.push_back({sample.x, {false, static_cast<std::size_t>(sample.label), -1}});
  }
  ASSERT_FALSE(ids.empty());
  const auto log = eng.run_stream(ids);
  EXPECT_EQ(metrics::count_events(log).updates, 0u);
  EXPECT_EQ(metrics::count_events(log).pseudo_id, ids.size());
  EXPECT_TRUE(eng.state().model_t.bitwise_equal(s.model));
}

TEST(Engine, HiddenTruthDoesNotInfluenceDecisions) {
  const auto& s = small(3);
  auto a = AutoEngine::create({}, s.model, s.sc.train);
  auto b = AutoEngine::create({}, s.model, s.sc.train);
  auto scrambled = s.stream;
  for (auto& item : scrambled.items) item.truth = {!item.truth.is_ood, std::size_t{0}, 7};
  const auto la = a.run_stream(s.stream);
  const auto lb = b.run_stream(scrambled);
  ASSERT_EQ(la.size(), lb.size());
  for (std::size_t i = 0; i < la.size(); ++i) {
    EXPECT_EQ(la.events[i].score, lb.events[i].score);
    EXPECT_EQ(la.events[i].decision, lb.events[i].decision);
    EXPECT_EQ(la.events[i].m_out_after, lb.events[i].m_out_after);
  }
  EXPECT_TRUE(a.state().model_t.bitwise_equal(b.state().model_t));
}

TEST(Engine, Errors) {
  const auto& s = small();
  auto eng = AutoEngine::create({}, s.model, s.sc.train);
  EXPECT_THROW(eng.step(std::vector<double>(s.stream.dim + 1, 0.0)), InputShapeError);

  AutoConfig bad;
  bad.trainable_groups = {"block9"};
  EXPECT_THROW(AutoEngine::create(bad, s.model, s.sc.train), ArgumentError);
  AutoConfig neg;
  neg.lambda1 = -1.0;
  EXPECT_THROW(AutoEngine::create(neg, s.model, s.sc.train), ArgumentError);

  AutoConfig blowup;
  blowup.learning_rate = 1e308;
  blowup.trainable_groups = {"block1", "fc"};
  auto eng2 = engine_with_margins(s, 3.0, 2.0, blowup);
  EXPECT_THROW(eng2.run_stream(s.stream), NonFiniteLossError);
}

TEST(Engine, ResolveGroupsAlias) {
  const nn::MlpModel m({2, 4, 4, 2});
  EXPECT_EQ(resolve_groups({"blockL"}, m), (std::set<std::string>{"block2"}));
  EXPECT_EQ(resolve_groups({"blockL", "fc"}, m), (std::set<std::string>{"block2", "fc"}));
  EXPECT_TRUE(resolve_groups({}, m).empty());
  EXPECT_THROW(resolve_groups({"bn"}, m), ArgumentError);
}

TEST(Lambda2, ConstantWithoutDecay) {
  AutoConfig cfg;
  for (std::size_t k : {0u, 1u, 10u, 10000u}) EXPECT_EQ(lambda2_at(cfg, k), 0.1);
}

TEST(Lambda2, DecaySchedulesStartAtOneAndNeverIncrease) {
  for (const char* spec : {"inv:50", "inv:0.5", "exp:0.99", "exp:1"}) {
    const auto d = Lambda2Decay::parse(spec);
    EXPECT_EQ(d.beta(0), 1.0) << spec;
    double prev = d.beta(0);
    for (std::size_t k = 1; k <= 10000; ++k) {
      const double b = d.beta(k);
      ASSERT_LE(b, prev) << spec << " at " << k;
      prev = b;
    }
    EXPECT_EQ(Lambda2Decay::parse(d.to_string()), d);
  }
  AutoConfig cfg;
  cfg.lambda2_decay = Lambda2Decay::parse("inv:10");
  EXPECT_DOUBLE_EQ(lambda2_at(cfg, 10), 0.05);
  for (const char* bad : {"inv:0", "exp:1.5", "exp:0", "linear:3", "inv:"})
    EXPECT_THROW(Lambda2Decay::parse(bad), ArgumentError) << bad;
}

TEST(Engine, StatsSubsample) {
  const auto& s = small();
  AutoConfig cfg;
  cfg.filter.stats_subsample_n = 40;
  EXPECT_EQ(initial_id_stats(s.model, cfg, s.sc.train).n_samples, 40u);
  cfg.filter.stats_subsample_n = 0;
  EXPECT_EQ(initial_id_stats(s.model, cfg, s.sc.train).n_samples, s.sc.train.size());
  EXPECT_EQ(initial_id_stats(s.model, cfg, s.sc.train).mu_in,
            estimate_id_stats(id_scores(s.model, cfg.score, s.sc.train)).mu_in);
}

TEST(Engine, StatsUseConfiguredScore) {
  const auto& s = small();
  AutoConfig cfg;
  cfg.score = ScoreKind::max_logit();
  auto eng = AutoEngine::create(cfg, s.model, s.sc.train);
  const auto st = estimate_id_stats(id_scores(s.model, ScoreKind::max_logit(), s.sc.train));
  EXPECT_DOUBLE_EQ(eng.state().margins.m_in, st.mu_in);
  EXPECT_GT(eng.state().margins.m_in, 1.0);  // not on the MSP scale
}

TEST(Engine, DescentRecordsPerInnerStep) {
  const auto& s = small();
  AutoConfig cfg;
  cfg.record_descent = true;
  cfg.iters_T = 3;
  auto eng = engine_with_margins(s, 3.0, 2.0, cfg);
  for (std::size_t i = 0; i < 5; ++i) eng.step(s.stream.items[i].x);
  ASSERT_EQ(eng.descent_records().size(), 15u);
  EXPECT_EQ(eng.descent_records()[4].t, 1u);
  EXPECT_EQ(eng.descent_records()[4].iteration, 1u);
}

TEST(Engine, DegeneratesToFrozenBaseline) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto& s = small(seed);
    AutoConfig cfg;
    cfg.lambda1 = 0.0;
    cfg.lambda2 = 0.0;
    cfg.trainable_groups.clear();
    auto eng = AutoEngine::create(cfg, s.model, s.sc.train);
    const auto margins = eng.state().margins;
    const auto log = eng.run_stream(s.stream);
    const auto base = score_frozen(s.model, cfg.score, margins, s.stream);
    ASSERT_EQ(log.size(), base.size());
    for (std::size_t i = 0; i < log.size(); ++i) EXPECT_TRUE(log.events[i].same_detection(base.events[i]));
    EXPECT_TRUE(eng.state().model_t.bitwise_equal(s.model));
  }
}

class EngineInvariants : public ::testing::TestWithParam<int> {};

TEST_P(EngineInvariants, HoldOnRandomScenarios) {
  const auto seed = static_cast<std::uint64_t>(GetParam());
  const auto& s = small(seed);
  AutoConfig cfg = s.cfg.autocfg;
  if (seed % 3 == 0) cfg.memory.mode = MemoryMode::Prototype;
  if (seed % 4 == 0) cfg.trainable_groups = {"fc"};
  if (seed % 5 == 0) cfg.momentum = 0.5;
  if (seed % 2 == 0) cfg.filter.margin_literal_m0 = true;
  cfg.iters_T = 1 + seed % 3;
  auto eng = AutoEngine::create(cfg, s.model, s.sc.train);
  const auto bank0 = eng.state().bank;
  const auto margins0 = eng.state().margins;
  const auto run = oracle::run_checked(eng, s.stream, fixture::probes(s.stream.dim));
  for (const auto& v : run.violations) ADD_FAILURE() << v;
  if (cfg.memory.mode == MemoryMode::Prototype) {
    EXPECT_EQ(eng.state().bank, bank0);
  }

  // m_out trajectory equals the running-mean replay of the arrival scores.
  oracle::MarginReplay replay(margins0.m_out, cfg.filter.margin_literal_m0);
  for (const auto& e : run.log.events) {
    const bool accepted = replay.feed(e.score);
    EXPECT_EQ(accepted, e.decision == FilterDecision::PseudoOod);
    EXPECT_EQ(e.optimizer_steps, accepted ? cfg.iters_T : 0u);
    EXPECT_NEAR(e.m_out_after, static_cast<double>(replay.current), 1e-12);
  }

  // Deterministic replay.
  auto again = AutoEngine::create(cfg, s.model, s.sc.train);
  EXPECT_EQ(again.run_stream(s.stream), run.log);
}

INSTANTIATE_TEST_SUITE_P(Seeds, EngineInvariants, ::testing::Range(1, 11));
