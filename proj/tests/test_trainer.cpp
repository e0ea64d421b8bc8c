#include <cmath>
#include <fstream>

#include "doctest.h"
#include "hydrosac/config_io.hpp"
#include "hydrosac/errors.hpp"
#include "hydrosac/trainer.hpp"
#include "test_util.hpp"

using namespace hydrosac;

namespace {

TrainConfig quick_config(std::int64_t weeks, std::int64_t exploration) {
  TrainConfig cfg;
  cfg.total_weeks = weeks;
  cfg.exploration_weeks = exploration;
  cfg.batch_size = 16;
  cfg.agent.hidden = 16;
  cfg.seed = 3;
  return cfg;
}

ScenarioPools flat_pools(double price, double inflow) {
  ScenarioPools p;
  for (int w = 0; w < kWeeksPerYear; ++w) {
    p.price_pool[w] = {price};
    p.inflow_pool[w] = {inflow};
  }
  return p;
}

const ScenarioPools& artificial() {
  static const ScenarioPools pools = generate_artificial_pools(ArtificialConfig{}, 1);
  return pools;
}

}  // namespace

TEST_CASE("training counts whole years") {
  TrainResult r = train(quick_config(104, 104), artificial());
  CHECK(r.log.size() == 2);
  CHECK(r.checkpoint.episode == 2);
  CHECK(r.checkpoint.global_step == 104);
  CHECK(r.checkpoint.agent.replay.size() == 104);

  TrainResult partial = train(quick_config(130, 130), artificial());
  CHECK(partial.log.size() == 2);
  CHECK(partial.checkpoint.global_step == 130);
}

TEST_CASE("step count is 52 per episode at every boundary") {
  std::int64_t seen = 0;
  bool consistent = true;
  TrainHooks hooks;
  TrainConfig cfg = quick_config(520, 100);
  hooks.on_episode = [&](const EpisodeRecord& rec) {
    ++seen;
    consistent = consistent && rec.episode + 1 == seen;
  };
  cfg.checkpoint_every_episodes = 1;
  hooks.on_checkpoint = [&](const Checkpoint& ck) {
    consistent = consistent && ck.global_step == 52 * ck.episode;
  };
  train(cfg, artificial(), hooks);
  CHECK(seen == 10);
  CHECK(consistent);
}

TEST_CASE("pure exploration leaves parameters at their initial values") {
  TrainConfig cfg = quick_config(208, 208);
  TrainResult r = train(cfg, artificial());
  Rng rng(cfg.seed);
  SacAgent fresh(cfg.agent, rng);
  CHECK(parameter_hash(r.checkpoint.agent) == parameter_hash(fresh));
}

TEST_CASE("training is deterministic per seed") {
  TrainConfig cfg = quick_config(520, 200);
  TrainResult a = train(cfg, artificial());
  TrainResult b = train(cfg, artificial());
  CHECK(training_log_csv(a.log) == training_log_csv(b.log));
  CHECK(parameter_hash(a.checkpoint.agent) == parameter_hash(b.checkpoint.agent));
  CHECK(a.checkpoint.rng_state == b.checkpoint.rng_state);
  cfg.seed = 4;
  TrainResult c = train(cfg, artificial());
  CHECK(training_log_csv(a.log) != training_log_csv(c.log));
}

TEST_CASE("episode records add up") {
  TrainResult r = train(quick_config(520, 520), artificial());
  for (const auto& rec : r.log) {
    CHECK(rec.seconds == 0.0);
    CHECK(rec.mean_action >= 0.0);
    CHECK(rec.mean_action <= 1.0);
    CHECK(rec.end_storage >= 0.0);
    CHECK(rec.end_storage <= 1.0);
    CHECK(rec.total_reward >= rec.terminal_bonus);
    if (rec.end_storage < 0.4 || rec.end_storage > 0.6) CHECK(rec.terminal_bonus == 0.0);
  }
}

TEST_CASE("a zero policy releases half the maximum every week") {
  Rng rng(1);
  SacConfig sc;
  sc.hidden = 8;
  Checkpoint ck;
  ck.config.agent = sc;
  ck.agent = SacAgent(sc, rng);
  for (auto& l : ck.agent.policy.head().layers()) {
    l.weights.setZero();
    l.bias.setZero();
  }
  // A full reservoir without inflow never runs dry (52 * 0.015 < 1) and ends below the bonus window.
  ck.config.env.init_low = ck.config.env.init_high = 1.0;
  const double y = 0.7;
  EvalReport rep = evaluate(ck, flat_pools(y, 0.0), 3, true, 11);
  const EnvConfig& env = ck.config.env;
  for (const auto& trace : rep.traces) {
    REQUIRE(trace.size() == 52);
    for (const auto& row : trace) {
      CHECK(row.action == 0.5);
      CHECK(row.reward == doctest::Approx(0.5 * env.f_max * env.r_max * y).epsilon(1e-12));
    }
  }
}

TEST_CASE("evaluation shapes, prefix sums and determinism") {
  TrainResult r = train(quick_config(312, 104), artificial());
  EvalReport a = evaluate(r.checkpoint, artificial(), 5, true, 21);
  EvalReport b = evaluate(r.checkpoint, artificial(), 5, true, 21);
  REQUIRE(a.traces.size() == 5);
  for (std::size_t e = 0; e < 5; ++e) {
    REQUIRE(a.traces[e].size() == 52);
    double running = 0.0;
    for (const auto& row : a.traces[e]) {
      running += row.reward;
      REQUIRE(row.accumulated_reward == running);
      REQUIRE(row.episode == static_cast<int>(e));
    }
    CHECK(a.total_rewards[e] == running);
  }
  CHECK(trace_csv(a) == trace_csv(b));

  EvalReport s1 = evaluate(r.checkpoint, artificial(), 2, false, 1);
  EvalReport s2 = evaluate(r.checkpoint, artificial(), 2, false, 2);
  CHECK(trace_csv(s1) != trace_csv(s2));
}

TEST_CASE("evaluation does not touch the agent") {
  TrainResult r = train(quick_config(312, 104), artificial());
  const std::uint64_t before = parameter_hash(r.checkpoint.agent);
  (void)evaluate(r.checkpoint, artificial(), 4, false, 5);
  (void)evaluate(r.checkpoint, artificial(), 4, true, 5);
  CHECK(parameter_hash(r.checkpoint.agent) == before);
}

TEST_CASE("baseline policies see the same years") {
  auto constant = [](double a) { return [a](const Observation&, Rng&) { return a; }; };
  EvalReport x = evaluate_policy(constant(0.2), artificial(), EnvConfig{}, 4, 9);
  EvalReport y = evaluate_policy(constant(0.9), artificial(), EnvConfig{}, 4, 9);
  for (std::size_t e = 0; e < 4; ++e) {
    for (std::size_t w = 0; w < 52; ++w) {
      REQUIRE(x.traces[e][w].price == y.traces[e][w].price);
      REQUIRE(x.traces[e][w].inflow == y.traces[e][w].inflow);
    }
  }
}

TEST_CASE("plan rows convert actions to volumes") {
  TrainResult r = train(quick_config(156, 104), artificial());
  Rng rng(2);
  Scenario s = sample_scenario(artificial(), rng);
  auto rows = plan(r.checkpoint, s, 0.5);
  REQUIRE(rows.size() == 52);
  const EnvConfig& env = r.checkpoint.config.env;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].week == static_cast<int>(i) + 1);
    CHECK(rows[i].release_volume == rows[i].action * env.f_max * env.r_max);
    CHECK(rows[i].price == s.prices[i]);
  }
  CHECK_THROWS_AS(plan(r.checkpoint, s, 1.5), std::invalid_argument);
}

TEST_CASE("checkpoint round-trip is bit exact") {
  testing::TempDir dir;
  TrainConfig cfg = quick_config(312, 104);
  cfg.agent.alpha = 0.1 + 1e-17;  // not representable in short decimal form
  TrainResult r = train(cfg, artificial());
  save_checkpoint(r.checkpoint, dir.path() / "ck.json");
  Checkpoint back = load_checkpoint(dir.path() / "ck.json");

  CHECK(back.config == r.checkpoint.config);
  CHECK(back.episode == r.checkpoint.episode);
  CHECK(back.global_step == r.checkpoint.global_step);
  CHECK(back.rng_state == r.checkpoint.rng_state);
  CHECK(parameter_hash(back.agent) == parameter_hash(r.checkpoint.agent));
  CHECK(back.agent.replay.size() == 0);
  const auto& a = r.checkpoint.agent;
  const auto& b = back.agent;
  for (std::size_t l = 0; l < a.q1_opt.accumulators().size(); ++l) {
    CHECK(a.q1_opt.accumulators()[l].weights == b.q1_opt.accumulators()[l].weights);
  }

  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    Observation o;
    for (double& v : o) v = uniform(rng, 0, 1);
    REQUIRE(a.policy.mean_action(o) == b.policy.mean_action(o));
  }
  // Replay memory is not saved by default, so only the size field may differ.
  r.checkpoint.agent.replay.clear();
  CHECK(checkpoint_to_json(back) == checkpoint_to_json(r.checkpoint));
}

TEST_CASE("replay memory is stored only on request") {
  TrainConfig cfg = quick_config(156, 156);
  cfg.include_replay = true;
  TrainResult r = train(cfg, artificial());
  Checkpoint back = checkpoint_from_json(checkpoint_to_json(r.checkpoint));
  REQUIRE(back.agent.replay.size() == 156);
  CHECK(back.agent.replay[17].reward == r.checkpoint.agent.replay[17].reward);
  CHECK(back.agent.replay[17].obs == r.checkpoint.agent.replay[17].obs);
}

TEST_CASE("damaged checkpoints are rejected whole") {
  testing::TempDir dir;
  TrainResult r = train(quick_config(104, 104), artificial());
  const std::string text = checkpoint_to_json(r.checkpoint);
  testing::write_file(dir.path() / "cut.json", text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(dir.path() / "cut.json"), CorruptArtifact);

  auto j = nlohmann::json::parse(text);
  j["version"] = 99;
  CHECK_THROWS_AS(checkpoint_from_json(j.dump()), CorruptArtifact);

  j = nlohmann::json::parse(text);
  j["networks"]["q1"][0]["weights"].erase(0);
  CHECK_THROWS_AS(checkpoint_from_json(j.dump()), CorruptArtifact);
  CHECK_THROWS_AS(load_checkpoint(dir.path() / "missing.json"), std::exception);
}

TEST_CASE("checkpoint environment wins over requested settings") {
  EnvConfig trained;
  EnvConfig requested;
  requested.f_max = 0.10;
  std::vector<std::string> warnings;
  EnvConfig used = resolve_env_config(trained, requested, warnings);
  CHECK(used == trained);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("f_max") != std::string::npos);

  warnings.clear();
  CHECK(resolve_env_config(trained, std::nullopt, warnings) == trained);
  CHECK(warnings.empty());
}

TEST_CASE("training log csv layout") {
  std::vector<EpisodeRecord> log(1);
  log[0].episode = 0;
  log[0].total_reward = 12.5;
  log[0].end_storage = 0.45;
  CHECK(training_log_csv(log) ==
        "episode,total_reward,terminal_bonus,end_storage,total_spill,mean_action,seconds\n0,12.5,0,0.45,0,0,0\n");
}

TEST_CASE("train configuration json round-trips") {
  TrainConfig cfg;
  cfg.total_weeks = 777;
  cfg.env.f_max = 0.1;
  cfg.agent.tau = 0.1 + 0.2;
  TrainConfig back;
  merge_json(back, to_json(cfg, true));
  CHECK(back == cfg);
  CHECK_THROWS_AS(merge_json(back, nlohmann::json::parse(R"({"env": {"f_mx": 1}})")), std::invalid_argument);
  CHECK_THROWS_AS(merge_json(back, nlohmann::json::parse(R"({"batch_size": "ten"})")), std::invalid_argument);
}
