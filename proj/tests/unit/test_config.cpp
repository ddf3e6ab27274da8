#include <doctest.h>

#include "verbose/config.hpp"
#include "verbose/errors.hpp"
#include "verbose/report.hpp"

using namespace verbose;

namespace {

const char* kGoodConfig = R"(
# experiment
[paths]
model = out/model.ckpt
dataset = out/data
out = out/exp

[data]
count = 64
seed = 7

[attack]
epsilon = 8/255
alpha = 1/255
iters = 25
losses = l1+l3
schedule = decay

[eval]
policies = greedy, nucleus:0.9
images = 4
max_len = 64

[run]
baselines = noise
jobs = 1
)";

}  // namespace

TEST_CASE("ini parsing basics") {
  IniDoc doc = parse_ini("[a]\nx = 1\n# comment\ny= 2\n[b]\nz =3\n");
  CHECK(doc.get("a", "x", "") == "1");
  CHECK(doc.get("a", "y", "") == "2");
  CHECK(doc.get("b", "z", "") == "3");
  CHECK(doc.get("b", "missing", "dflt") == "dflt");

  CHECK_THROWS_AS(parse_ini("x = 1\n"), ConfigError);       // key before section
  CHECK_THROWS_AS(parse_ini("[a]\nnot_a_pair\n"), ConfigError);
  CHECK_THROWS_AS(parse_ini("[a]\nx = 1\nx = 2\n"), ConfigError);  // duplicate
  CHECK_THROWS_AS(parse_ini("[oops\nx = 1\n"), ConfigError);
}

TEST_CASE("config schema rejects unknown keys, naming them") {
  try {
    config_from_ini(parse_ini("[attack]\nepsilom = 0.1\n"));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("epsilom") != std::string::npos);
  }
  CHECK_THROWS_AS(config_from_ini(parse_ini("[attacker]\nepsilon = 0.1\n")),
                  ConfigError);
}

TEST_CASE("config values come through typed, with fraction support") {
  ExperimentConfig cfg = config_from_ini(parse_ini(kGoodConfig));
  CHECK(cfg.model_path == "out/model.ckpt");
  CHECK(cfg.data_count == 64);
  CHECK(cfg.attack.epsilon == doctest::Approx(8.0 / 255.0));
  CHECK(cfg.attack.alpha == doctest::Approx(1.0 / 255.0));
  CHECK(cfg.attack.iters == 25);
  CHECK(cfg.attack.use_l1);
  CHECK_FALSE(cfg.attack.use_l2);
  CHECK(cfg.attack.use_l3);
  CHECK(cfg.attack.use_decay);
  CHECK_FALSE(cfg.attack.use_momentum);
  CHECK(cfg.policy_specs.size() == 2);
  CHECK(cfg.eval_policies()[1].kind == PolicyKind::nucleus);
  CHECK(cfg.eval_policies()[1].max_len == 64);
  CHECK(cfg.run_noise);
  CHECK_FALSE(cfg.run_sponge);
  CHECK(cfg.jobs == 1);

  CHECK_THROWS_AS(parse_number("abc", "x"), ConfigError);
  CHECK_THROWS_AS(parse_number("1/0", "x"), ConfigError);
  CHECK(parse_number("3/4", "x") == doctest::Approx(0.75));

  CHECK_THROWS_AS(
      config_from_ini(parse_ini("[attack]\nlosses = none_of_them\n")),
      ConfigError);
  CHECK_THROWS_AS(config_from_ini(parse_ini("[attack]\nschedule = sometimes\n")),
                  ConfigError);
  CHECK_THROWS_AS(config_from_ini(parse_ini("[run]\nbaselines = ghosts\n")),
                  ConfigError);
}

TEST_CASE("report aggregates and histograms recompute from rows") {
  Report r;
  r.hist_max_len = 64;
  r.hist_bins = 8;
  for (int i = 0; i < 10; ++i) {
    ImageRow row;
    row.method = i < 5 ? "original" : "verbose";
    row.policy = "greedy";
    row.image_id = i % 5;
    row.length = i < 5 ? 8 : 40 + i;
    row.flops = 100.0 * row.length;
    row.proxy_energy = row.flops * 1e-9;
    row.wall_seconds = 0.001 * row.length;
    r.rows.push_back(row);
  }
  const auto aggs = r.aggregates();
  REQUIRE(aggs.size() == 2);
  const MethodAggregate* orig = r.find("original", "greedy", aggs);
  const MethodAggregate* verb = r.find("verbose", "greedy", aggs);
  REQUIRE(orig != nullptr);
  REQUIRE(verb != nullptr);
  CHECK(orig->mean_length == doctest::Approx(8.0));
  CHECK(verb->mean_length == doctest::Approx(47.0));
  CHECK(orig->std_length == doctest::Approx(0.0));

  const auto ratios = r.length_ratios();
  CHECK(ratios.at({"verbose", "greedy"}) == doctest::Approx(47.0 / 8.0));

  const auto hists = r.histograms();
  int total = 0;
  for (int c : hists.at({"original", "greedy"})) total += c;
  CHECK(total == 5);
  CHECK(hists.at({"original", "greedy"})[1] == 5);  // all lengths 8 in [8,16)

  // summary json is stable and excludes wall seconds
  const std::string json1 = summary_json_string(r, "0.1.0");
  const std::string json2 = summary_json_string(r, "0.1.0");
  CHECK(json1 == json2);
  CHECK(json1.find("wall") == std::string::npos);
  CHECK(json1.find("mean_length") != std::string::npos);
}
