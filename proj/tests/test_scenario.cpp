#include <algorithm>
#include <set>

#include "doctest.h"
#include "hydrosac/errors.hpp"
#include "hydrosac/scenario.hpp"
#include "test_util.hpp"

using namespace hydrosac;

namespace {

std::string full_year_csv(int year, double value) {
  std::string text = "year,week,value\n";
  for (int w = 1; w <= kWeeksPerYear; ++w) {
    text += std::to_string(year) + "," + std::to_string(w) + "," + std::to_string(value) + "\n";
  }
  return text;
}

ScenarioPools singleton_pools(double price, double inflow) {
  ScenarioPools p;
  for (int w = 0; w < kWeeksPerYear; ++w) {
    p.price_pool[w] = {price};
    p.inflow_pool[w] = {inflow};
  }
  return p;
}

std::string error_of(const std::string& text) {
  try {
    (void)parse_csv_series(text, SeriesKind::price, "prices.csv");
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("csv series parses rows") {
  testing::TempDir dir;
  testing::write_file(dir.path() / "p.csv", "year,week,value\n2010,1,42.5\n2010,2,40.0\n");
  RawSeries s = load_csv_series(dir.path() / "p.csv", SeriesKind::price);
  REQUIRE(s.points.size() == 2);
  CHECK(s.points[0].year == 2010);
  CHECK(s.points[1].week == 2);
  CHECK(s.points[0].value == 42.5);
  CHECK(s.label == "p.csv");
}

TEST_CASE("csv series errors name the line") {
  CHECK(error_of("year,week,value\n").find("no rows") != std::string::npos);
  CHECK(error_of("year,week,value\n2010,1,5.0\n2010,53,5.0\n").find("week out of range at line 3") !=
        std::string::npos);
  CHECK(error_of("year,week,value\n2010,x,5.0\n").find("malformed row at line 2") != std::string::npos);
  CHECK(error_of("year,week,value\n2010,4,-1\n").find("negative value at line 2") != std::string::npos);
  CHECK(error_of("yr,wk,v\n2010,1,1\n").find("header") != std::string::npos);
}

TEST_CASE("csv series accepts a byte order mark and CRLF") {
  RawSeries s = parse_csv_series("\xEF\xBB\xBFyear,week,value\r\n2011,7,3.5\r\n", SeriesKind::inflow, "x");
  REQUIRE(s.points.size() == 1);
  CHECK(s.points[0].week == 7);
  CHECK(s.points[0].value == 3.5);
}

TEST_CASE("build_pools normalizes prices by the global maximum") {
  std::string prices = full_year_csv(2010, 50.0);
  prices.replace(prices.find("2010,1,50.000000"), 16, "2010,1,100.0");
  RawSeries p = parse_csv_series(prices, SeriesKind::price, "p");
  RawSeries i = parse_csv_series(full_year_csv(1990, 50.0), SeriesKind::inflow, "i");
  ScenarioPools pools = build_pools(std::vector{p}, std::vector{i}, 1000.0);
  CHECK(pools.price_pool[0] == std::vector<double>{1.0});
  CHECK(pools.price_pool[1] == std::vector<double>{0.5});
  CHECK(pools.inflow_pool[3] == std::vector<double>{0.05});
  CHECK(pools.price_max == 100.0);
  CHECK(pools.mode == PoolMode::historic);
}

TEST_CASE("build_pools clamps inflows above capacity") {
  RawSeries p = parse_csv_series(full_year_csv(2010, 20.0), SeriesKind::price, "p");
  RawSeries i = parse_csv_series(full_year_csv(1990, 1200.0), SeriesKind::inflow, "i");
  ScenarioPools pools = build_pools(std::vector{p}, std::vector{i}, 1000.0);
  for (const auto& pool : pools.inflow_pool) CHECK(pool == std::vector<double>{1.0});
  CHECK(pools.provenance.find("clamped_inflows=52") != std::string::npos);
}

TEST_CASE("build_pools max price is exactly one") {
  Rng rng(3);
  std::vector<RawSeries> prices;
  for (int y = 0; y < 3; ++y) {
    RawSeries s{SeriesKind::price, {}, "p" + std::to_string(y)};
    for (int w = 1; w <= kWeeksPerYear; ++w) s.points.push_back({2010 + y, w, uniform(rng, 5.0, 90.0)});
    prices.push_back(s);
  }
  RawSeries i = parse_csv_series(full_year_csv(1990, 10.0), SeriesKind::inflow, "i");
  ScenarioPools pools = build_pools(prices, std::vector{i}, 1000.0);
  double mx = 0.0;
  for (const auto& pool : pools.price_pool) mx = std::max(mx, *std::max_element(pool.begin(), pool.end()));
  CHECK(mx == 1.0);
}

TEST_CASE("build_pools is invariant to input order") {
  Rng rng(11);
  std::vector<RawSeries> prices, inflows;
  for (int y = 0; y < 4; ++y) {
    RawSeries p{SeriesKind::price, {}, "p" + std::to_string(y)};
    RawSeries q{SeriesKind::inflow, {}, "q" + std::to_string(y)};
    for (int w = 1; w <= kWeeksPerYear; ++w) {
      p.points.push_back({2010 + y, w, uniform(rng, 1.0, 80.0)});
      q.points.push_back({1960 + y, w, uniform(rng, 0.0, 300.0)});
    }
    prices.push_back(p);
    inflows.push_back(q);
  }
  ScenarioPools a = build_pools(prices, inflows, 1000.0);
  std::reverse(prices.begin(), prices.end());
  std::rotate(inflows.begin(), inflows.begin() + 1, inflows.end());
  for (auto& s : inflows) std::reverse(s.points.begin(), s.points.end());
  ScenarioPools b = build_pools(prices, inflows, 1000.0);
  CHECK(a.price_pool == b.price_pool);
  CHECK(a.inflow_pool == b.inflow_pool);
  CHECK(a.provenance == b.provenance);
}

TEST_CASE("build_pools rejects a week without data") {
  RawSeries p = parse_csv_series("year,week,value\n2010,1,5\n", SeriesKind::price, "p");
  RawSeries i = parse_csv_series(full_year_csv(1990, 10.0), SeriesKind::inflow, "i");
  CHECK_THROWS_AS(build_pools(std::vector{p}, std::vector{i}, 1000.0), DataError);
}

TEST_CASE("artificial pools without noise follow the profile") {
  ArtificialConfig cfg;
  cfg.samples_per_week = 1;
  cfg.price_noise = 0.0;
  cfg.inflow_noise = 0.0;
  ScenarioPools pools = generate_artificial_pools(cfg, 0);
  CHECK(pools.price_pool[9] == std::vector<double>{1.0});
  CHECK(pools.price_pool[24][0] == doctest::Approx(0.35));
}

TEST_CASE("artificial inflow profile sums to the annual inflow") {
  for (double annual : {1000.0, 4000.0}) {
    ArtificialConfig cfg;
    cfg.annual_inflow = annual;
    cfg.samples_per_week = 3;
    cfg.price_noise = 0.0;
    cfg.inflow_noise = 0.0;
    ScenarioPools pools = generate_artificial_pools(cfg, 1);
    double total = 0.0;
    for (const auto& pool : pools.inflow_pool) {
      double s = 0.0;
      for (double v : pool) s += v;
      total += s / static_cast<double>(pool.size());
    }
    CHECK(total == doctest::Approx(annual / cfg.r_max).epsilon(1e-12));
  }
}

TEST_CASE("artificial pools are deterministic per seed and in range") {
  ArtificialConfig cfg;
  ScenarioPools a = generate_artificial_pools(cfg, 42);
  ScenarioPools b = generate_artificial_pools(cfg, 42);
  ScenarioPools c = generate_artificial_pools(cfg, 43);
  CHECK(a.price_pool == b.price_pool);
  CHECK(a.inflow_pool == b.inflow_pool);
  CHECK(a.price_pool != c.price_pool);
  CHECK_NOTHROW(a.validate());
  for (const auto& pool : a.price_pool) CHECK(pool.size() == 100);
}

TEST_CASE("sampling from singleton pools reproduces them") {
  ScenarioPools pools = singleton_pools(0.3, 0.01);
  pools.price_pool[4] = {0.9};
  Rng rng(5);
  Scenario s = sample_scenario(pools, rng);
  for (int w = 0; w < kWeeksPerYear; ++w) {
    CHECK(s.prices[w] == (w == 4 ? 0.9 : 0.3));
    CHECK(s.inflows[w] == 0.01);
  }
}

TEST_CASE("sampling is uniform over a pool") {
  ScenarioPools pools = singleton_pools(0.5, 0.0);
  pools.price_pool[0] = {0.2, 0.8};
  Rng rng(17);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += sample_scenario(pools, rng).prices[0];
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("sampled values are pool members") {
  ScenarioPools pools = generate_artificial_pools(ArtificialConfig{}, 9);
  Rng rng(23);
  for (int i = 0; i < 1000; ++i) {
    Scenario s = sample_scenario(pools, rng);
    for (int w = 0; w < kWeeksPerYear; ++w) {
      const auto& pp = pools.price_pool[w];
      const auto& ip = pools.inflow_pool[w];
      REQUIRE(std::find(pp.begin(), pp.end(), s.prices[w]) != pp.end());
      REQUIRE(std::find(ip.begin(), ip.end(), s.inflows[w]) != ip.end());
    }
  }
}

TEST_CASE("sampling is deterministic per seed") {
  ScenarioPools pools = generate_artificial_pools(ArtificialConfig{}, 9);
  Rng a(77), b(77);
  Scenario x = sample_scenario(pools, a);
  Scenario y = sample_scenario(pools, b);
  CHECK(x.prices == y.prices);
  CHECK(x.inflows == y.inflows);
}

TEST_CASE("pools file round-trips exactly") {
  testing::TempDir dir;
  ScenarioPools pools = generate_artificial_pools(ArtificialConfig{}, 4);
  save_pools(pools, dir.path() / "pools.json");
  ScenarioPools back = load_pools(dir.path() / "pools.json");
  CHECK(back.price_pool == pools.price_pool);
  CHECK(back.inflow_pool == pools.inflow_pool);
  CHECK(back.price_max == pools.price_max);
  CHECK(back.mode == pools.mode);
  CHECK(back.provenance == pools.provenance);
}

TEST_CASE("damaged pools file is a corrupt artifact") {
  testing::TempDir dir;
  testing::write_file(dir.path() / "bad.json", "{\"mode\": \"artificial\", \"price_pool\": [");
  CHECK_THROWS_AS(load_pools(dir.path() / "bad.json"), CorruptArtifact);
  testing::write_file(dir.path() / "short.json",
                      R"({"mode":"artificial","price_max":1,"provenance":"","price_pool":[[0.5]],"inflow_pool":[[0.1]]})");
  CHECK_THROWS_AS(load_pools(dir.path() / "short.json"), CorruptArtifact);
}

TEST_CASE("scenario csv needs all 52 weeks") {
  std::string text = "week,price,inflow\n";
  for (int w = 1; w <= 51; ++w) text += std::to_string(w) + ",0.5,0.01\n";
  try {
    (void)parse_scenario_csv(text);
    FAIL("51-week scenario accepted");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("exactly 52 weeks, got 51") != std::string::npos);
  }
  text += "52,0.7,0.02\n";
  Scenario s = parse_scenario_csv(text);
  CHECK(s.prices[51] == 0.7);
  CHECK(s.inflows[0] == 0.01);
  CHECK_THROWS_AS((void)parse_scenario_csv(text + "52,0.1,0.1\n"), DataError);
}
