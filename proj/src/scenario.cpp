#include "hydrosac/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "hydrosac/errors.hpp"

namespace hydrosac {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> lines_of(const std::string& text) {
  std::vector<std::string_view> lines;
  std::string_view rest(text);
  while (!rest.empty()) {
    auto pos = rest.find('\n');
    lines.push_back(rest.substr(0, pos));
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + 1);
  }
  return lines;
}

std::string at_line(std::size_t line) { return " at line " + std::to_string(line); }

}  // namespace

std::string to_string(SeriesKind kind) { return kind == SeriesKind::price ? "price" : "inflow"; }

std::string to_string(PoolMode mode) {
  return mode == PoolMode::artificial ? "artificial" : "historic";
}

PoolMode pool_mode_from_string(const std::string& text) {
  if (text == "artificial") return PoolMode::artificial;
  if (text == "historic") return PoolMode::historic;
  throw DataError("unknown pool mode '" + text + "'");
}

void ScenarioPools::validate() const {
  for (int w = 0; w < kWeeksPerYear; ++w) {
    for (const auto* pool : {&price_pool[w], &inflow_pool[w]}) {
      const char* name = pool == &price_pool[w] ? "price" : "inflow";
      if (pool->empty()) {
        throw DataError(std::string("empty ") + name + " pool for week " + std::to_string(w + 1));
      }
      for (double v : *pool) {
        if (!(v >= 0.0 && v <= 1.0)) {
          throw DataError(std::string(name) + " pool value outside [0,1] in week " +
                          std::to_string(w + 1));
        }
      }
    }
  }
  if (!(price_max > 0.0) || !std::isfinite(price_max)) throw DataError("price_max must be positive");
}

void ArtificialConfig::validate() const {
  if (samples_per_week < 1) throw std::invalid_argument("samples_per_week must be >= 1");
  if (price_noise < 0.0 || inflow_noise < 0.0) throw std::invalid_argument("noise levels must be >= 0");
  if (!(r_max > 0.0)) throw std::invalid_argument("r_max must be > 0");
  if (annual_inflow < 0.0) throw std::invalid_argument("annual_inflow must be >= 0");
  if (!(high_price > 0.0) || low_price < 0.0) throw std::invalid_argument("price levels invalid");
  if (high_until_week < 0 || high_from_week > kWeeksPerYear + 1 || high_until_week >= high_from_week) {
    throw std::invalid_argument("price step weeks invalid");
  }
  if (base_flow_share < 0.0 || base_flow_share > 1.0) {
    throw std::invalid_argument("base_flow_share must be in [0,1]");
  }
  if (!(bump_width_weeks > 0.0)) throw std::invalid_argument("bump_width_weeks must be > 0");
}

double ArtificialConfig::price_level(int week) const {
  return (week <= high_until_week || week >= high_from_week) ? high_price : low_price;
}

double ArtificialConfig::inflow_fraction(int week) const {
  double bump_total = 0.0;
  for (int w = 1; w <= kWeeksPerYear; ++w) {
    double d = (w - bump_center_week) / bump_width_weeks;
    bump_total += std::exp(-0.5 * d * d);
  }
  double d = (week - bump_center_week) / bump_width_weeks;
  double share = base_flow_share / kWeeksPerYear +
                 (1.0 - base_flow_share) * std::exp(-0.5 * d * d) / bump_total;
  return annual_inflow / r_max * share;
}

ArtificialConfig synthetic_historic_defaults(ArtificialConfig base) {
  base.price_noise = 0.5;
  base.inflow_noise = 0.8;
  return base;
}

RawSeries parse_csv_series(const std::string& text, SeriesKind kind, const std::string& label) {
  RawSeries series{kind, {}, label};
  auto lines = lines_of(text);
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw DataError(label + ": missing header `year,week,value`");
  auto header = split_commas(lines[first]);
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].remove_prefix(3);
  if (header.size() != 3 || header[0] != "year" || header[1] != "week" || header[2] != "value") {
    throw DataError(label + ": expected header `year,week,value`" + at_line(first + 1));
  }
  for (std::size_t i = first + 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    auto fields = split_commas(lines[i]);
    SeriesPoint p;
    if (fields.size() != 3 || !parse_number(fields[0], p.year) || !parse_number(fields[1], p.week) ||
        !parse_number(fields[2], p.value)) {
      throw DataError(label + ": malformed row" + at_line(i + 1));
    }
    if (p.week < 1 || p.week > kWeeksPerYear) {
      throw DataError(label + ": week out of range" + at_line(i + 1));
    }
    if (!std::isfinite(p.value)) throw DataError(label + ": non-finite value" + at_line(i + 1));
    if (p.value < 0.0) throw DataError(label + ": negative value" + at_line(i + 1));
    series.points.push_back(p);
  }
  if (series.points.empty()) throw DataError(label + ": no rows");
  return series;
}

RawSeries load_csv_series(const std::filesystem::path& path, SeriesKind kind) {
  return parse_csv_series(read_file(path), kind, path.filename().string());
}

ScenarioPools build_pools(std::span<const RawSeries> price_series,
                          std::span<const RawSeries> inflow_series, double r_max) {
  if (price_series.empty()) throw DataError("no price series supplied");
  if (inflow_series.empty()) throw DataError("no inflow series supplied");
  if (!(r_max > 0.0)) throw std::invalid_argument("r_max must be > 0");

  double price_max = 0.0;
  for (const auto& s : price_series) {
    for (const auto& p : s.points) price_max = std::max(price_max, p.value);
  }
  if (!(price_max > 0.0)) throw DataError("price data is all zero");

  ScenarioPools pools;
  pools.mode = PoolMode::historic;
  pools.price_max = price_max;
  for (const auto& s : price_series) {
    for (const auto& p : s.points) pools.price_pool[p.week - 1].push_back(p.value / price_max);
  }
  std::size_t clamped = 0;
  for (const auto& s : inflow_series) {
    for (const auto& p : s.points) {
      double v = p.value / r_max;
      if (v > 1.0) {
        v = 1.0;
        ++clamped;
      }
      pools.inflow_pool[p.week - 1].push_back(v);
    }
  }
  // Sorted pools make the result independent of input order.
  for (auto& pool : pools.price_pool) std::sort(pool.begin(), pool.end());
  for (auto& pool : pools.inflow_pool) std::sort(pool.begin(), pool.end());

  for (int w = 0; w < kWeeksPerYear; ++w) {
    if (pools.price_pool[w].empty() || pools.inflow_pool[w].empty()) {
      throw DataError("insufficient data: empty " +
                      std::string(pools.price_pool[w].empty() ? "price" : "inflow") +
                      " pool for week " + std::to_string(w + 1));
    }
  }

  std::multiset<std::string> price_labels, inflow_labels;
  for (const auto& s : price_series) price_labels.insert(s.label);
  for (const auto& s : inflow_series) inflow_labels.insert(s.label);
  std::ostringstream prov;
  prov << "historic; prices:";
  for (const auto& l : price_labels) prov << ' ' << l;
  prov << "; inflows:";
  for (const auto& l : inflow_labels) prov << ' ' << l;
  prov << "; r_max=" << r_max << "; clamped_inflows=" << clamped;
  pools.provenance = prov.str();
  return pools;
}

ScenarioPools generate_artificial_pools(const ArtificialConfig& cfg, std::uint64_t seed,
                                        PoolMode mode) {
  cfg.validate();
  Rng rng(seed);
  ScenarioPools pools;
  pools.mode = mode;
  double raw_max = 0.0;
  for (int w = 1; w <= kWeeksPerYear; ++w) {
    auto& prices = pools.price_pool[w - 1];
    auto& inflows = pools.inflow_pool[w - 1];
    double level = cfg.price_level(w);
    double inflow = cfg.inflow_fraction(w);
    for (int s = 0; s < cfg.samples_per_week; ++s) {
      double pf = cfg.price_noise > 0.0 ? uniform(rng, 1.0 - cfg.price_noise, 1.0 + cfg.price_noise) : 1.0;
      double inf = cfg.inflow_noise > 0.0 ? uniform(rng, 1.0 - cfg.inflow_noise, 1.0 + cfg.inflow_noise) : 1.0;
      prices.push_back(std::max(0.0, level * pf));
      inflows.push_back(std::clamp(inflow * inf, 0.0, 1.0));
      raw_max = std::max(raw_max, prices.back());
    }
  }
  for (auto& pool : pools.price_pool) {
    for (double& v : pool) v /= raw_max;
  }
  pools.price_max = raw_max;
  std::ostringstream prov;
  prov << (mode == PoolMode::artificial ? "artificial" : "synthetic-historic") << "; seed=" << seed
       << "; samples_per_week=" << cfg.samples_per_week << "; annual_inflow=" << cfg.annual_inflow
       << "; r_max=" << cfg.r_max << "; price_noise=" << cfg.price_noise
       << "; inflow_noise=" << cfg.inflow_noise;
  pools.provenance = prov.str();
  return pools;
}

Scenario sample_scenario(const ScenarioPools& pools, Rng& rng) {
  Scenario s;
  for (int w = 0; w < kWeeksPerYear; ++w) {
    const auto& prices = pools.price_pool[w];
    const auto& inflows = pools.inflow_pool[w];
    s.prices[w] = prices[std::uniform_int_distribution<std::size_t>(0, prices.size() - 1)(rng)];
    s.inflows[w] = inflows[std::uniform_int_distribution<std::size_t>(0, inflows.size() - 1)(rng)];
  }
  return s;
}

std::string pools_to_json(const ScenarioPools& pools) {
  nlohmann::json j;
  j["mode"] = to_string(pools.mode);
  j["price_max"] = pools.price_max;
  j["provenance"] = pools.provenance;
  j["price_pool"] = nlohmann::json::array();
  j["inflow_pool"] = nlohmann::json::array();
  for (int w = 0; w < kWeeksPerYear; ++w) {
    j["price_pool"].push_back(pools.price_pool[w]);
    j["inflow_pool"].push_back(pools.inflow_pool[w]);
  }
  return j.dump();
}

ScenarioPools pools_from_json(const std::string& text) {
  ScenarioPools pools;
  try {
    auto j = nlohmann::json::parse(text);
    pools.mode = pool_mode_from_string(j.at("mode").get<std::string>());
    pools.price_max = j.at("price_max").get<double>();
    pools.provenance = j.at("provenance").get<std::string>();
    const auto& pp = j.at("price_pool");
    const auto& ip = j.at("inflow_pool");
    if (!pp.is_array() || !ip.is_array() || pp.size() != kWeeksPerYear || ip.size() != kWeeksPerYear) {
      throw CorruptArtifact("pools file must hold 52 price and 52 inflow pools");
    }
    for (int w = 0; w < kWeeksPerYear; ++w) {
      pools.price_pool[w] = pp[w].get<std::vector<double>>();
      pools.inflow_pool[w] = ip[w].get<std::vector<double>>();
    }
    pools.validate();
  } catch (const nlohmann::json::exception& e) {
    throw CorruptArtifact(std::string("pools file: ") + e.what());
  } catch (const DataError& e) {
    throw CorruptArtifact(std::string("pools file: ") + e.what());
  }
  return pools;
}

void save_pools(const ScenarioPools& pools, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << pools_to_json(pools) << '\n';
}

ScenarioPools load_pools(const std::filesystem::path& path) { return pools_from_json(read_file(path)); }

Scenario parse_scenario_csv(const std::string& text) {
  auto lines = lines_of(text);
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw DataError("scenario: missing header `week,price,inflow`");
  auto header = split_commas(lines[first]);
  if (header.size() != 3 || header[0] != "week" || header[1] != "price" || header[2] != "inflow") {
    throw DataError("scenario: expected header `week,price,inflow`");
  }
  Scenario s;
  std::vector<bool> seen(kWeeksPerYear, false);
  int rows = 0;
  for (std::size_t i = first + 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    auto f = split_commas(lines[i]);
    int week = 0;
    double price = 0.0, inflow = 0.0;
    if (f.size() != 3 || !parse_number(f[0], week) || !parse_number(f[1], price) ||
        !parse_number(f[2], inflow)) {
      throw DataError("scenario: malformed row" + at_line(i + 1));
    }
    if (week < 1 || week > kWeeksPerYear || seen[week - 1]) {
      throw DataError("scenario: week missing, repeated or out of range" + at_line(i + 1));
    }
    if (!(price >= 0.0 && price <= 1.0 && inflow >= 0.0 && inflow <= 1.0)) {
      throw DataError("scenario: values must be normalized to [0,1]" + at_line(i + 1));
    }
    seen[week - 1] = true;
    s.prices[week - 1] = price;
    s.inflows[week - 1] = inflow;
    ++rows;
  }
  if (rows != kWeeksPerYear) {
    throw DataError("scenario must have exactly 52 weeks, got " + std::to_string(rows));
  }
  return s;
}

Scenario load_scenario_csv(const std::filesystem::path& path) { return parse_scenario_csv(read_file(path)); }

}  // namespace hydrosac
