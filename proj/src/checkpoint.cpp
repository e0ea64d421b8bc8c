#include <fstream>
#include <sstream>

#include "json.hpp"

#include "hydrosac/config_io.hpp"
#include "hydrosac/errors.hpp"
#include "hydrosac/trainer.hpp"

namespace hydrosac {

using nlohmann::json;

std::string rng_state_to_string(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

Rng rng_state_from_string(const std::string& state) {
  std::istringstream in(state);
  Rng rng;
  in >> rng;
  if (in.fail()) throw CorruptArtifact("invalid generator state");
  return rng;
}

namespace {

json numbers(const double* data, Eigen::Index n) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < n; ++i) arr.push_back(format_double(data[i]));
  return arr;
}

// Weights are written row-major regardless of Eigen's storage order.
json matrix_pair(const Eigen::MatrixXd& w, const Eigen::VectorXd& b) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = w;
  return {{"rows", w.rows()}, {"cols", w.cols()}, {"weights", numbers(rm.data(), rm.size())},
          {"bias", numbers(b.data(), b.size())}};
}

json network_json(const Mlp& net) {
  json layers = json::array();
  for (const auto& l : net.layers()) {
    json j = matrix_pair(l.weights, l.bias);
    j["activation"] = to_string(l.activation);
    layers.push_back(std::move(j));
  }
  return layers;
}

json optimizer_json(const Rmsprop& opt) {
  json acc = json::array();
  for (const auto& a : opt.accumulators()) acc.push_back(matrix_pair(a.weights, a.bias));
  return {{"learning_rate", format_double(opt.learning_rate())},
          {"decay", format_double(opt.decay())},
          {"epsilon", format_double(opt.epsilon())},
          {"accumulators", std::move(acc)}};
}

void read_pair(const json& j, Eigen::MatrixXd& w, Eigen::VectorXd& b) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& wj = j.at("weights");
  const auto& bj = j.at("bias");
  if (rows <= 0 || cols <= 0 || static_cast<Eigen::Index>(wj.size()) != rows * cols ||
      static_cast<Eigen::Index>(bj.size()) != rows) {
    throw CorruptArtifact("layer arrays do not match their declared shape");
  }
  w.resize(rows, cols);
  b.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = json_to_double(wj[static_cast<std::size_t>(r * cols + c)]);
    b(r) = json_to_double(bj[static_cast<std::size_t>(r)]);
  }
}

Mlp read_network(const json& j, const std::vector<int>& widths, const char* name) {
  std::vector<DenseLayer> layers;
  for (const auto& lj : j) {
    DenseLayer l;
    read_pair(lj, l.weights, l.bias);
    l.activation = activation_from_string(lj.at("activation").get<std::string>());
    layers.push_back(std::move(l));
  }
  Mlp net(std::move(layers));
  if (net.widths() != widths) throw CorruptArtifact(std::string("network '") + name + "' has unexpected shape");
  return net;
}

void read_optimizer(const json& j, Rmsprop& opt, const Mlp& net, const char* name) {
  opt = Rmsprop(net, json_to_double(j.at("learning_rate")), json_to_double(j.at("decay")),
                json_to_double(j.at("epsilon")));
  const auto& acc = j.at("accumulators");
  if (acc.size() != opt.accumulators().size()) {
    throw CorruptArtifact(std::string("optimizer state '") + name + "' does not match its network");
  }
  for (std::size_t i = 0; i < acc.size(); ++i) {
    auto& a = opt.accumulators()[i];
    Eigen::MatrixXd w;
    Eigen::VectorXd b;
    read_pair(acc[i], w, b);
    if (w.rows() != a.weights.rows() || w.cols() != a.weights.cols()) {
      throw CorruptArtifact(std::string("optimizer state '") + name + "' does not match its network");
    }
    a.weights = std::move(w);
    a.bias = std::move(b);
  }
}

json observation_json(const Observation& o) { return numbers(o.data(), static_cast<Eigen::Index>(o.size())); }

Observation read_observation(const json& j) {
  if (j.size() != kObsSize) throw CorruptArtifact("replay observation has wrong length");
  Observation o{};
  for (std::size_t i = 0; i < kObsSize; ++i) o[i] = json_to_double(j[i]);
  return o;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ck, int indent) {
  const SacAgent& a = ck.agent;
  json j;
  j["version"] = ck.version;
  j["config"] = to_json(ck.config, true);
  j["networks"] = {{"policy_trunk", network_json(a.policy.trunk())},
                   {"policy_head", network_json(a.policy.head())},
                   {"q1", network_json(a.q1)},
                   {"q2", network_json(a.q2)},
                   {"value", network_json(a.value)},
                   {"value_target", network_json(a.value_target)}};
  j["optimizer_states"] = {{"policy_trunk", optimizer_json(a.policy_trunk_opt)},
                           {"policy_head", optimizer_json(a.policy_head_opt)},
                           {"q1", optimizer_json(a.q1_opt)},
                           {"q2", optimizer_json(a.q2_opt)},
                           {"value", optimizer_json(a.value_opt)}};
  j["rng_state"] = ck.rng_state;
  j["episode"] = ck.episode;
  j["global_step"] = ck.global_step;
  j["replay_size"] = a.replay.size();
  if (ck.replay_included) {
    json items = json::array();
    for (const auto& t : a.replay.items()) {
      items.push_back({{"obs", observation_json(t.obs)},
                       {"action", format_double(t.action)},
                       {"reward", format_double(t.reward)},
                       {"next_obs", observation_json(t.next_obs)},
                       {"done", t.done}});
    }
    j["replay"] = std::move(items);
  }
  return j.dump(indent);
}

Checkpoint checkpoint_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    Checkpoint ck;
    ck.version = j.at("version").get<int>();
    if (ck.version != kCheckpointVersion) {
      throw CorruptArtifact("unsupported checkpoint version " + std::to_string(ck.version) + " (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    }
    merge_json(ck.config, j.at("config"));
    ck.config.validate();
    const int h = ck.config.agent.hidden;
    const int obs = static_cast<int>(kObsSize);
    const auto& nets = j.at("networks");
    Mlp trunk = read_network(nets.at("policy_trunk"), {obs, h, h}, "policy_trunk");
    Mlp head = read_network(nets.at("policy_head"), {h, 2}, "policy_head");
    Mlp q1 = read_network(nets.at("q1"), {obs + 1, h, h, h, 1}, "q1");
    Mlp q2 = read_network(nets.at("q2"), {obs + 1, h, h, h, 1}, "q2");
    Mlp value = read_network(nets.at("value"), {obs, h, h, h, 1}, "value");
    Mlp target = read_network(nets.at("value_target"), {obs, h, h, h, 1}, "value_target");
    PolicyNet policy(std::move(trunk), std::move(head), policy_config_of(ck.config.agent));
    ck.agent = SacAgent(ck.config.agent, std::move(policy), std::move(q1), std::move(q2), std::move(value),
                        std::move(target));

    const auto& opts = j.at("optimizer_states");
    read_optimizer(opts.at("policy_trunk"), ck.agent.policy_trunk_opt, ck.agent.policy.trunk(), "policy_trunk");
    read_optimizer(opts.at("policy_head"), ck.agent.policy_head_opt, ck.agent.policy.head(), "policy_head");
    read_optimizer(opts.at("q1"), ck.agent.q1_opt, ck.agent.q1, "q1");
    read_optimizer(opts.at("q2"), ck.agent.q2_opt, ck.agent.q2, "q2");
    read_optimizer(opts.at("value"), ck.agent.value_opt, ck.agent.value, "value");

    ck.rng_state = j.at("rng_state").get<std::string>();
    if (!ck.rng_state.empty()) rng_state_from_string(ck.rng_state);
    ck.episode = j.at("episode").get<std::int64_t>();
    ck.global_step = j.value("global_step", std::int64_t{0});
    if (auto it = j.find("replay"); it != j.end()) {
      ck.replay_included = true;
      for (const auto& t : *it) {
        ck.agent.replay.push({read_observation(t.at("obs")), json_to_double(t.at("action")),
                              json_to_double(t.at("reward")), read_observation(t.at("next_obs")),
                              t.at("done").get<bool>()});
      }
    }
    return ck;
  } catch (const json::exception& e) {
    throw CorruptArtifact(std::string("checkpoint parse error: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CorruptArtifact(std::string("checkpoint validation error: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string text = checkpoint_to_json(ckpt);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text << '\n';
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptArtifact("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace hydrosac
