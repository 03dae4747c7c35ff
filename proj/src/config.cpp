#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "guardnet/bench.hpp"

namespace guardnet {

namespace fs = std::filesystem;

std::string to_string(Defense defense) {
  switch (defense) {
    case Defense::none: return "none";
    case Defense::guard: return "guard";
    case Defense::guard_no_prune: return "guard-no-prune";
    case Defense::guard_no_memory: return "guard-no-memory";
    case Defense::jaccard: return "jaccard";
  }
  return "unknown";
}

Defense parse_defense(const std::string& name) {
  for (Defense d : {Defense::none, Defense::guard, Defense::guard_no_prune,
                    Defense::guard_no_memory, Defense::jaccard})
    if (to_string(d) == name) return d;
  throw ConfigError("unknown defense '" + name + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + value + "'");
  }
  return v;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

template <class T>
Setter size_field(T RunConfig::*field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v) {
    c.*field = static_cast<T>(to_uint(k, v));
  };
}

Setter double_field(double RunConfig::*field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v) {
    c.*field = to_double(k, v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dataset", [](RunConfig& c, const std::string&, const std::string& v) { c.dataset = v; }},
      {"sbm.nodes", [](RunConfig& c, const std::string& k, const std::string& v) { c.sbm.n_nodes = to_uint(k, v); }},
      {"sbm.clusters", [](RunConfig& c, const std::string& k, const std::string& v) { c.sbm.clusters = to_uint(k, v); }},
      {"sbm.p_in", [](RunConfig& c, const std::string& k, const std::string& v) { c.sbm.p_in = to_double(k, v); }},
      {"sbm.p_out", [](RunConfig& c, const std::string& k, const std::string& v) { c.sbm.p_out = to_double(k, v); }},
      {"sbm.feature_dim", [](RunConfig& c, const std::string& k, const std::string& v) { c.sbm.feature_dim = to_uint(k, v); }},
      {"sbm.signal", [](RunConfig& c, const std::string& k, const std::string& v) { c.sbm.signal = to_double(k, v); }},
      {"sbm.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.sbm.seed = to_uint(k, v); }},
      {"house.cycle_length", [](RunConfig& c, const std::string& k, const std::string& v) { c.cycle_house.cycle_length = to_uint(k, v); }},
      {"house.anchor_spacing", [](RunConfig& c, const std::string& k, const std::string& v) { c.cycle_house.anchor_spacing = to_uint(k, v); }},
      {"house.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.cycle_house.seed = to_uint(k, v); }},
      {"similarity", [](RunConfig& c, const std::string&, const std::string& v) { c.similarity = v; }},
      {"model", [](RunConfig& c, const std::string&, const std::string& v) {
         try {
           c.model = parse_model_kind(v);
         } catch (const ValidationError& e) {
           throw ConfigError(e.what());
         }
       }},
      {"defense", [](RunConfig& c, const std::string&, const std::string& v) { c.defense = parse_defense(v); }},
      {"attack", [](RunConfig& c, const std::string&, const std::string& v) {
         if (v == "none") {
           c.attack.reset();
           return;
         }
         try {
           c.attack = parse_attack_kind(v);
         } catch (const ValidationError& e) {
           throw ConfigError(e.what());
         }
       }},
      {"rate", double_field(&RunConfig::rate)},
      {"seeds", [](RunConfig& c, const std::string&, const std::string& v) { c.seeds = parse_seed_list(v); }},
      {"p0", double_field(&RunConfig::p0)},
      {"layers", size_field(&RunConfig::layers)},
      {"hidden", size_field(&RunConfig::hidden)},
      {"lr", double_field(&RunConfig::lr)},
      {"epochs", size_field(&RunConfig::epochs)},
      {"patience", size_field(&RunConfig::patience)},
      {"dropout", double_field(&RunConfig::dropout)},
      {"weight_decay", double_field(&RunConfig::weight_decay)},
      {"penalty", double_field(&RunConfig::penalty)},
      {"jaccard_threshold", double_field(&RunConfig::jaccard_threshold)},
      {"targets", size_field(&RunConfig::targets)},
      {"min_target_degree", size_field(&RunConfig::min_target_degree)},
      {"pool_size", size_field(&RunConfig::pool_size)},
      {"threads", size_field(&RunConfig::threads)},
      {"out", [](RunConfig& c, const std::string&, const std::string& v) {
         if (v.empty()) c.out_dir.reset();
         else c.out_dir = v;
       }},
  };
  return table;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty entry in seed list '" + text + "'");
    seeds.push_back(to_uint("seeds", item));
  }
  if (seeds.empty()) throw ConfigError("seed list is empty");
  return seeds;
}

void RunConfig::validate() const {
  const auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (dataset.empty()) fail("dataset: must not be empty");
  try {
    if (dataset == "sbm") sbm.validate();
    if (dataset == "cycle-house") cycle_house.validate();
  } catch (const ValidationError& e) {
    fail(std::string("dataset: ") + e.what());
  }
  if (dataset != "sbm" && dataset != "cycle-house" && !fs::exists(fs::path(dataset) / "edges.txt")) {
    fail("dataset: '" + dataset + "' is neither sbm, cycle-house nor a directory with edges.txt");
  }
  if (similarity != "auto" && similarity != "cosine" && similarity != "graphlet") {
    fail("similarity: expected auto, cosine or graphlet");
  }
  if (attack == AttackKind::non_targeted && !(rate > 0.0 && rate <= 0.25)) {
    fail("rate: must lie in (0, 0.25]");
  }
  if (seeds.empty()) fail("seeds: at least one seed required");
  if (!(p0 >= 0.0 && p0 <= 1.0)) fail("p0: must lie in [0, 1]");
  if (layers == 0) fail("layers: must be positive");
  if (hidden == 0) fail("hidden: must be positive");
  if (!(lr > 0.0)) fail("lr: must be positive");
  if (epochs == 0) fail("epochs: must be positive");
  if (patience == 0) fail("patience: must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout: must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) fail("weight_decay: must be nonnegative");
  if (!(penalty >= 0.0)) fail("penalty: must be nonnegative");
  if (!(jaccard_threshold >= 0.0 && jaccard_threshold <= 1.0)) {
    fail("jaccard_threshold: must lie in [0, 1]");
  }
  if (targets < 4) fail("targets: need at least 4");
  if (pool_size == 0) fail("pool_size: must be positive");
  if (threads == 0) fail("threads: must be positive");
}

std::string RunConfig::serialize() const {
  std::ostringstream os;
  const auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << '\n'; };
  kv("dataset", dataset);
  kv("sbm.nodes", std::to_string(sbm.n_nodes));
  kv("sbm.clusters", std::to_string(sbm.clusters));
  kv("sbm.p_in", format_double(sbm.p_in));
  kv("sbm.p_out", format_double(sbm.p_out));
  kv("sbm.feature_dim", std::to_string(sbm.feature_dim));
  kv("sbm.signal", format_double(sbm.signal));
  kv("sbm.seed", std::to_string(sbm.seed));
  kv("house.cycle_length", std::to_string(cycle_house.cycle_length));
  kv("house.anchor_spacing", std::to_string(cycle_house.anchor_spacing));
  kv("house.seed", std::to_string(cycle_house.seed));
  kv("similarity", similarity);
  kv("model", to_string(model));
  kv("defense", to_string(defense));
  kv("attack", attack ? to_string(*attack) : "none");
  kv("rate", format_double(rate));
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i) s += (i ? "," : "") + std::to_string(seeds[i]);
  kv("seeds", s);
  kv("p0", format_double(p0));
  kv("layers", std::to_string(layers));
  kv("hidden", std::to_string(hidden));
  kv("lr", format_double(lr));
  kv("epochs", std::to_string(epochs));
  kv("patience", std::to_string(patience));
  kv("dropout", format_double(dropout));
  kv("weight_decay", format_double(weight_decay));
  kv("penalty", format_double(penalty));
  kv("jaccard_threshold", format_double(jaccard_threshold));
  kv("targets", std::to_string(targets));
  kv("min_target_degree", std::to_string(min_target_degree));
  kv("pool_size", std::to_string(pool_size));
  return os.str();
}

std::string RunConfig::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : serialize()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    try {
      it->second(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace guardnet
