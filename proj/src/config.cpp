#include "parcelplan/config.hpp"

#include <cmath>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "parcelplan/error.hpp"
#include "parcelplan/text.hpp"

namespace parcelplan {

namespace {

namespace pt = boost::property_tree;

std::string where(const std::string& section, const std::string& key) { return "[" + section + "] " + key; }

double real_value(const std::string& section, const std::string& key, const std::string& raw) {
  double v = 0.0;
  if (!text::parse_real(raw, v)) fail(ErrorCode::Config, where(section, key) + ": expected a number, got '" + raw + "'");
  return v;
}

long long int_value(const std::string& section, const std::string& key, const std::string& raw) {
  long long v = 0;
  if (!text::parse_int(raw, v)) fail(ErrorCode::Config, where(section, key) + ": expected an integer, got '" + raw + "'");
  return v;
}

std::uint64_t count_value(const std::string& section, const std::string& key, const std::string& raw) {
  const long long v = int_value(section, key, raw);
  if (v < 0) fail(ErrorCode::Config, where(section, key) + ": must be non-negative");
  return static_cast<std::uint64_t>(v);
}

std::vector<std::string> list_items(std::string_view raw) {
  std::vector<std::string> items;
  for (std::string_view item : text::split(raw, ',')) {
    item = text::trim(item);
    if (!item.empty()) items.emplace_back(item);
  }
  return items;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

void read_data(RunConfig& c, const std::string& key, const std::string& raw) {
  if (key == "parcels") c.data.parcels = raw;
  else if (key == "bundle") c.data.bundle = raw;
  else if (key == "out") c.data.out = raw;
  else if (key == "checkpoint") c.data.checkpoint = raw;
  else fail(ErrorCode::Config, "unknown key " + where("data", key));
}

void read_graph(RunConfig& c, const std::string& key, const std::string& raw) {
  if (key == "k") c.k = static_cast<int>(int_value("graph", key, raw));
  else if (key == "radius_m") c.radius_m = real_value("graph", key, raw);
  else fail(ErrorCode::Config, "unknown key " + where("graph", key));
}

void read_train(RunConfig& c, const std::string& key, const std::string& raw) {
  const std::string s = "train";
  TrainConfig& t = c.train;
  if (key == "epochs") t.epochs = static_cast<int>(int_value(s, key, raw));
  else if (key == "episodes_per_epoch") t.episodes_per_epoch = static_cast<int>(int_value(s, key, raw));
  else if (key == "gamma") t.gamma = real_value(s, key, raw);
  else if (key == "lr_actor") t.lr_actor = real_value(s, key, raw);
  else if (key == "lr_critic") t.lr_critic = real_value(s, key, raw);
  else if (key == "batch_size") t.batch_size = count_value(s, key, raw);
  else if (key == "buffer_capacity") t.buffer_capacity = count_value(s, key, raw);
  else if (key == "seed") t.seed = count_value(s, key, raw);
  else if (key == "hidden") t.net.hidden = count_value(s, key, raw);
  else if (key == "layers") t.net.layers = count_value(s, key, raw);
  else if (key == "negative_slope") t.net.negative_slope = real_value(s, key, raw);
  else if (key == "activation") {
    if (raw == "elu") t.net.activation = nn::Activation::Elu;
    else if (raw == "identity") t.net.activation = nn::Activation::Identity;
    else fail(ErrorCode::Config, where(s, key) + ": expected elu or identity");
  } else if (key == "mode") {
    if (raw == "participatory") c.mode = TrainMode::Participatory;
    else if (raw == "topdown") c.mode = TrainMode::TopDown;
    else fail(ErrorCode::Config, where(s, key) + ": expected participatory or topdown");
  } else {
    fail(ErrorCode::Config, "unknown key " + where(s, key));
  }
}

void read_reward(RunConfig& c, const std::string& key, const std::string& raw) {
  RewardConfig& r = c.reward;
  if (key == "self") r.weights.self = real_value("reward", key, raw);
  else if (key == "local") r.weights.local = real_value("reward", key, raw);
  else if (key == "global") r.weights.global = real_value("reward", key, raw);
  else if (key == "equity") r.weights.equity = real_value("reward", key, raw);
  else if (key == "targets") {
    try {
      r.targets = LandUseSet::parse(raw);
    } catch (const Error& e) {
      fail(ErrorCode::Config, where("reward", key) + ": " + e.what());
    }
  } else if (key == "share_mode") {
    if (raw == "area") r.share_mode = ShareMode::Area;
    else if (raw == "count") r.share_mode = ShareMode::Count;
    else fail(ErrorCode::Config, where("reward", key) + ": expected area or count");
  } else {
    fail(ErrorCode::Config, "unknown key " + where("reward", key));
  }
}

void read_agents(RunConfig& c, const std::string& key, const std::string& raw) {
  for (AgentRole role : kAllRoles) {
    const std::string name(role_name(role));
    if (key == name) {
      c.agent_counts[ordinal(role)] = static_cast<int>(int_value("agents", key, raw));
      return;
    }
    if (key == name + "_home") {
      if (!is_resident(role)) fail(ErrorCode::Config, where("agents", key) + ": only residents have homes");
      std::vector<ParcelId> ids;
      for (const auto& item : list_items(raw)) ids.push_back(int_value("agents", key, item));
      c.homes[role] = std::move(ids);
      return;
    }
    if (key == name + "_radius_m") {
      c.role_radius_m[role] = real_value("agents", key, raw);
      return;
    }
  }
  fail(ErrorCode::Config, "unknown key " + where("agents", key));
}

void read_compare(RunConfig& c, const std::string& key, const std::string& raw) {
  if (key == "methods") c.compare.methods = parse_method_list(raw);
  else if (key == "seeds") {
    c.compare.seeds.clear();
    for (const auto& item : list_items(raw)) c.compare.seeds.push_back(count_value("compare", key, item));
  } else if (key == "marl_checkpoint") c.compare.marl_checkpoint = raw;
  else if (key == "dtp_checkpoint") c.compare.dtp_checkpoint = raw;
  else fail(ErrorCode::Config, "unknown key " + where("compare", key));
}

void read_synth(RunConfig& c, const std::string& key, const std::string& raw) {
  SyntheticSpec& s = c.synth;
  if (key == "width") s.width = static_cast<int>(int_value("synth", key, raw));
  else if (key == "height") s.height = static_cast<int>(int_value("synth", key, raw));
  else if (key == "cell_m") s.cell_m = real_value("synth", key, raw);
  else if (key == "area_min") s.area_min = real_value("synth", key, raw);
  else if (key == "area_max") s.area_max = real_value("synth", key, raw);
  else if (key == "readjustable_fraction") s.readjustable_fraction = real_value("synth", key, raw);
  else if (key == "seed") s.seed = count_value("synth", key, raw);
  else if (key == "mix") {
    // r:0.35,o:0.3,...; unlisted uses get weight 0.
    s.mix.fill(0.0);
    for (const auto& item : list_items(raw)) {
      const auto colon = item.find(':');
      const auto use = colon == std::string::npos ? std::nullopt : parse_land_use(text::trim(item.substr(0, colon)));
      if (!use) fail(ErrorCode::Config, where("synth", key) + ": expected use:weight pairs, got '" + item + "'");
      s.mix[ordinal(*use)] = real_value("synth", key, std::string(text::trim(item.substr(colon + 1))));
    }
  } else {
    fail(ErrorCode::Config, "unknown key " + where("synth", key));
  }
}

}  // namespace

std::vector<Method> parse_method_list(std::string_view text) {
  std::vector<Method> methods;
  for (const auto& item : list_items(text)) {
    const auto m = parse_method(item);
    if (!m) fail(ErrorCode::Config, "unknown method '" + item + "' (expected RTP, RPP, GTP, GPP, DTP or MARL)");
    if (std::find(methods.begin(), methods.end(), *m) == methods.end()) methods.push_back(*m);
  }
  if (methods.empty()) fail(ErrorCode::Config, "method list is empty");
  return methods;
}

void RunConfig::validate() const {
  if (k < 1) fail(ErrorCode::Config, "[graph] k must be >= 1");
  if (!(radius_m > 0.0)) fail(ErrorCode::Config, "[graph] radius_m must be positive");
  train.validate();
  for (double w : {reward.weights.self, reward.weights.local, reward.weights.global, reward.weights.equity}) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorCode::Config, "[reward] weights must be finite and >= 0");
  }
  int total = 0;
  for (int n : agent_counts) {
    if (n < 0) fail(ErrorCode::Config, "[agents] counts must be >= 0");
    total += n;
  }
  if (total == 0) fail(ErrorCode::Config, "[agents] roster is empty");
  for (const auto& [role, r] : role_radius_m) {
    if (!(r > 0.0)) fail(ErrorCode::Config, "[agents] " + std::string(role_name(role)) + "_radius_m must be positive");
  }
  if (compare.seeds.empty()) fail(ErrorCode::Config, "[compare] seeds must not be empty");
  try {
    synth.validate();
  } catch (const Error& e) {
    fail(ErrorCode::Config, std::string("[synth] ") + e.what());
  }
}

std::vector<RosterEntry> RunConfig::roster() const {
  std::vector<RosterEntry> out;
  for (AgentRole role : kAllRoles) {
    RosterEntry e;
    e.role = role;
    e.count = agent_counts[ordinal(role)];
    if (auto it = homes.find(role); it != homes.end()) e.homes = it->second;
    auto r = role_radius_m.find(role);
    e.radius_m = r != role_radius_m.end() ? r->second : radius_m;
    out.push_back(std::move(e));
  }
  return out;
}

std::string RunConfig::to_ini() const {
  using text::format_real;
  std::ostringstream o;
  o << "[data]\n";
  o << "parcels = " << data.parcels << "\nbundle = " << data.bundle << "\nout = " << data.out
    << "\ncheckpoint = " << data.checkpoint << "\n\n";
  o << "[graph]\nk = " << k << "\nradius_m = " << format_real(radius_m) << "\n\n";
  o << "[train]\n";
  o << "mode = " << (mode == TrainMode::TopDown ? "topdown" : "participatory") << "\n";
  o << "epochs = " << train.epochs << "\nepisodes_per_epoch = " << train.episodes_per_epoch << "\n";
  o << "gamma = " << format_real(train.gamma) << "\nlr_actor = " << format_real(train.lr_actor)
    << "\nlr_critic = " << format_real(train.lr_critic) << "\n";
  o << "batch_size = " << train.batch_size << "\nbuffer_capacity = " << train.buffer_capacity << "\n";
  o << "seed = " << train.seed << "\nhidden = " << train.net.hidden << "\nlayers = " << train.net.layers << "\n";
  o << "negative_slope = " << format_real(train.net.negative_slope) << "\n";
  o << "activation = " << (train.net.activation == nn::Activation::Identity ? "identity" : "elu") << "\n\n";
  o << "[reward]\n";
  o << "self = " << format_real(reward.weights.self) << "\nlocal = " << format_real(reward.weights.local)
    << "\nglobal = " << format_real(reward.weights.global) << "\nequity = " << format_real(reward.weights.equity)
    << "\n";
  o << "targets = " << reward.targets.to_string() << "\n";
  o << "share_mode = " << (reward.share_mode == ShareMode::Count ? "count" : "area") << "\n\n";
  o << "[agents]\n";
  for (AgentRole role : kAllRoles) {
    const std::string name(role_name(role));
    o << name << " = " << agent_counts[ordinal(role)] << "\n";
    if (auto it = homes.find(role); it != homes.end()) {
      std::vector<std::string> ids;
      for (ParcelId id : it->second) ids.push_back(std::to_string(id));
      o << name << "_home = " << join(ids) << "\n";
    }
    if (auto it = role_radius_m.find(role); it != role_radius_m.end()) {
      o << name << "_radius_m = " << format_real(it->second) << "\n";
    }
  }
  o << "\n[compare]\n";
  std::vector<std::string> names, seeds;
  for (Method m : compare.methods) names.emplace_back(method_name(m));
  for (auto s : compare.seeds) seeds.push_back(std::to_string(s));
  o << "methods = " << join(names) << "\nseeds = " << join(seeds) << "\n";
  o << "marl_checkpoint = " << compare.marl_checkpoint << "\ndtp_checkpoint = " << compare.dtp_checkpoint << "\n\n";
  o << "[synth]\n";
  o << "width = " << synth.width << "\nheight = " << synth.height << "\ncell_m = " << format_real(synth.cell_m)
    << "\n";
  o << "area_min = " << format_real(synth.area_min) << "\narea_max = " << format_real(synth.area_max) << "\n";
  std::vector<std::string> mix;
  for (LandUse u : kAllLandUses) mix.push_back(std::string(1, land_use_code(u)) + ":" + format_real(synth.mix[ordinal(u)]));
  o << "mix = " << join(mix) << "\n";
  o << "readjustable_fraction = " << format_real(synth.readjustable_fraction) << "\nseed = " << synth.seed << "\n";
  return o.str();
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json agents = nlohmann::json::object();
  for (const RosterEntry& e : roster()) {
    agents[std::string(role_name(e.role))] = {{"count", e.count}, {"homes", e.homes}, {"radius_m", e.radius_m}};
  }
  std::vector<std::string> names;
  for (Method m : compare.methods) names.emplace_back(method_name(m));
  return {
      {"data", {{"parcels", data.parcels}, {"bundle", data.bundle}, {"out", data.out}, {"checkpoint", data.checkpoint}}},
      {"graph", {{"k", k}, {"radius_m", radius_m}}},
      {"train", train.to_json()},
      {"mode", mode == TrainMode::TopDown ? "topdown" : "participatory"},
      {"reward",
       {{"self", reward.weights.self},
        {"local", reward.weights.local},
        {"global", reward.weights.global},
        {"equity", reward.weights.equity},
        {"targets", reward.targets.to_string()},
        {"share_mode", reward.share_mode == ShareMode::Count ? "count" : "area"}}},
      {"agents", agents},
      {"compare",
       {{"methods", names},
        {"seeds", compare.seeds},
        {"marl_checkpoint", compare.marl_checkpoint},
        {"dtp_checkpoint", compare.dtp_checkpoint}}},
  };
}

RunConfig parse_config(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::Parse, "config line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) fail(ErrorCode::Config, "key '" + section + "' outside any section");
    for (const auto& [key, node] : body) {
      const std::string raw(text::trim(node.data()));
      if (section == "data") read_data(c, key, raw);
      else if (section == "graph") read_graph(c, key, raw);
      else if (section == "train") read_train(c, key, raw);
      else if (section == "reward") read_reward(c, key, raw);
      else if (section == "agents") read_agents(c, key, raw);
      else if (section == "compare") read_compare(c, key, raw);
      else if (section == "synth") read_synth(c, key, raw);
      else fail(ErrorCode::Config, "unknown section [" + section + "]");
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) { return parse_config(text::read_file(path)); }

void apply_overrides(RunConfig& c, const ConfigOverrides& o) {
  if (o.seed) {
    c.train.seed = *o.seed;
    c.synth.seed = *o.seed;
    for (std::size_t i = 0; i < c.compare.seeds.size(); ++i) c.compare.seeds[i] = *o.seed + i;
  }
  if (o.out) c.data.out = *o.out;
  if (o.methods) c.compare.methods = *o.methods;
  if (o.k) c.k = *o.k;
  if (o.radius_m) c.radius_m = *o.radius_m;
  if (o.epochs) c.train.epochs = *o.epochs;
  c.validate();
}

}  // namespace parcelplan
