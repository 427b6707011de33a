#include "parcelplan/commands.hpp"

#include <filesystem>
#include <sstream>

#include <spdlog/spdlog.h>

#include "parcelplan/error.hpp"
#include "parcelplan/nn/checkpoint.hpp"
#include "parcelplan/text.hpp"

namespace parcelplan {

namespace fs = std::filesystem;

namespace {

std::string out_path(const RunConfig& c, const std::string& name) { return (fs::path(c.data.out) / name).string(); }

void ensure_out_dir(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.data.out, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory '" + c.data.out + "': " + ec.message());
}

// Prefixes errors raised while handling `path` with the path.
template <class F>
auto with_file_context(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    fail(e.code(), path + ": " + e.what());
  }
}

std::string require_path(const std::string& value, const char* key) {
  if (value.empty()) fail(ErrorCode::Config, std::string("set ") + key + " in the config file");
  return value;
}

std::vector<Agent> agents_for(const RunConfig& c, const SpatialGraph& graph, TrainMode mode) {
  return mode == TrainMode::TopDown ? top_down_agents() : build_agents(graph, c.roster());
}

const char* mode_name(TrainMode mode) { return mode == TrainMode::TopDown ? "topdown" : "participatory"; }

TrainMode checkpoint_mode(const nn::Checkpoint& cp) {
  const std::string mode = cp.metadata.value("mode", "participatory");
  return mode == "topdown" ? TrainMode::TopDown : TrainMode::Participatory;
}

std::string metrics_line(const MetricsReport& r) {
  return "global_reward " + text::format_real(r.global_reward) + ", equity_reward " +
         text::format_real(r.equity_reward) + ", sustainability " + text::format_real(r.sustainability) +
         ", diversity " + text::format_real(r.diversity);
}

nlohmann::json metrics_json(const MetricsReport& r) {
  return {{"global_reward", r.global_reward},
          {"equity_reward", r.equity_reward},
          {"equity_reward_raw", r.equity_reward_raw},
          {"sustainability", r.sustainability},
          {"diversity", r.diversity},
          {"global_delta", r.global_delta},
          {"equity_delta", r.equity_delta},
          {"sustainability_delta", r.sustainability_delta},
          {"diversity_delta", r.diversity_delta}};
}

}  // namespace

SpatialGraph load_bundle(const std::string& dir) {
  const std::string parcels_path = (fs::path(dir) / "parcels.csv").string();
  const std::string adjacency_path = (fs::path(dir) / "adjacency.csv").string();
  auto parcels = with_file_context(parcels_path, [&] { return parse_parcels(text::read_file(parcels_path)); });
  select_readjustment_parcels(parcels);
  return with_file_context(adjacency_path, [&] {
    return parse_adjacency_csv(text::read_file(adjacency_path), std::move(parcels));
  });
}

std::string cmd_ingest(const RunConfig& c) {
  const std::string path = require_path(c.data.parcels, "[data] parcels");
  auto parcels = with_file_context(path, [&] { return parse_parcels(text::read_file(path)); });
  select_readjustment_parcels(parcels);
  const SpatialGraph graph = build_knn_graph(std::move(parcels), c.k);
  ensure_out_dir(c);
  text::write_file(out_path(c, "parcels.csv"), format_parcels_csv(graph.parcels()));
  text::write_file(out_path(c, "adjacency.csv"), format_adjacency_csv(graph));
  const GraphSummary s = summarize(graph);
  spdlog::info("ingested {} parcels into {}", s.nodes, c.data.out);
  std::ostringstream o;
  o << s.nodes << " nodes, " << s.edges << " edges, degree " << s.min_degree << ".." << s.max_degree << ", "
    << s.readjustable << " readjustable parcel" << (s.readjustable == 1 ? "" : "s") << "\n";
  o << "mean edge distance " << text::format_real(s.mean_distance) << " m, mean kernel weight "
    << text::format_real(s.mean_kernel_weight) << "\n";
  return o.str();
}

std::string cmd_synth(const RunConfig& c) {
  const auto parcels = synthesize_parcels(c.synth);
  ensure_out_dir(c);
  text::write_file(out_path(c, "parcels.csv"), format_parcels_csv(parcels));
  std::size_t flagged = 0;
  for (const Parcel& p : parcels) flagged += (p.vacant || p.obsolete || p.open_space) ? 1 : 0;
  return std::to_string(parcels.size()) + " parcels (" + std::to_string(flagged) + " readjustable) written to " +
         out_path(c, "parcels.csv") + "\n";
}

std::string cmd_train(const RunConfig& c) {
  const SpatialGraph graph = load_bundle(require_path(c.data.bundle, "[data] bundle"));
  const Environment env(graph, agents_for(c, graph, c.mode), c.reward);
  spdlog::info("training {} agents ({}) for {} episodes", env.agents().size(), mode_name(c.mode),
               c.train.epochs * c.train.episodes_per_epoch);
  TrainResult result = train(env, c.train);

  const std::string ini = c.to_ini();
  const std::string config_hash = nn::fnv1a_hex(ini);
  nlohmann::json meta = {{"mode", mode_name(c.mode)}, {"config_hash", config_hash}, {"train", c.train.to_json()}};

  ensure_out_dir(c);
  const std::string checkpoint_path = out_path(c, "checkpoint.json");
  nn::write_checkpoint(checkpoint_path, result.policies.to_checkpoint(meta));
  const std::string curves = format_curves_csv(result.curve, env.agents());
  text::write_file(out_path(c, "curves.csv"), curves);
  text::write_file(out_path(c, "run.ini"), ini);

  nlohmann::json manifest = {
      {"command", "train"},
      {"seed", c.train.seed},
      {"config_hash", config_hash},
      {"config", c.to_json()},
      {"config_ini", ini},
      {"updates", result.updates},
      {"files",
       {{"checkpoint.json", nn::fnv1a_hex(text::read_file(checkpoint_path))},
        {"checkpoint.bin", nn::fnv1a_hex(text::read_file(out_path(c, "checkpoint.bin")))},
        {"curves.csv", nn::fnv1a_hex(curves)}}},
  };
  text::write_file(out_path(c, "manifest.json"), manifest.dump(2) + "\n");

  std::ostringstream o;
  o << result.curve.size() << " episodes, " << result.updates << " updates\n";
  if (!result.curve.empty()) {
    const EpisodeRecord& last = result.curve.back();
    o << "final episode: mean reward " << text::format_real(last.mean_reward) << ", global "
      << text::format_real(last.global_reward) << ", equity " << text::format_real(last.equity_reward) << "\n";
  }
  o << "checkpoint " << checkpoint_path << "\n";
  return o.str();
}

std::string cmd_compare(const RunConfig& c) {
  const SpatialGraph graph = load_bundle(require_path(c.data.bundle, "[data] bundle"));
  const auto agents = build_agents(graph, c.roster());

  auto wants = [&](Method m) {
    return std::find(c.compare.methods.begin(), c.compare.methods.end(), m) != c.compare.methods.end();
  };
  std::optional<PolicySet> marl, dtp;
  auto load = [&](Method m, const std::string& path, const char* key, TrainMode mode) {
    if (path.empty()) {
      fail(ErrorCode::MissingModel, std::string(method_name(m)) + " needs a trained checkpoint: set " + key +
                                        " (train with [train] mode = " + mode_name(mode) + ")");
    }
    const nn::Checkpoint cp = with_file_context(path, [&] { return nn::read_checkpoint(path); });
    if (checkpoint_mode(cp) != mode) {
      fail(ErrorCode::Config, std::string(method_name(m)) + " expects a " + mode_name(mode) + " checkpoint, got " +
                                  mode_name(checkpoint_mode(cp)) + " at " + path);
    }
    return PolicySet::from_checkpoint(cp);
  };
  if (wants(Method::MARL)) marl = load(Method::MARL, c.compare.marl_checkpoint, "[compare] marl_checkpoint", TrainMode::Participatory);
  if (wants(Method::DTP)) dtp = load(Method::DTP, c.compare.dtp_checkpoint, "[compare] dtp_checkpoint", TrainMode::TopDown);

  TrainedModels models{marl ? &*marl : nullptr, dtp ? &*dtp : nullptr};
  const Comparison cmp = compare_methods(graph, agents, c.compare.methods, c.compare.seeds, c.reward, models);

  ensure_out_dir(c);
  fs::create_directories(fs::path(c.data.out) / "plans");
  const std::string table = format_comparison_text(cmp.summary);
  text::write_file(out_path(c, "comparison.csv"), format_comparison_csv(cmp.summary));
  text::write_file(out_path(c, "comparison_per_seed.csv"), format_comparison_csv(cmp.per_seed));
  text::write_file(out_path(c, "comparison.txt"), table);
  for (const PlanOutcome& p : cmp.outcomes) {
    const std::string stem = "plans/" + std::string(method_name(p.method)) + "_seed" + std::to_string(p.seed);
    text::write_file(out_path(c, stem + ".csv"), format_plan_csv(p));
    text::write_file(out_path(c, stem + ".geojson"), plan_geojson(graph, p.final_graph));
  }
  return table;
}

std::string cmd_evaluate(const RunConfig& c) {
  const SpatialGraph graph = load_bundle(require_path(c.data.bundle, "[data] bundle"));
  const std::string path = require_path(c.data.checkpoint, "[data] checkpoint");
  const nn::Checkpoint cp = with_file_context(path, [&] { return nn::read_checkpoint(path); });
  const TrainMode mode = checkpoint_mode(cp);
  PolicySet policies = PolicySet::from_checkpoint(cp);
  const Environment env(graph, agents_for(c, graph, mode), c.reward);

  ensure_out_dir(c);
  std::ostringstream trace;
  EpisodeState final_state = rollout_policies(env, policies, c.train.seed, &trace);
  text::write_file(out_path(c, "trace.jsonl"), trace.str());

  PlanOutcome outcome;
  outcome.method = mode == TrainMode::TopDown ? Method::DTP : Method::MARL;
  outcome.seed = c.train.seed;
  for (const Parcel& p : final_state.graph.parcels()) {
    if (p.assigned) outcome.assignment.emplace(p.id, p.land_use);
  }
  outcome.final_graph = std::move(final_state.graph);
  outcome.ledger = final_state.ledger;
  const MetricsReport report = evaluate_plan(graph, outcome, c.reward);

  text::write_file(out_path(c, "plan.csv"), format_plan_csv(outcome));
  text::write_file(out_path(c, "plan.geojson"), plan_geojson(graph, outcome.final_graph));
  nlohmann::json metrics = metrics_json(report);
  metrics["method"] = method_name(outcome.method);
  metrics["seed"] = outcome.seed;
  text::write_file(out_path(c, "metrics.json"), metrics.dump(2) + "\n");
  return std::string(method_name(outcome.method)) + " seed " + std::to_string(outcome.seed) + ": " +
         metrics_line(report) + "\n";
}

}  // namespace parcelplan
