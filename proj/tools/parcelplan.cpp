#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "parcelplan/commands.hpp"
#include "parcelplan/error.hpp"

using namespace parcelplan;

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("parcelplan");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("PARCELPLAN_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept real names.
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Consensus-based multi-agent land-use readjustment planner"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> methods;
  std::optional<int> k;
  std::optional<double> radius_m;
  std::optional<int> epochs;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI run configuration");
    sub->add_option("--seed", seed, "seed for training, synthesis and the first comparison seed");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--k", k, "neighbors per parcel in the KNN graph");
    sub->add_option("--radius-m", radius_m, "resident observation radius in meters");
    sub->add_option("--epochs", epochs, "training epochs");
  };

  CLI::App* ingest = app.add_subcommand("ingest", "parcel CSV -> graph bundle");
  CLI::App* synth = app.add_subcommand("synth", "write a seeded synthetic parcel CSV");
  CLI::App* train_cmd = app.add_subcommand("train", "train policies on a graph bundle");
  CLI::App* compare = app.add_subcommand("compare", "run baselines and trained methods, write tables and plans");
  CLI::App* evaluate = app.add_subcommand("evaluate", "roll out a checkpoint once and report its metrics");
  for (CLI::App* sub : {ingest, synth, train_cmd, compare, evaluate}) add_common(sub);
  compare->add_option("--methods", methods, "comma-separated subset of RTP,RPP,GTP,GPP,DTP,MARL");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "E_USAGE: " << e.what() << "\n";
    return 2;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
    ConfigOverrides o;
    o.seed = seed;
    o.out = out;
    if (methods) o.methods = parse_method_list(*methods);
    o.k = k;
    o.radius_m = radius_m;
    o.epochs = epochs;
    apply_overrides(config, o);

    std::string text;
    if (*ingest) text = cmd_ingest(config);
    else if (*synth) text = cmd_synth(config);
    else if (*train_cmd) text = cmd_train(config);
    else if (*compare) text = cmd_compare(config);
    else text = cmd_evaluate(config);
    std::cout << text;
    return 0;
  } catch (const Error& e) {
    std::cerr << error_code_name(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "E_INTERNAL: " << e.what() << "\n";
    return 1;
  }
}
