#pragma once

#include <string>

#include "parcelplan/config.hpp"

namespace parcelplan {

// Each command writes its artifacts under config.data.out and returns the
// text printed on stdout. Failures throw parcelplan::Error.

// data.parcels -> out/parcels.csv + out/adjacency.csv (the graph bundle).
std::string cmd_ingest(const RunConfig& config);

// [synth] -> out/parcels.csv in the ingestion schema.
std::string cmd_synth(const RunConfig& config);

// data.bundle -> out/checkpoint.json + .bin, out/curves.csv, out/manifest.json,
// out/run.ini (re-running with --config out/run.ini repeats the run).
std::string cmd_train(const RunConfig& config);

// data.bundle + checkpoints -> out/comparison.csv, out/comparison_per_seed.csv,
// out/comparison.txt, out/plans/<METHOD>_seed<S>.csv and .geojson.
std::string cmd_compare(const RunConfig& config);

// data.bundle + data.checkpoint: one argmax rollout at train.seed ->
// out/trace.jsonl, out/plan.csv, out/plan.geojson, out/metrics.json.
std::string cmd_evaluate(const RunConfig& config);

SpatialGraph load_bundle(const std::string& dir);

}  // namespace parcelplan
