#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rooftop/footprint.hpp"
#include "rooftop/labels.hpp"
#include "rooftop/provider.hpp"

namespace rooftop {

struct PredictionRecord {
  std::string building_id;
  Task task = Task::roof_pitch;
  std::string predicted;       // empty when failed
  std::vector<double> probs;   // over task_classes(task)
  std::string model_id;
  std::string error;           // set when the provider failed for this id

  bool ok() const { return error.empty(); }
};

/// One record per input, in input order. Inputs are cut into batches of
/// config.batch_size and processed concurrently (at most max_connections at a
/// time for external providers). A batch-level failure marks each of its ids
/// as failed rather than aborting the run.
std::vector<PredictionRecord> batch_predict(const ProviderConfig& config, const std::vector<PredictInput>& inputs);

/// NDJSON, one record per line.
void write_predictions(const std::vector<PredictionRecord>& records, const std::filesystem::path& path);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

/// FeatureCollection over all footprints. Properties, in order: building_id,
/// roof_pitch, roof_pitch_prob, roof_material, roof_material_prob, then
/// prob_<class> for every pitch and material class (null when that task has no
/// successful record). Numbers use 9 significant digits, so identical input
/// gives byte-identical output.
std::string geojson_export(const std::vector<PredictionRecord>& records,
                           const std::vector<BuildingFootprint>& footprints);
void export_geojson(const std::vector<PredictionRecord>& records, const std::vector<BuildingFootprint>& footprints,
                    const std::filesystem::path& path);

struct ClassShare {
  std::string label;
  std::size_t count = 0;
  double fraction = 0.0;
  long percent = 0;  // rounded for display
};

struct AggregateStats {
  Task task = Task::roof_pitch;
  std::size_t total = 0;
  std::vector<ClassShare> classes;  // canonical class order
};

/// Counts successful records of `task` by predicted class.
AggregateStats aggregate_stats(const std::vector<PredictionRecord>& records, Task task);
std::string stats_json(const AggregateStats& s);
std::string stats_table(const AggregateStats& s);

/// "%.9g", with non-finite values rejected.
std::string format_number(double v);

}  // namespace rooftop
