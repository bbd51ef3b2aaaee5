#include "rooftop/deploy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <omp.h>

#include "json.hpp"
#include "rooftop/classifier.hpp"

namespace rooftop {

std::string format_number(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("cannot format a non-finite number");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace {

void fill_record(PredictionRecord& r, const ProviderConfig& c, std::vector<double> probs, const std::string& model_id) {
  r.predicted = c.classes[argmax_first(probs)];
  r.probs = std::move(probs);
  r.model_id = model_id;
}

void predict_internal(const ProviderConfig& c, const TrainedModel& model, const std::vector<PredictInput>& inputs,
                      std::size_t begin, std::size_t end, std::vector<PredictionRecord>& out) {
  Matrix X(end - begin, model.features);
  std::vector<char> usable(end - begin, 0);
  for (std::size_t i = begin; i < end; ++i) {
    const auto& v = inputs[i].vector;
    if (v.size() != model.features) {
      out[i].error = "feature dimension " + std::to_string(v.size()) + " does not match model dimension " +
                     std::to_string(model.features);
      continue;
    }
    usable[i - begin] = 1;
    std::copy(v.begin(), v.end(), X.row(i - begin).begin());
  }
  const Matrix P = predict_proba(model, X);
  const std::string model_id = std::filesystem::path(c.location).filename().string();
  for (std::size_t i = begin; i < end; ++i) {
    if (!usable[i - begin]) continue;
    const auto row = P.row(i - begin);
    fill_record(out[i], c, {row.begin(), row.end()}, model_id);
  }
}

}  // namespace

std::vector<PredictionRecord> batch_predict(const ProviderConfig& config, const std::vector<PredictInput>& inputs) {
  config.validate();
  std::vector<PredictionRecord> out(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    out[i].building_id = inputs[i].id;
    out[i].task = config.task;
  }
  TrainedModel model;
  if (config.kind == ProviderKind::internal_model) {
    model = load_model(config.location);
    if (model.classes != config.classes) throw ProviderError("model classes do not match the task's class list");
  }
  const std::size_t batches = (inputs.size() + config.batch_size - 1) / config.batch_size;
  const int workers = config.kind == ProviderKind::internal_model ? 0 : static_cast<int>(config.max_connections);
  const std::string model_id = config.location;

#pragma omp parallel for schedule(dynamic) num_threads(workers > 0 ? workers : omp_get_max_threads())
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t begin = b * config.batch_size;
    const std::size_t end = std::min(inputs.size(), begin + config.batch_size);
    try {
      if (config.kind == ProviderKind::internal_model) {
        predict_internal(config, model, inputs, begin, end, out);
        continue;
      }
      const std::vector<PredictInput> batch(inputs.begin() + static_cast<std::ptrdiff_t>(begin),
                                            inputs.begin() + static_cast<std::ptrdiff_t>(end));
      ProviderReply reply = external_provider_call(config, batch);
      for (std::size_t i = begin; i < end; ++i) {
        if (auto it = reply.probs.find(inputs[i].id); it != reply.probs.end()) {
          fill_record(out[i], config, std::move(it->second), model_id);
        } else {
          out[i].error = reply.failures.count(inputs[i].id) ? reply.failures[inputs[i].id] : "no answer";
        }
      }
    } catch (const std::exception& e) {
      for (std::size_t i = begin; i < end; ++i) {
        if (out[i].probs.empty()) out[i].error = e.what();
      }
    }
  }
  return out;
}

void write_predictions(const std::vector<PredictionRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["building_id"] = r.building_id;
    j["task"] = to_string(r.task);
    if (r.ok()) {
      j["predicted"] = r.predicted;
      j["probs"] = r.probs;
      j["model_id"] = r.model_id;
    } else {
      j["error"] = r.error;
    }
    out << j.dump() << '\n';
  }
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      PredictionRecord r;
      r.building_id = j.at("building_id").get<std::string>();
      r.task = task_from(j.at("task").get<std::string>());
      if (j.contains("error")) {
        r.error = j["error"].get<std::string>();
      } else {
        r.predicted = j.at("predicted").get<std::string>();
        r.probs = j.at("probs").get<std::vector<double>>();
        r.model_id = j.value("model_id", "");
        if (r.probs.size() != task_classes(r.task).size()) throw std::runtime_error("wrong probability count");
      }
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

namespace {

std::string quoted(const std::string& s) { return nlohmann::json(s).dump(); }

void append_ring(std::string& out, const Ring& ring) {
  out += '[';
  for (std::size_t i = 0; i < ring.size(); ++i) {
    if (i) out += ',';
    out += '[' + format_number(ring[i].x) + ',' + format_number(ring[i].y) + ']';
  }
  out += ']';
}

}  // namespace

std::string geojson_export(const std::vector<PredictionRecord>& records,
                           const std::vector<BuildingFootprint>& footprints) {
  std::map<std::string, std::size_t> fp_index;
  for (std::size_t i = 0; i < footprints.size(); ++i) fp_index.emplace(footprints[i].id, i);
  // last successful record wins per (building, task)
  std::vector<std::map<std::string, const PredictionRecord*>> by_task(2);
  for (const auto& r : records) {
    if (!fp_index.count(r.building_id)) throw std::invalid_argument("no footprint for building " + r.building_id);
    if (r.ok()) by_task[static_cast<std::size_t>(r.task)][r.building_id] = &r;
  }
  const Task tasks[2] = {Task::roof_pitch, Task::roof_material};

  std::string out = "{\"type\":\"FeatureCollection\",\"features\":[";
  for (std::size_t f = 0; f < footprints.size(); ++f) {
    const BuildingFootprint& fp = footprints[f];
    if (f) out += ',';
    out += "\n{\"type\":\"Feature\",\"geometry\":{\"type\":\"Polygon\",\"coordinates\":[";
    for (std::size_t r = 0; r < fp.rings.size(); ++r) {
      if (r) out += ',';
      append_ring(out, fp.rings[r]);
    }
    out += "]},\"properties\":{\"building_id\":" + quoted(fp.id);
    for (Task t : tasks) {
      const auto& m = by_task[static_cast<std::size_t>(t)];
      const auto it = m.find(fp.id);
      const std::string name = to_string(t);
      if (it == m.end()) {
        out += ",\"" + name + "\":null,\"" + name + "_prob\":null";
      } else {
        const auto& rec = *it->second;
        out += ",\"" + name + "\":" + quoted(rec.predicted) + ",\"" + name +
               "_prob\":" + format_number(*std::max_element(rec.probs.begin(), rec.probs.end()));
      }
    }
    for (Task t : tasks) {
      const auto& m = by_task[static_cast<std::size_t>(t)];
      const auto it = m.find(fp.id);
      const auto& cls = task_classes(t);
      for (std::size_t c = 0; c < cls.size(); ++c) {
        out += ",\"prob_" + cls[c] + "\":" + (it == m.end() ? "null" : format_number(it->second->probs[c]));
      }
    }
    out += "}}";
  }
  out += "\n]}\n";
  return out;
}

void export_geojson(const std::vector<PredictionRecord>& records, const std::vector<BuildingFootprint>& footprints,
                    const std::filesystem::path& path) {
  const std::string text = geojson_export(records, footprints);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

AggregateStats aggregate_stats(const std::vector<PredictionRecord>& records, Task task) {
  AggregateStats s;
  s.task = task;
  const auto& cls = task_classes(task);
  std::vector<std::size_t> counts(cls.size(), 0);
  for (const auto& r : records) {
    if (r.task != task || !r.ok()) continue;
    const auto it = std::find(cls.begin(), cls.end(), r.predicted);
    if (it == cls.end()) throw std::invalid_argument("unknown class '" + r.predicted + "' for " + to_string(task));
    ++counts[static_cast<std::size_t>(it - cls.begin())];
    ++s.total;
  }
  if (s.total == 0) throw std::invalid_argument("no predictions for " + to_string(task));
  for (std::size_t c = 0; c < cls.size(); ++c) {
    const double frac = static_cast<double>(counts[c]) / static_cast<double>(s.total);
    s.classes.push_back({cls[c], counts[c], frac, std::lround(frac * 100.0)});
  }
  return s;
}

std::string stats_json(const AggregateStats& s) {
  nlohmann::ordered_json j;
  j["task"] = to_string(s.task);
  j["total"] = s.total;
  auto& arr = j["classes"] = nlohmann::ordered_json::array();
  for (const auto& c : s.classes) {
    arr.push_back({{"class", c.label}, {"count", c.count}, {"percent", c.percent}, {"fraction", c.fraction}});
  }
  return j.dump(2);
}

std::string stats_table(const AggregateStats& s) {
  std::size_t w = 5;
  for (const auto& c : s.classes) w = std::max(w, c.label.size());
  std::string out = to_string(s.task) + " (" + std::to_string(s.total) + " buildings)\n";
  char line[160];
  for (const auto& c : s.classes) {
    std::snprintf(line, sizeof line, "  %-*s %9zu %4ld%%\n", static_cast<int>(w), c.label.c_str(), c.count, c.percent);
    out += line;
  }
  return out;
}

}  // namespace rooftop
