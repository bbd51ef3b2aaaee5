#include "rooftop/labels.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace rooftop {
namespace fs = std::filesystem;

std::string to_string(Task t) { return t == Task::roof_pitch ? "roof_pitch" : "roof_material"; }
std::string to_string(Origin o) { return o == Origin::surveyed ? "surveyed" : "mined"; }

Task task_from(const std::string& s) {
  if (s == "roof_pitch") return Task::roof_pitch;
  if (s == "roof_material") return Task::roof_material;
  throw LabelError("unknown task '" + s + "'");
}

Origin origin_from(const std::string& s) {
  if (s.empty() || s == "surveyed") return Origin::surveyed;
  if (s == "mined") return Origin::mined;
  throw LabelError("unknown origin '" + s + "'");
}

const std::vector<std::string>& task_classes(Task t) {
  static const std::vector<std::string> pitch = {"gable", "hip", "flat", "no_roof"};
  static const std::vector<std::string> material = {"healthy_metal", "concrete_cement", "irregular_metal",
                                                    "incomplete"};
  return t == Task::roof_pitch ? pitch : material;
}

bool valid_label(Task t, const std::string& label) {
  const auto& classes = task_classes(t);
  return std::find(classes.begin(), classes.end(), label) != classes.end();
}

void LabeledSample::validate() const {
  if (building_id.empty()) throw LabelError("sample without building id");
  if (!valid_label(task, label)) {
    throw LabelError("label '" + label + "' is not a " + to_string(task) + " class (" + building_id + ")");
  }
  if (group_id.empty()) throw LabelError("sample " + building_id + " has no group id");
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::vector<LabeledSample> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LabelError("cannot open " + path.string());
  std::vector<LabeledSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (lineno == 1 && !cells.empty() && cells[0] == "building_id") continue;
    if (cells.size() < 4) throw LabelError(path.string() + ":" + std::to_string(lineno) + ": expected >= 4 columns");
    LabeledSample s;
    s.building_id = cells[0];
    s.task = task_from(cells[1]);
    s.label = cells[2];
    s.group_id = cells[3];
    s.origin = origin_from(cells.size() > 4 ? cells[4] : "");
    if (cells.size() > 5) s.split = cells[5];
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

std::string labels_to_csv(const std::vector<LabeledSample>& samples) {
  std::ostringstream os;
  os << "building_id,task,label,group_id,origin,split\n";
  for (const auto& s : samples) {
    os << s.building_id << ',' << to_string(s.task) << ',' << s.label << ',' << s.group_id << ','
       << to_string(s.origin) << ',' << s.split << '\n';
  }
  return os.str();
}

void write_labels(const std::vector<LabeledSample>& samples, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LabelError("cannot write " + path.string());
  out << labels_to_csv(samples);
}

std::vector<LabeledSample> samples_for(const std::vector<LabeledSample>& samples, Task t) {
  std::vector<LabeledSample> out;
  std::copy_if(samples.begin(), samples.end(), std::back_inserter(out), [t](const auto& s) { return s.task == t; });
  return out;
}

}  // namespace rooftop
