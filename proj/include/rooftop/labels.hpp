#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace rooftop {

enum class Task { roof_pitch, roof_material };
enum class Origin { surveyed, mined };

std::string to_string(Task t);
std::string to_string(Origin o);
Task task_from(const std::string& s);
Origin origin_from(const std::string& s);

/// Canonical class order per task.
const std::vector<std::string>& task_classes(Task t);
bool valid_label(Task t, const std::string& label);

class LabelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LabeledSample {
  std::string building_id;
  Task task = Task::roof_pitch;
  std::string label;
  std::string group_id;
  Origin origin = Origin::surveyed;
  std::string split;  // optional: "train", "test" or a fold index

  void validate() const;
};

/// CSV with header building_id,task,label,group_id,origin,split.
std::vector<LabeledSample> read_labels(const std::filesystem::path& path);
void write_labels(const std::vector<LabeledSample>& samples, const std::filesystem::path& path);
std::string labels_to_csv(const std::vector<LabeledSample>& samples);

std::vector<LabeledSample> samples_for(const std::vector<LabeledSample>& samples, Task t);

}  // namespace rooftop
