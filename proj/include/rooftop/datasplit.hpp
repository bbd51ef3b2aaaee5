#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rooftop/labels.hpp"

namespace rooftop {

class SplitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Group-atomic assignment of samples to parts. A holdout split has two parts
/// (0 = train, 1 = test); a k-fold assignment has k parts (fold indices).
struct DatasetSplit {
  enum class Kind { holdout, kfold };
  static constexpr std::size_t kTrain = 0;
  static constexpr std::size_t kTest = 1;

  Kind kind = Kind::holdout;
  std::size_t parts = 2;
  std::size_t fold = 0;  // for holdout views of a k-fold assignment
  std::uint64_t seed = 0;
  std::map<std::string, std::size_t> assignment;  // building_id -> part
  std::vector<std::string> classes;               // sorted class names seen
  std::vector<std::vector<std::size_t>> counts;   // part x class sample counts
  std::vector<std::string> warnings;

  std::size_t part_of(const std::string& building_id) const;
  std::size_t part_size(std::size_t part) const;
  /// Indices into `samples` belonging to `part`, in input order.
  std::vector<std::size_t> indices(const std::vector<LabeledSample>& samples, std::size_t part) const;
  std::string part_name(std::size_t part) const;
};

/// Greedy stratified group shuffle split. Groups are shuffled by seed, then
/// taken largest first; each goes to the part whose class counts (and total
/// size) move closest to their targets, measured as squared deviation from
/// share * class total, normalized by the class total. Groups containing a
/// mined sample are pinned to train before the greedy pass. A refinement pass
/// then applies single-group moves and pairwise swaps that strictly lower the
/// same objective.
DatasetSplit stratified_group_shuffle_split(const std::vector<LabeledSample>& samples, double test_frac,
                                            std::uint64_t seed);

/// Same greedy objective over k equal shares; returns the k-part assignment.
DatasetSplit assign_group_kfold(const std::vector<LabeledSample>& samples, std::size_t k, std::uint64_t seed);

/// k holdout views (fold i as the validation part) of assign_group_kfold.
std::vector<DatasetSplit> stratified_group_kfold(const std::vector<LabeledSample>& samples, std::size_t k,
                                                 std::uint64_t seed);

/// Holdout view of a k-fold assignment with fold `fold` as test.
DatasetSplit fold_view(const DatasetSplit& kfold, std::size_t fold, const std::vector<LabeledSample>& samples);

struct ClassDeviation {
  std::size_t part;
  std::string label;
  double part_fraction;
  double global_fraction;
};

struct SplitReport {
  std::vector<std::string> leaking_groups;
  std::vector<std::string> misplaced_mined;
  std::vector<std::string> unassigned;
  std::vector<ClassDeviation> deviations;

  std::size_t violation_count() const { return leaking_groups.size() + misplaced_mined.size() + unassigned.size(); }
  double max_deviation() const;
};

SplitReport check_split(const DatasetSplit& split, const std::vector<LabeledSample>& samples);

/// Copies each sample's part name into its `split` column.
void annotate_split(std::vector<LabeledSample>& samples, const DatasetSplit& split);

}  // namespace rooftop
