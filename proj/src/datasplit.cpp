#include "rooftop/datasplit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "rooftop/rng.hpp"

namespace rooftop {

std::size_t DatasetSplit::part_of(const std::string& building_id) const {
  auto it = assignment.find(building_id);
  if (it == assignment.end()) throw SplitError("building " + building_id + " is not in the split");
  return it->second;
}

std::size_t DatasetSplit::part_size(std::size_t part) const {
  return static_cast<std::size_t>(
      std::count_if(assignment.begin(), assignment.end(), [part](const auto& kv) { return kv.second == part; }));
}

std::vector<std::size_t> DatasetSplit::indices(const std::vector<LabeledSample>& samples, std::size_t part) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto it = assignment.find(samples[i].building_id);
    if (it != assignment.end() && it->second == part) out.push_back(i);
  }
  return out;
}

std::string DatasetSplit::part_name(std::size_t part) const {
  if (kind == Kind::kfold && parts != 2) return std::to_string(part);
  return part == kTrain ? "train" : "test";
}

namespace {

struct Group {
  std::string id;
  std::vector<std::size_t> class_counts;
  std::size_t size = 0;
  bool pinned_train = false;
};

struct Prepared {
  std::vector<std::string> classes;
  std::vector<Group> groups;  // sorted by id
  std::vector<std::size_t> class_totals;
  std::size_t total = 0;
  std::vector<std::string> warnings;
};

Prepared prepare(const std::vector<LabeledSample>& samples, bool pin_mined) {
  if (samples.empty()) throw SplitError("cannot split an empty sample set");
  Prepared p;
  std::set<std::string> classes, ids;
  for (const auto& s : samples) {
    if (s.group_id.empty()) throw SplitError("sample " + s.building_id + " has no group id");
    if (!ids.insert(s.building_id).second) {
      throw SplitError("building " + s.building_id + " appears twice; split one task at a time");
    }
    classes.insert(s.label);
  }
  p.classes.assign(classes.begin(), classes.end());
  auto class_index = [&](const std::string& label) {
    return static_cast<std::size_t>(std::lower_bound(p.classes.begin(), p.classes.end(), label) - p.classes.begin());
  };
  std::map<std::string, Group> groups;
  for (const auto& s : samples) {
    Group& g = groups[s.group_id];
    if (g.class_counts.empty()) {
      g.id = s.group_id;
      g.class_counts.assign(p.classes.size(), 0);
    }
    ++g.class_counts[class_index(s.label)];
    ++g.size;
    if (pin_mined && s.origin == Origin::mined) g.pinned_train = true;
  }
  p.class_totals.assign(p.classes.size(), 0);
  for (auto& [id, g] : groups) {
    for (std::size_t c = 0; c < p.classes.size(); ++c) p.class_totals[c] += g.class_counts[c];
    p.groups.push_back(std::move(g));
  }
  p.total = samples.size();
  for (std::size_t c = 0; c < p.classes.size(); ++c) {
    std::size_t holders = 0;
    std::string holder;
    for (const auto& g : p.groups) {
      if (g.class_counts[c] > 0) {
        ++holders;
        holder = g.id;
      }
    }
    if (holders == 1) {
      p.warnings.push_back("class '" + p.classes[c] + "' occurs only in group " + holder +
                           "; it cannot appear in every part");
    }
  }
  return p;
}

/// Returns the part index of every group (same order as p.groups).
std::vector<std::size_t> greedy_assign(const Prepared& p, const std::vector<double>& shares, std::uint64_t seed) {
  const std::size_t parts = shares.size(), nc = p.classes.size();
  std::vector<std::vector<double>> counts(parts, std::vector<double>(nc, 0.0));
  std::vector<double> sizes(parts, 0.0);
  std::vector<std::size_t> assigned(p.groups.size(), 0);

  auto place = [&](std::size_t gi, std::size_t part) {
    assigned[gi] = part;
    for (std::size_t c = 0; c < nc; ++c) counts[part][c] += static_cast<double>(p.groups[gi].class_counts[c]);
    sizes[part] += static_cast<double>(p.groups[gi].size);
  };

  std::vector<std::size_t> order(p.groups.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p.groups[a].size > p.groups[b].size; });

  for (std::size_t gi : order) {
    if (p.groups[gi].pinned_train) place(gi, DatasetSplit::kTrain);
  }
  const double n = static_cast<double>(p.total);
  for (std::size_t gi : order) {
    if (p.groups[gi].pinned_train) continue;
    const Group& g = p.groups[gi];
    std::size_t best = 0;
    double best_cost = 0, best_fill = 0;
    for (std::size_t part = 0; part < parts; ++part) {
      double cost = 0.0;
      for (std::size_t c = 0; c < nc; ++c) {
        const double total = static_cast<double>(p.class_totals[c]);
        const double target = shares[part] * total;
        const double before = counts[part][c] - target;
        const double after = before + static_cast<double>(g.class_counts[c]);
        cost += (after * after - before * before) / (total * total);
      }
      const double size_before = sizes[part] - shares[part] * n;
      const double size_after = size_before + static_cast<double>(g.size);
      cost += (size_after * size_after - size_before * size_before) / (n * n);
      const double fill = sizes[part] / shares[part];
      constexpr double kTie = 1e-12;
      if (part == 0 || cost < best_cost - kTie || (std::abs(cost - best_cost) <= kTie && fill < best_fill)) {
        best = part;
        best_cost = cost;
        best_fill = fill;
      }
    }
    place(gi, best);
  }

  // Local refinement on the same objective: single-group moves and pairwise
  // swaps, taken only on strict improvement, until a pass changes nothing.
  auto part_cost = [&](std::size_t part, const std::vector<double>& cnt, double size) {
    double cost = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      const double total = static_cast<double>(p.class_totals[c]);
      const double d = cnt[c] - shares[part] * total;
      cost += d * d / (total * total);
    }
    const double d = size - shares[part] * n;
    return cost + d * d / (n * n);
  };
  auto shifted = [&](std::size_t part, std::size_t out_g, std::size_t in_g, bool has_out, bool has_in) {
    std::vector<double> cnt = counts[part];
    double size = sizes[part];
    for (std::size_t c = 0; c < nc; ++c) {
      if (has_out) cnt[c] -= static_cast<double>(p.groups[out_g].class_counts[c]);
      if (has_in) cnt[c] += static_cast<double>(p.groups[in_g].class_counts[c]);
    }
    if (has_out) size -= static_cast<double>(p.groups[out_g].size);
    if (has_in) size += static_cast<double>(p.groups[in_g].size);
    return part_cost(part, cnt, size);
  };
  auto remove = [&](std::size_t gi) {
    for (std::size_t c = 0; c < nc; ++c) counts[assigned[gi]][c] -= static_cast<double>(p.groups[gi].class_counts[c]);
    sizes[assigned[gi]] -= static_cast<double>(p.groups[gi].size);
  };
  constexpr double kGain = 1e-12;
  for (std::size_t pass = 0; pass < 100; ++pass) {
    bool changed = false;
    for (std::size_t gi : order) {
      if (p.groups[gi].pinned_train) continue;
      const std::size_t a = assigned[gi];
      const double base_a = part_cost(a, counts[a], sizes[a]);
      bool moved = false;
      for (std::size_t b = 0; b < parts && !moved; ++b) {
        if (b == a) continue;
        const double base = base_a + part_cost(b, counts[b], sizes[b]);
        if (shifted(a, gi, gi, true, false) + shifted(b, gi, gi, false, true) < base - kGain) {
          remove(gi);
          place(gi, b);
          moved = changed = true;
          break;
        }
        for (std::size_t gj : order) {
          if (assigned[gj] != b || p.groups[gj].pinned_train) continue;
          if (shifted(a, gi, gj, true, true) + shifted(b, gj, gi, true, true) < base - kGain) {
            remove(gi);
            remove(gj);
            place(gi, b);
            place(gj, a);
            moved = changed = true;
            break;
          }
        }
      }
    }
    if (!changed) break;
  }
  return assigned;
}

DatasetSplit materialize(const std::vector<LabeledSample>& samples, const Prepared& p,
                         const std::vector<std::size_t>& group_part, std::size_t parts, std::uint64_t seed,
                         DatasetSplit::Kind kind) {
  DatasetSplit split;
  split.kind = kind;
  split.parts = parts;
  split.seed = seed;
  split.classes = p.classes;
  split.warnings = p.warnings;
  split.counts.assign(parts, std::vector<std::size_t>(p.classes.size(), 0));
  std::map<std::string, std::size_t> part_of_group;
  for (std::size_t gi = 0; gi < p.groups.size(); ++gi) part_of_group[p.groups[gi].id] = group_part[gi];
  for (const auto& s : samples) {
    const std::size_t part = part_of_group.at(s.group_id);
    split.assignment[s.building_id] = part;
    const auto c = static_cast<std::size_t>(std::lower_bound(p.classes.begin(), p.classes.end(), s.label) -
                                            p.classes.begin());
    ++split.counts[part][c];
  }
  return split;
}

}  // namespace

DatasetSplit stratified_group_shuffle_split(const std::vector<LabeledSample>& samples, double test_frac,
                                            std::uint64_t seed) {
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw SplitError("test fraction must lie in (0, 1)");
  const Prepared p = prepare(samples, true);
  const auto parts = greedy_assign(p, {1.0 - test_frac, test_frac}, seed);
  DatasetSplit split = materialize(samples, p, parts, 2, seed, DatasetSplit::Kind::holdout);
  if (p.groups.size() < 2) split.warnings.push_back("only one group: every sample is in train");
  return split;
}

DatasetSplit assign_group_kfold(const std::vector<LabeledSample>& samples, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw SplitError("k-fold needs k >= 2");
  const Prepared p = prepare(samples, false);
  if (p.groups.size() < k) {
    throw SplitError("k-fold needs at least " + std::to_string(k) + " groups, found " +
                     std::to_string(p.groups.size()));
  }
  const auto parts = greedy_assign(p, std::vector<double>(k, 1.0 / static_cast<double>(k)), seed);
  return materialize(samples, p, parts, k, seed, DatasetSplit::Kind::kfold);
}

DatasetSplit fold_view(const DatasetSplit& kfold, std::size_t fold, const std::vector<LabeledSample>& samples) {
  DatasetSplit view;
  view.kind = DatasetSplit::Kind::kfold;
  view.parts = 2;
  view.fold = fold;
  view.seed = kfold.seed;
  view.classes = kfold.classes;
  view.warnings = kfold.warnings;
  view.counts.assign(2, std::vector<std::size_t>(kfold.classes.size(), 0));
  for (const auto& [id, part] : kfold.assignment) view.assignment[id] = part == fold ? 1 : 0;
  for (const auto& s : samples) {
    auto it = view.assignment.find(s.building_id);
    if (it == view.assignment.end()) continue;
    const auto c = static_cast<std::size_t>(std::lower_bound(view.classes.begin(), view.classes.end(), s.label) -
                                            view.classes.begin());
    if (c < view.classes.size()) ++view.counts[it->second][c];
  }
  return view;
}

std::vector<DatasetSplit> stratified_group_kfold(const std::vector<LabeledSample>& samples, std::size_t k,
                                                 std::uint64_t seed) {
  const DatasetSplit all = assign_group_kfold(samples, k, seed);
  std::vector<DatasetSplit> folds;
  folds.reserve(k);
  for (std::size_t f = 0; f < k; ++f) folds.push_back(fold_view(all, f, samples));
  return folds;
}

double SplitReport::max_deviation() const {
  double m = 0.0;
  for (const auto& d : deviations) m = std::max(m, std::abs(d.part_fraction - d.global_fraction));
  return m;
}

SplitReport check_split(const DatasetSplit& split, const std::vector<LabeledSample>& samples) {
  SplitReport report;
  std::map<std::string, std::set<std::size_t>> group_parts;
  std::map<std::string, std::size_t> global;
  std::vector<std::map<std::string, std::size_t>> per_part(split.parts);
  std::vector<std::size_t> part_totals(split.parts, 0);
  for (const auto& s : samples) {
    auto it = split.assignment.find(s.building_id);
    if (it == split.assignment.end() || it->second >= split.parts) {
      report.unassigned.push_back(s.building_id);
      continue;
    }
    group_parts[s.group_id].insert(it->second);
    ++global[s.label];
    ++per_part[it->second][s.label];
    ++part_totals[it->second];
    const bool holdout_test = split.kind == DatasetSplit::Kind::holdout && it->second == DatasetSplit::kTest;
    if (s.origin == Origin::mined && holdout_test) report.misplaced_mined.push_back(s.building_id);
  }
  for (const auto& [g, parts] : group_parts) {
    if (parts.size() > 1) report.leaking_groups.push_back(g);
  }
  const double n = static_cast<double>(samples.size() - report.unassigned.size());
  for (std::size_t part = 0; part < split.parts; ++part) {
    if (part_totals[part] == 0) continue;
    for (const auto& [label, count] : global) {
      const auto it = per_part[part].find(label);
      const double in_part = it == per_part[part].end() ? 0.0 : static_cast<double>(it->second);
      report.deviations.push_back(
          {part, label, in_part / static_cast<double>(part_totals[part]), static_cast<double>(count) / n});
    }
  }
  return report;
}

void annotate_split(std::vector<LabeledSample>& samples, const DatasetSplit& split) {
  for (auto& s : samples) {
    auto it = split.assignment.find(s.building_id);
    if (it != split.assignment.end()) s.split = split.part_name(it->second);
  }
}

}  // namespace rooftop
