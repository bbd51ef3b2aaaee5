#include "rooftop/search.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "rooftop/datasplit.hpp"
#include "rooftop/metrics.hpp"
#include "rooftop/rng.hpp"

namespace rooftop {

CvFolds make_cv_folds(std::span<const int> y, const std::vector<std::string>& groups,
                      const std::vector<std::string>& classes, std::size_t k, std::uint64_t seed) {
  if (groups.size() != y.size()) throw std::invalid_argument("groups and labels differ in length");
  std::vector<LabeledSample> rows(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    rows[i].building_id = std::to_string(i);
    rows[i].label = classes.at(static_cast<std::size_t>(y[i]));
    rows[i].group_id = groups[i];
  }
  const DatasetSplit assignment = assign_group_kfold(rows, k, seed);
  CvFolds f;
  f.train.resize(k);
  f.valid.resize(k);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t part = assignment.part_of(rows[i].building_id);
    for (std::size_t fold = 0; fold < k; ++fold) (fold == part ? f.valid : f.train)[fold].push_back(i);
  }
  return f;
}

namespace {

FoldScore score_fold(const ClassifierSpec& spec, const Matrix& X, std::span<const int> y,
                     const std::vector<std::string>& classes, const CvFolds& folds, std::size_t fold,
                     std::uint64_t seed) {
  const auto& tr = folds.train[fold];
  const auto& va = folds.valid[fold];
  std::vector<int> ytr(tr.size()), yva(va.size());
  for (std::size_t i = 0; i < tr.size(); ++i) ytr[i] = y[tr[i]];
  for (std::size_t i = 0; i < va.size(); ++i) yva[i] = y[va[i]];
  const TrainedModel m = train_classifier(spec, select_rows(X, tr), ytr, classes, run_seed(seed, spec, fold));
  const auto pred = predict_index(m, select_rows(X, va));
  const EvaluationReport r = macro_report(confusion_matrix(yva, pred, classes));
  return {r.macro_f1, r.accuracy, m.scaler};
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t run_seed(std::uint64_t seed, const ClassifierSpec& spec, std::size_t fold) {
  return mix_seed(mix_seed(seed, fnv1a(spec.describe())), fold);
}

std::vector<FoldScore> cross_validate(const ClassifierSpec& spec, const Matrix& X, std::span<const int> y,
                                      const std::vector<std::string>& classes, const CvFolds& folds,
                                      std::uint64_t seed) {
  std::vector<FoldScore> out;
  for (std::size_t f = 0; f < folds.size(); ++f) out.push_back(score_fold(spec, X, y, classes, folds, f, seed));
  return out;
}

std::vector<ClassifierSpec> logreg_grid() {
  std::vector<ClassifierSpec> out;
  for (Penalty p : {Penalty::l1, Penalty::l2}) {
    for (double C : {0.001, 0.01, 0.1, 1.0, 10.0}) {
      for (ScalerKind s : {ScalerKind::standard, ScalerKind::minmax, ScalerKind::robust}) {
        out.push_back(ClassifierSpec::logreg(p, C, s));
      }
    }
  }
  return out;
}

std::vector<ClassifierSpec> svm_space() {
  std::vector<ClassifierSpec> out;
  for (KernelKind k : {KernelKind::linear, KernelKind::poly, KernelKind::rbf, KernelKind::sigmoid}) {
    for (double g : {1.0, 0.1, 0.01, 0.001, 0.0001}) {
      for (double C : {0.001, 0.01, 0.1, 1.0, 10.0}) {
        for (ScalerKind s : {ScalerKind::standard, ScalerKind::minmax, ScalerKind::robust}) {
          out.push_back(ClassifierSpec::svm(k, g, C, s));
        }
      }
    }
  }
  return out;
}

std::vector<ClassifierSpec> mlp_space() {
  const std::vector<std::vector<std::size_t>> hidden = {{64}, {128}, {256}, {128, 64}};
  std::vector<ClassifierSpec> out;
  for (const auto& h : hidden) {
    for (Activation a : {Activation::tanh, Activation::relu}) {
      for (Solver so : {Solver::lbfgs, Solver::sgd, Solver::adam}) {
        for (double alpha : {0.0001, 0.001, 0.01, 0.1}) {
          for (ScalerKind s : {ScalerKind::standard, ScalerKind::minmax, ScalerKind::robust}) {
            out.push_back(ClassifierSpec::mlp(h, a, so, alpha, s));
          }
        }
      }
    }
  }
  return out;
}

std::vector<ClassifierSpec> search_space(Family f) {
  switch (f) {
    case Family::logreg: return logreg_grid();
    case Family::svm: return svm_space();
    case Family::mlp: return mlp_space();
  }
  return {};
}

SearchResult grid_search_cv(const std::vector<ClassifierSpec>& configs, const Matrix& X, std::span<const int> y,
                            const std::vector<std::string>& groups, const std::vector<std::string>& classes,
                            std::size_t folds, std::uint64_t seed) {
  if (configs.empty()) throw std::invalid_argument("no configurations to search");
  if (X.rows != y.size()) throw std::invalid_argument("feature rows and labels differ in length");
  const CvFolds cv = make_cv_folds(y, groups, classes, folds, seed);

  const std::size_t tasks = configs.size() * folds;
  std::vector<FoldScore> scores(tasks);
  std::vector<std::string> errors(tasks);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t t = 0; t < tasks; ++t) {
    try {
      scores[t] = score_fold(configs[t / folds], X, y, classes, cv, t % folds, seed);
    } catch (const std::exception& e) {
      errors[t] = e.what();
    }
  }
  for (std::size_t t = 0; t < tasks; ++t) {
    if (!errors[t].empty()) {
      throw std::runtime_error(configs[t / folds].describe() + " fold " + std::to_string(t % folds) + ": " + errors[t]);
    }
  }

  SearchResult r;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    ConfigScore s;
    s.spec = configs[c];
    for (std::size_t f = 0; f < folds; ++f) {
      s.fold_f1.push_back(scores[c * folds + f].macro_f1);
      s.fold_accuracy.push_back(scores[c * folds + f].accuracy);
    }
    s.mean_f1 = std::accumulate(s.fold_f1.begin(), s.fold_f1.end(), 0.0) / static_cast<double>(folds);
    s.mean_accuracy = std::accumulate(s.fold_accuracy.begin(), s.fold_accuracy.end(), 0.0) / static_cast<double>(folds);
    if (c == 0 || s.mean_f1 > r.evaluated[r.best].mean_f1) r.best = c;
    r.evaluated.push_back(std::move(s));
  }
  const ClassifierSpec& best = configs[r.best];
  r.model = train_classifier(best, X, y, classes, run_seed(seed, best, folds));
  return r;
}

std::vector<ClassifierSpec> sample_configs(const std::vector<ClassifierSpec>& space, std::size_t n_iter,
                                           std::uint64_t seed) {
  if (n_iter >= space.size()) return space;
  std::vector<std::size_t> idx(space.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(mix_seed(seed, 0x5eed));
  // partial Fisher-Yates: the first n_iter slots are the sample
  for (std::size_t i = 0; i < n_iter; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
  idx.resize(n_iter);
  std::sort(idx.begin(), idx.end());
  std::vector<ClassifierSpec> out;
  for (std::size_t i : idx) out.push_back(space[i]);
  return out;
}

SearchResult random_search_cv(const std::vector<ClassifierSpec>& space, const Matrix& X, std::span<const int> y,
                              const std::vector<std::string>& groups, const std::vector<std::string>& classes,
                              std::size_t folds, std::size_t n_iter, std::uint64_t seed) {
  return grid_search_cv(sample_configs(space, n_iter, seed), X, y, groups, classes, folds, seed);
}

std::string search_report_ndjson(const SearchResult& r) {
  std::string out;
  for (std::size_t c = 0; c < r.evaluated.size(); ++c) {
    const ConfigScore& s = r.evaluated[c];
    nlohmann::ordered_json j;
    j["config"] = s.spec.describe();
    j["family"] = to_string(s.spec.family);
    j["scaler"] = to_string(s.spec.scaler);
    switch (s.spec.family) {
      case Family::logreg:
        j["penalty"] = to_string(s.spec.penalty);
        j["C"] = s.spec.C;
        break;
      case Family::svm:
        j["kernel"] = to_string(s.spec.kernel);
        j["gamma"] = s.spec.gamma;
        j["C"] = s.spec.C;
        break;
      case Family::mlp:
        j["hidden"] = s.spec.hidden;
        j["activation"] = to_string(s.spec.activation);
        j["solver"] = to_string(s.spec.solver);
        j["alpha"] = s.spec.alpha;
        break;
    }
    j["fold_f1"] = s.fold_f1;
    j["mean_f1"] = s.mean_f1;
    j["mean_accuracy"] = s.mean_accuracy;
    j["best"] = c == r.best;
    out += j.dump() + "\n";
  }
  return out;
}

void write_search_report(const SearchResult& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << search_report_ndjson(r);
}

}  // namespace rooftop
