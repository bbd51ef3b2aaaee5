#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rooftop/classifier.hpp"

namespace rooftop {

/// Row indices of each cross-validation fold.
struct CvFolds {
  std::vector<std::vector<std::size_t>> train;
  std::vector<std::vector<std::size_t>> valid;
  std::size_t size() const { return train.size(); }
};

/// Stratified group k-fold over rows. Throws SplitError when there are fewer
/// groups than folds.
CvFolds make_cv_folds(std::span<const int> y, const std::vector<std::string>& groups,
                      const std::vector<std::string>& classes, std::size_t k, std::uint64_t seed);

struct FoldScore {
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  FittedScaler scaler;  // fit on that fold's training rows only
};

/// Trains `spec` on every fold's training rows and scores the held-out rows
/// with macro-F1 over the full class list.
std::vector<FoldScore> cross_validate(const ClassifierSpec& spec, const Matrix& X, std::span<const int> y,
                                      const std::vector<std::string>& classes, const CvFolds& folds,
                                      std::uint64_t seed);

struct ConfigScore {
  ClassifierSpec spec;
  std::vector<double> fold_f1;
  std::vector<double> fold_accuracy;
  double mean_f1 = 0.0;
  double mean_accuracy = 0.0;
};

struct SearchResult {
  std::vector<ConfigScore> evaluated;  // canonical enumeration order
  std::size_t best = 0;
  TrainedModel model;  // best config refit on all rows

  const ConfigScore& best_score() const { return evaluated[best]; }
};

/// penalty {l1,l2} x C {0.001,0.01,0.1,1,10} x scaler {standard,minmax,robust}
std::vector<ClassifierSpec> logreg_grid();
/// kernel x gamma {1,0.1,0.01,0.001,0.0001} x C x scaler
std::vector<ClassifierSpec> svm_space();
/// hidden {(64),(128),(256),(128,64)} x activation x solver x alpha
/// {0.0001,0.001,0.01,0.1} x scaler
std::vector<ClassifierSpec> mlp_space();
std::vector<ClassifierSpec> search_space(Family f);

/// Evaluates every config (in parallel over config x fold; results do not
/// depend on the thread count) and refits the best one.
SearchResult grid_search_cv(const std::vector<ClassifierSpec>& configs, const Matrix& X, std::span<const int> y,
                            const std::vector<std::string>& groups, const std::vector<std::string>& classes,
                            std::size_t folds, std::uint64_t seed);

/// Samples n_iter configs without replacement from `space` (all of them when
/// n_iter >= space size), keeps them in canonical order and grid-searches them.
std::vector<ClassifierSpec> sample_configs(const std::vector<ClassifierSpec>& space, std::size_t n_iter,
                                           std::uint64_t seed);
SearchResult random_search_cv(const std::vector<ClassifierSpec>& space, const Matrix& X, std::span<const int> y,
                              const std::vector<std::string>& groups, const std::vector<std::string>& classes,
                              std::size_t folds, std::size_t n_iter, std::uint64_t seed);

/// Training seed for one (config, fold) run; fold == folds means the refit.
std::uint64_t run_seed(std::uint64_t seed, const ClassifierSpec& spec, std::size_t fold);

/// One JSON object per config: spec fields, per-fold and mean scores, best flag.
std::string search_report_ndjson(const SearchResult& r);
void write_search_report(const SearchResult& r, const std::filesystem::path& path);

}  // namespace rooftop
