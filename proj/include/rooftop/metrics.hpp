#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rooftop {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<std::uint64_t>> counts;

  std::uint64_t total() const;
  std::uint64_t at(std::size_t t, std::size_t p) const { return counts[t][p]; }
};

ConfusionMatrix confusion_matrix(const std::vector<std::string>& y_true, const std::vector<std::string>& y_pred,
                                 const std::vector<std::string>& classes);
ConfusionMatrix confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 const std::vector<std::string>& classes);

struct ClassMetrics {
  std::string name;
  double precision = 0, recall = 0, f1 = 0;
  std::uint64_t support = 0;
};

/// Undefined ratios (0/0) count as 0 and every listed class enters the macro
/// mean, including classes with no support.
struct EvaluationReport {
  std::vector<ClassMetrics> per_class;
  double macro_precision = 0, macro_recall = 0, macro_f1 = 0, accuracy = 0;
  std::uint64_t total = 0;
};

EvaluationReport macro_report(const ConfusionMatrix& cm);

std::string report_json(const EvaluationReport& r, const ConfusionMatrix& cm);
/// Aligned table: F1, Precision, Recall, Accuracy.
std::string report_table(const EvaluationReport& r);

}  // namespace rooftop
