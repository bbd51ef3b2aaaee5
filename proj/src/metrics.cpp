#include "rooftop/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "json.hpp"

namespace rooftop {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (const auto& row : counts) {
    for (auto v : row) n += v;
  }
  return n;
}

ConfusionMatrix confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 const std::vector<std::string>& classes) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("label vectors differ in length");
  const std::size_t k = classes.size();
  ConfusionMatrix cm{classes, std::vector<std::vector<std::uint64_t>>(k, std::vector<std::uint64_t>(k, 0))};
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= k || static_cast<std::size_t>(p) >= k) {
      throw std::invalid_argument("class index out of range at row " + std::to_string(i));
    }
    ++cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return cm;
}

ConfusionMatrix confusion_matrix(const std::vector<std::string>& y_true, const std::vector<std::string>& y_pred,
                                 const std::vector<std::string>& classes) {
  std::map<std::string, int> index;
  for (std::size_t c = 0; c < classes.size(); ++c) index.emplace(classes[c], static_cast<int>(c));
  auto lookup = [&](const std::string& s) {
    auto it = index.find(s);
    if (it == index.end()) throw std::invalid_argument("unknown label '" + s + "'");
    return it->second;
  };
  std::vector<int> t, p;
  for (const auto& s : y_true) t.push_back(lookup(s));
  for (const auto& s : y_pred) p.push_back(lookup(s));
  return confusion_matrix(t, p, classes);
}

namespace {

double ratio(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

}  // namespace

EvaluationReport macro_report(const ConfusionMatrix& cm) {
  const std::size_t k = cm.classes.size();
  if (k == 0) throw std::invalid_argument("empty confusion matrix");
  EvaluationReport r;
  r.total = cm.total();
  if (r.total == 0) throw std::invalid_argument("confusion matrix has no samples");
  double trace = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    double tp = static_cast<double>(cm.counts[c][c]), col = 0.0, row = 0.0;
    for (std::size_t o = 0; o < k; ++o) {
      col += static_cast<double>(cm.counts[o][c]);
      row += static_cast<double>(cm.counts[c][o]);
    }
    ClassMetrics m;
    m.name = cm.classes[c];
    m.precision = ratio(tp, col);
    m.recall = ratio(tp, row);
    m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
    m.support = static_cast<std::uint64_t>(row);
    r.macro_precision += m.precision;
    r.macro_recall += m.recall;
    r.macro_f1 += m.f1;
    trace += tp;
    r.per_class.push_back(m);
  }
  r.macro_precision /= static_cast<double>(k);
  r.macro_recall /= static_cast<double>(k);
  r.macro_f1 /= static_cast<double>(k);
  r.accuracy = trace / static_cast<double>(r.total);
  return r;
}

std::string report_json(const EvaluationReport& r, const ConfusionMatrix& cm) {
  nlohmann::ordered_json j;
  j["f1"] = r.macro_f1;
  j["precision"] = r.macro_precision;
  j["recall"] = r.macro_recall;
  j["accuracy"] = r.accuracy;
  j["total"] = r.total;
  j["averaging"] = "macro; 0/0 counted as 0; zero-support classes included";
  auto& per = j["per_class"] = nlohmann::ordered_json::array();
  for (const auto& c : r.per_class) {
    per.push_back({{"class", c.name}, {"f1", c.f1}, {"precision", c.precision}, {"recall", c.recall}, {"support", c.support}});
  }
  j["classes"] = cm.classes;
  j["confusion"] = cm.counts;
  return j.dump(2);
}

std::string report_table(const EvaluationReport& r) {
  std::size_t w = 5;
  for (const auto& c : r.per_class) w = std::max(w, c.name.size());
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s %9s %9s %9s %9s %8s\n", static_cast<int>(w), "class", "F1", "Precision",
                "Recall", "Accuracy", "Support");
  out += line;
  for (const auto& c : r.per_class) {
    std::snprintf(line, sizeof line, "%-*s %9.3f %9.3f %9.3f %9s %8llu\n", static_cast<int>(w), c.name.c_str(), c.f1,
                  c.precision, c.recall, "", static_cast<unsigned long long>(c.support));
    out += line;
  }
  std::snprintf(line, sizeof line, "%-*s %9.3f %9.3f %9.3f %9.3f %8llu\n", static_cast<int>(w), "macro", r.macro_f1,
                r.macro_precision, r.macro_recall, r.accuracy, static_cast<unsigned long long>(r.total));
  out += line;
  return out;
}

}  // namespace rooftop
