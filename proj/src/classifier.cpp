#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "ml_detail.hpp"

namespace rooftop {

std::string to_string(Family f) {
  switch (f) {
    case Family::logreg: return "logreg";
    case Family::svm: return "svm";
    case Family::mlp: return "mlp";
  }
  return "?";
}

std::string to_string(Penalty p) { return p == Penalty::l1 ? "l1" : "l2"; }

std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::linear: return "linear";
    case KernelKind::poly: return "poly";
    case KernelKind::rbf: return "rbf";
    case KernelKind::sigmoid: return "sigmoid";
  }
  return "?";
}

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

std::string to_string(Solver s) {
  switch (s) {
    case Solver::lbfgs: return "lbfgs";
    case Solver::sgd: return "sgd";
    case Solver::adam: return "adam";
  }
  return "?";
}

ClassifierSpec ClassifierSpec::logreg(Penalty p, double C, ScalerKind s) {
  ClassifierSpec spec;
  spec.family = Family::logreg;
  spec.penalty = p;
  spec.C = C;
  spec.scaler = s;
  return spec;
}

ClassifierSpec ClassifierSpec::svm(KernelKind k, double gamma, double C, ScalerKind s) {
  ClassifierSpec spec;
  spec.family = Family::svm;
  spec.kernel = k;
  spec.gamma = gamma;
  spec.C = C;
  spec.scaler = s;
  return spec;
}

ClassifierSpec ClassifierSpec::mlp(std::vector<std::size_t> hidden, Activation a, Solver solver, double alpha,
                                   ScalerKind s) {
  ClassifierSpec spec;
  spec.family = Family::mlp;
  spec.hidden = std::move(hidden);
  spec.activation = a;
  spec.solver = solver;
  spec.alpha = alpha;
  spec.scaler = s;
  return spec;
}

void ClassifierSpec::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive");
  };
  switch (family) {
    case Family::logreg: positive(C, "C"); break;
    case Family::svm:
      positive(C, "C");
      positive(gamma, "gamma");
      break;
    case Family::mlp:
      positive(alpha, "alpha");
      if (hidden.empty()) throw std::invalid_argument("mlp needs at least one hidden layer");
      for (std::size_t h : hidden) {
        if (h == 0) throw std::invalid_argument("hidden layer width must be positive");
      }
      break;
  }
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string ClassifierSpec::describe() const {
  std::string s = to_string(family);
  switch (family) {
    case Family::logreg: s += " penalty=" + to_string(penalty) + " C=" + num(C); break;
    case Family::svm: s += " kernel=" + to_string(kernel) + " gamma=" + num(gamma) + " C=" + num(C); break;
    case Family::mlp: {
      s += " hidden=(";
      for (std::size_t i = 0; i < hidden.size(); ++i) s += (i ? "," : "") + std::to_string(hidden[i]);
      s += ") activation=" + to_string(activation) + " solver=" + to_string(solver) + " alpha=" + num(alpha);
      break;
    }
  }
  return s + " scaler=" + to_string(scaler);
}

TrainedModel train_classifier(const ClassifierSpec& spec, const Matrix& X, std::span<const int> y,
                              const std::vector<std::string>& classes, std::uint64_t seed) {
  spec.validate();
  if (X.rows != y.size()) throw std::invalid_argument("feature rows and labels differ in length");
  if (X.rows == 0 || X.cols == 0) throw std::invalid_argument("empty training data");
  for (double v : X.data) {
    if (!std::isfinite(v)) throw ModelError("non-finite feature value");
  }
  std::set<int> present;
  for (int v : y) {
    if (v < 0 || static_cast<std::size_t>(v) >= classes.size()) throw std::invalid_argument("label index out of range");
    present.insert(v);
  }
  if (present.size() < 2) throw ModelError("training labels contain a single class");

  TrainedModel m;
  m.spec = spec;
  m.classes = classes;
  m.seed = seed;
  m.features = X.cols;
  m.scaler = fit_scaler(spec.scaler, X);
  const Matrix Xs = apply_scaler(m.scaler, X);
  switch (spec.family) {
    case Family::logreg: m.params = detail::train_logreg(spec, Xs, y, classes.size()); break;
    case Family::svm: m.params = detail::train_svm(spec, Xs, y, classes.size()); break;
    case Family::mlp: m.params = detail::train_mlp(spec, Xs, y, classes.size(), seed); break;
  }
  return m;
}

TrainedModel train_classifier(const ClassifierSpec& spec, const Matrix& X, const std::vector<std::string>& labels,
                              std::uint64_t seed) {
  const std::set<std::string> distinct(labels.begin(), labels.end());
  const std::vector<std::string> classes(distinct.begin(), distinct.end());
  std::vector<int> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y[i] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());
  }
  return train_classifier(spec, X, y, classes, seed);
}

Matrix predict_proba(const TrainedModel& model, const Matrix& X) {
  if (X.cols != model.features) {
    throw std::invalid_argument("feature dimension " + std::to_string(X.cols) + " does not match model dimension " +
                                std::to_string(model.features));
  }
  const Matrix Xs = apply_scaler(model.scaler, X);
  if (const auto* p = std::get_if<LogRegParams>(&model.params)) return detail::logreg_proba(*p, Xs);
  if (const auto* p = std::get_if<SvmParams>(&model.params)) return detail::svm_proba(model.spec, *p, Xs);
  return detail::mlp_proba(std::get<MlpParams>(model.params), model.spec.activation, Xs);
}

Matrix svm_decision_values(const TrainedModel& model, const Matrix& X) {
  const auto* p = std::get_if<SvmParams>(&model.params);
  if (!p) throw std::invalid_argument("model is not an svm");
  if (X.cols != model.features) throw std::invalid_argument("feature dimension mismatch");
  return detail::svm_decision(model.spec, *p, apply_scaler(model.scaler, X));
}

std::size_t argmax_first(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return best;
}

std::vector<int> predict_index(const TrainedModel& model, const Matrix& X) {
  const Matrix P = predict_proba(model, X);
  std::vector<int> out(P.rows);
  for (std::size_t i = 0; i < P.rows; ++i) out[i] = static_cast<int>(argmax_first(P.row(i)));
  return out;
}

std::vector<std::string> predict(const TrainedModel& model, const Matrix& X) {
  std::vector<std::string> out;
  for (int c : predict_index(model, X)) out.push_back(model.classes[static_cast<std::size_t>(c)]);
  return out;
}

}  // namespace rooftop
