#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rooftop/matrix.hpp"
#include "rooftop/scaler.hpp"

namespace rooftop {

enum class Family { logreg, svm, mlp };
enum class Penalty { l1, l2 };
enum class KernelKind { linear, poly, rbf, sigmoid };
enum class Activation { tanh, relu };
enum class Solver { lbfgs, sgd, adam };

std::string to_string(Family f);
std::string to_string(Penalty p);
std::string to_string(KernelKind k);
std::string to_string(Activation a);
std::string to_string(Solver s);

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scaler plus one classifier family with its hyperparameters. Only the
/// fields of `family` are meaningful.
struct ClassifierSpec {
  Family family = Family::logreg;
  ScalerKind scaler = ScalerKind::standard;
  // logreg
  Penalty penalty = Penalty::l2;
  double C = 1.0;  // also the SVM box constraint
  // svm
  KernelKind kernel = KernelKind::rbf;
  double gamma = 1.0;
  // mlp
  std::vector<std::size_t> hidden = {64};
  Activation activation = Activation::relu;
  Solver solver = Solver::adam;
  double alpha = 1e-4;

  static ClassifierSpec logreg(Penalty p, double C, ScalerKind s = ScalerKind::standard);
  static ClassifierSpec svm(KernelKind k, double gamma, double C, ScalerKind s = ScalerKind::standard);
  static ClassifierSpec mlp(std::vector<std::size_t> hidden, Activation a, Solver solver, double alpha,
                            ScalerKind s = ScalerKind::standard);

  void validate() const;
  /// Stable one-line description, e.g. "logreg penalty=l2 C=1 scaler=standard".
  std::string describe() const;
  bool operator==(const ClassifierSpec&) const = default;
};

struct LogRegParams {
  Matrix weights;              // classes x features
  std::vector<double> bias;    // classes
};

struct BinarySvm {
  std::vector<double> coef;  // alpha_i * y_i over the shared support set
  double rho = 0.0;          // f(x) = sum coef_i K(sv_i, x) - rho
  double platt_a = 0.0, platt_b = 0.0;  // P(+) = 1 / (1 + exp(a f + b))
};

struct SvmParams {
  Matrix support;  // scaled support vectors shared by all one-vs-rest machines
  std::vector<BinarySvm> machines;
};

struct DenseLayer {
  Matrix weights;            // out x in
  std::vector<double> bias;  // out
};

struct MlpParams {
  std::vector<DenseLayer> layers;  // last layer feeds the softmax
};

struct TrainedModel {
  ClassifierSpec spec;
  FittedScaler scaler;
  std::vector<std::string> classes;
  std::uint64_t seed = 0;
  std::size_t features = 0;
  std::variant<LogRegParams, SvmParams, MlpParams> params;
};

/// Trains on labels given as indices into `classes`. Every class index must
/// be < classes.size() and at least two classes must be present.
TrainedModel train_classifier(const ClassifierSpec& spec, const Matrix& X, std::span<const int> y,
                              const std::vector<std::string>& classes, std::uint64_t seed);
/// Convenience overload: class list is the sorted set of distinct labels.
TrainedModel train_classifier(const ClassifierSpec& spec, const Matrix& X, const std::vector<std::string>& labels,
                              std::uint64_t seed);

/// Rows sum to 1; columns follow model.classes.
Matrix predict_proba(const TrainedModel& model, const Matrix& X);
/// argmax of predict_proba, ties to the first class.
std::vector<int> predict_index(const TrainedModel& model, const Matrix& X);
std::vector<std::string> predict(const TrainedModel& model, const Matrix& X);
std::size_t argmax_first(std::span<const double> row);

/// "RMDL" model file: magic, u32 version, spec, scaler, classes, parameters
/// (float64 little-endian).
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

// ---- exposed internals (gradient checks, solver audits) ----

/// Multinomial logistic loss: mean cross-entropy + 0.5 * l2 * ||W||^2 over
/// theta = [W (classes x features, row-major), b (classes)].
double logreg_objective(const Matrix& X, std::span<const int> y, std::size_t classes, double l2,
                        std::span<const double> theta, std::span<double> grad);

struct MlpShape {
  std::vector<std::size_t> sizes;  // input, hidden..., classes
  Activation activation = Activation::relu;
  std::size_t parameter_count() const;
};

/// Mean cross-entropy + 0.5 * alpha * ||W||^2 / n over flattened parameters
/// (per layer: weights out x in, then bias).
double mlp_objective(const MlpShape& shape, const Matrix& X, std::span<const int> y, double alpha,
                     std::span<const double> theta, std::span<double> grad);

double kernel_value(KernelKind k, double gamma, std::span<const double> a, std::span<const double> b);

struct SmoResult {
  std::vector<double> alpha;
  double rho = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Binary soft-margin SVM dual by SMO with maximal-violating-pair working set
/// selection; stops when the KKT gap falls below `tol`. Labels are +1/-1.
SmoResult smo_solve(const Matrix& K, std::span<const int> y, double C, double tol = 1e-3,
                    std::size_t max_iter = 1000000);

/// Largest KKT violation of a dual solution: for each point, the distance of
/// y f(x) from the region its alpha requires.
double max_kkt_violation(const Matrix& K, std::span<const int> y, const SmoResult& r, double C);

/// Platt sigmoid fit (Newton method with regularized targets).
std::pair<double, double> fit_platt(std::span<const double> decision, std::span<const int> y);

/// One-vs-rest decision values (rows x classes) for an SVM model on raw X.
Matrix svm_decision_values(const TrainedModel& model, const Matrix& X);

}  // namespace rooftop
