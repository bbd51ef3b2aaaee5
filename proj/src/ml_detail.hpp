#pragma once

#include <cstdint>
#include <span>

#include "rooftop/classifier.hpp"

namespace rooftop::detail {

// Family trainers work on already scaled features.
LogRegParams train_logreg(const ClassifierSpec& spec, const Matrix& X, std::span<const int> y, std::size_t classes);
SvmParams train_svm(const ClassifierSpec& spec, const Matrix& X, std::span<const int> y, std::size_t classes);
MlpParams train_mlp(const ClassifierSpec& spec, const Matrix& X, std::span<const int> y, std::size_t classes,
                    std::uint64_t seed);

Matrix logreg_proba(const LogRegParams& p, const Matrix& X);
Matrix svm_proba(const ClassifierSpec& spec, const SvmParams& p, const Matrix& X);
Matrix svm_decision(const ClassifierSpec& spec, const SvmParams& p, const Matrix& X);
Matrix mlp_proba(const MlpParams& p, Activation act, const Matrix& X);

/// In-place softmax of one row of logits.
void softmax(std::span<double> z);

}  // namespace rooftop::detail
