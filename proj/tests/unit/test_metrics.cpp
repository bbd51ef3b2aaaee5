#include <cmath>
#include <map>
#include <numeric>

#include "doctest.h"
#include "json.hpp"
#include "rooftop/metrics.hpp"
#include "oracles.hpp"
#include "rooftop/rng.hpp"

using namespace rooftop;

namespace {

const std::vector<std::string> kPitch = {"gable", "hip", "flat", "no_roof"};

ConfusionMatrix from_counts(std::vector<std::vector<std::uint64_t>> counts) {
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < counts.size(); ++i) cm.classes.push_back("c" + std::to_string(i));
  cm.counts = std::move(counts);
  return cm;
}

ConfusionMatrix random_matrix(Rng& rng, std::size_t k) {
  std::vector<std::vector<std::uint64_t>> c(k, std::vector<std::uint64_t>(k));
  for (auto& row : c)
    for (auto& v : row) v = rng.bernoulli(0.3) ? 0 : rng.below(50);
  c[0][0] += 1;  // never empty
  return from_counts(c);
}

}  // namespace

TEST_CASE("perfect predictions give a diagonal matrix and unit scores") {
  std::vector<std::string> y = {"gable", "hip", "flat", "no_roof", "gable", "hip"};
  const auto cm = confusion_matrix(y, y, kPitch);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (i != j) CHECK(cm.at(i, j) == 0);
  CHECK(cm.total() == 6);
  const auto r = macro_report(cm);
  CHECK(r.macro_f1 == 1.0);
  CHECK(r.macro_precision == 1.0);
  CHECK(r.macro_recall == 1.0);
  CHECK(r.accuracy == 1.0);
}

TEST_CASE("single off-diagonal sample") {
  const auto cm = confusion_matrix(std::vector<std::string>{"gable"}, std::vector<std::string>{"hip"}, kPitch);
  CHECK(cm.at(0, 1) == 1);
  CHECK(cm.total() == 1);
  CHECK(macro_report(cm).macro_f1 == 0.0);
}

TEST_CASE("counts match a hash-count oracle on 1,000 random pairs") {
  Rng rng(1);
  std::vector<std::string> t, p;
  std::map<std::pair<std::string, std::string>, std::uint64_t> oracle;
  for (int i = 0; i < 1000; ++i) {
    t.push_back(kPitch[rng.below(4)]);
    p.push_back(kPitch[rng.below(4)]);
    ++oracle[{t.back(), p.back()}];
  }
  const auto cm = confusion_matrix(t, p, kPitch);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(cm.at(i, j) == oracle[{kPitch[i], kPitch[j]}]);
  std::vector<int> ti, pi;
  for (std::size_t i = 0; i < t.size(); ++i) {
    ti.push_back(static_cast<int>(std::find(kPitch.begin(), kPitch.end(), t[i]) - kPitch.begin()));
    pi.push_back(static_cast<int>(std::find(kPitch.begin(), kPitch.end(), p[i]) - kPitch.begin()));
  }
  CHECK(confusion_matrix(ti, pi, kPitch).counts == cm.counts);
}

TEST_CASE("worked 2-class example") {
  const auto r = macro_report(from_counts({{2, 1}, {0, 3}}));
  CHECK(std::abs(r.per_class[0].f1 - 0.8) <= 1e-9);
  CHECK(std::abs(r.per_class[1].f1 - 6.0 / 7.0) <= 1e-9);
  CHECK(std::abs(r.macro_f1 - 0.828571429) <= 1e-9);
  CHECK(std::abs(r.accuracy - 0.833333333) <= 1e-9);
  CHECK(r.per_class[0].support == 3);
  CHECK(r.per_class[1].support == 3);
}

TEST_CASE("constant predictor on balanced 4-class data") {
  const auto r = macro_report(from_counts({{5, 0, 0, 0}, {5, 0, 0, 0}, {5, 0, 0, 0}, {5, 0, 0, 0}}));
  CHECK(r.accuracy == doctest::Approx(0.25));
  CHECK(r.per_class[0].f1 == doctest::Approx(0.4));
  CHECK(r.macro_f1 == doctest::Approx(0.1));
}

TEST_CASE("zero-support classes count as zero in the macro mean") {
  const auto r = macro_report(from_counts({{4, 0, 0}, {0, 4, 0}, {0, 0, 0}}));
  CHECK(r.per_class[2].f1 == 0.0);
  CHECK(r.macro_f1 == doctest::Approx(2.0 / 3.0));
  CHECK(r.accuracy == 1.0);
}

TEST_CASE("random matrices match the brute-force oracle") {
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto cm = random_matrix(rng, 2 + rng.below(5));
    const auto r = macro_report(cm);
    const auto o = oracle::brute_macro(cm);
    CHECK(std::abs(r.macro_precision - o.precision) <= 1e-9);
    CHECK(std::abs(r.macro_recall - o.recall) <= 1e-9);
    CHECK(std::abs(r.macro_f1 - o.f1) <= 1e-9);
    CHECK(std::abs(r.accuracy - o.accuracy) <= 1e-9);
    for (const auto& c : r.per_class) {
      CHECK(c.f1 >= 0.0);
      CHECK(c.f1 <= 1.0);
    }
  }
}

TEST_CASE("class permutation and sample duplication leave macro scores unchanged") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng.below(5);
    const auto cm = random_matrix(rng, k);
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    auto permuted = cm;
    auto doubled = cm;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        permuted.counts[i][j] = cm.counts[perm[i]][perm[j]];
        doubled.counts[i][j] *= 2;
      }
    const auto a = macro_report(cm), b = macro_report(permuted), d = macro_report(doubled);
    CHECK(std::abs(a.macro_f1 - b.macro_f1) <= 1e-12);
    CHECK(std::abs(a.macro_precision - b.macro_precision) <= 1e-12);
    CHECK(std::abs(a.accuracy - b.accuracy) <= 1e-12);
    CHECK(b.per_class[0].f1 == a.per_class[perm[0]].f1);
    CHECK(std::abs(a.macro_f1 - d.macro_f1) <= 1e-12);
    CHECK(std::abs(a.accuracy - d.accuracy) <= 1e-12);
  }
}

TEST_CASE("errors") {
  CHECK_THROWS(confusion_matrix(std::vector<std::string>{"gable"}, std::vector<std::string>{}, kPitch));
  CHECK_THROWS(confusion_matrix(std::vector<std::string>{"gable"}, std::vector<std::string>{"dome"}, kPitch));
  CHECK_THROWS(macro_report(from_counts({{0, 0}, {0, 0}})));
}

TEST_CASE("report formats") {
  const auto cm = from_counts({{2, 1}, {0, 3}});
  const auto r = macro_report(cm);
  const auto j = nlohmann::json::parse(report_json(r, cm));
  CHECK(j["f1"].get<double>() == doctest::Approx(0.828571429));
  CHECK(j.contains("averaging"));
  CHECK(j["confusion"].size() == 2);
  const std::string table = report_table(r);
  const auto f1 = table.find("F1"), pr = table.find("Precision"), re = table.find("Recall"), ac = table.find("Accuracy");
  REQUIRE(f1 != std::string::npos);
  CHECK(f1 < pr);
  CHECK(pr < re);
  CHECK(re < ac);
  CHECK(table.find("0.829") != std::string::npos);
}
