// Acceptance runner: one PASS/FAIL line per primary criterion. Exit status is
// the number of failed criteria.
#include <omp.h>

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "oracles.hpp"
#include "rooftop/canny.hpp"
#include "rooftop/chip.hpp"
#include "rooftop/classifier.hpp"
#include "rooftop/datasplit.hpp"
#include "rooftop/deploy.hpp"
#include "rooftop/embedding.hpp"
#include "rooftop/metrics.hpp"
#include "rooftop/raster_io.hpp"
#include "rooftop/raster_ops.hpp"
#include "rooftop/rng.hpp"
#include "rooftop/search.hpp"
#include "rooftop/testkit.hpp"
#include "support.hpp"

using namespace rooftop;
namespace fs = std::filesystem;

namespace {

// tolerances and limits
constexpr double kMetricTol = 1e-9;
constexpr double kWorkedMacroF1 = 0.828571429;
constexpr double kSplitTestFrac = 0.20, kSplitFracTol = 0.03, kSplitClassTol = 0.05;
constexpr double kTopkSimTol = 1e-9;
constexpr double kGradTol = 1e-5;
constexpr double kKktTol = 1e-3;
constexpr double kE2eMinF1 = 0.95;
constexpr double kProbSumTol = 1e-6;
constexpr double kPreprocessTol = 1e-6;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---- 1 ------------------------------------------------------------------

Outcome metric_oracle() {
  Outcome o;
  Rng rng(2024);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 2 + rng.below(5);
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < k; ++i) cm.classes.push_back("c" + std::to_string(i));
    cm.counts.assign(k, std::vector<std::uint64_t>(k));
    for (auto& row : cm.counts)
      for (auto& v : row) v = rng.bernoulli(0.3) ? 0 : rng.below(50);
    cm.counts[rng.below(k)][rng.below(k)] += 1;
    const auto r = macro_report(cm);
    const auto b = oracle::brute_macro(cm);
    for (double d : {r.macro_precision - b.precision, r.macro_recall - b.recall, r.macro_f1 - b.f1,
                     r.accuracy - b.accuracy})
      worst = std::max(worst, std::abs(d));
  }
  ConfusionMatrix two{{"a", "b"}, {{2, 1}, {0, 3}}};
  const double f1 = macro_report(two).macro_f1;
  o.pass = worst <= kMetricTol && std::abs(f1 - kWorkedMacroF1) <= kMetricTol;
  o.detail = fmt("1000 matrices, max |lib - brute| %.2g; worked example macro-F1 %.9f", worst, f1);
  return o;
}

// ---- 2 ------------------------------------------------------------------

Outcome split_integrity() {
  Outcome o;
  std::size_t leaks = 0, mined_out = 0, frac_bad = 0, class_bad = 0;
  double worst_frac = 0, worst_class = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto samples = split_fixture(seed);
    const auto split = stratified_group_shuffle_split(samples, kSplitTestFrac, seed);
    std::map<std::string, std::set<std::size_t>> parts_of_group;
    std::map<std::string, std::size_t> all_cls, test_cls;
    std::size_t test_n = 0;
    for (const auto& s : samples) {
      const std::size_t part = split.assignment.at(s.building_id);
      parts_of_group[s.group_id].insert(part);
      ++all_cls[s.label];
      if (part == DatasetSplit::kTest) {
        ++test_n;
        ++test_cls[s.label];
      }
      if (s.origin == Origin::mined && part != DatasetSplit::kTrain) ++mined_out;
    }
    for (const auto& [g, parts] : parts_of_group) leaks += parts.size() > 1;
    const double frac = static_cast<double>(test_n) / static_cast<double>(samples.size());
    worst_frac = std::max(worst_frac, std::abs(frac - kSplitTestFrac));
    frac_bad += std::abs(frac - kSplitTestFrac) > kSplitFracTol;
    for (const auto& [label, n] : all_cls) {
      const double dev = std::abs(static_cast<double>(test_cls[label]) / static_cast<double>(test_n) -
                                  static_cast<double>(n) / static_cast<double>(samples.size()));
      worst_class = std::max(worst_class, dev);
      class_bad += dev > kSplitClassTol;
    }
  }
  o.pass = leaks == 0 && mined_out == 0 && frac_bad == 0 && class_bad == 0;
  o.detail = fmt("100 seeds: %zu leaking groups, %zu mined outside train, worst |test frac - 0.2| %.4f, "
                 "worst class-share deviation %.4f",
                 leaks, mined_out, worst_frac, worst_class);
  return o;
}

// ---- 3 ------------------------------------------------------------------

Outcome topk_exactness() {
  Outcome o;
  Rng rng(77);
  std::vector<EmbeddingRecord> recs(1000);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    recs[i].building_id = fmt("E%04zu", (i * 389) % 1000);  // ids not in vector order
    recs[i].model_id = "m";
    if (i >= 900) {
      recs[i].vector = recs[i - 900 + rng.below(100)].vector;  // exact duplicates force ties
    } else {
      recs[i].vector.resize(1024);
      for (auto& v : recs[i].vector) v = static_cast<float>(rng.normal());
    }
  }
  const auto idx = build_index(recs);
  std::size_t mismatched = 0, ties = 0;
  double worst = 0;
  for (int q = 0; q < 100; ++q) {
    // half of the queries have a duplicate somewhere in the corpus
    const std::string id = q % 2 ? recs[900 + rng.below(100)].building_id : recs[rng.below(900)].building_id;
    const auto got = cosine_topk(idx, id, 25);
    const auto want = oracle::full_sort_topk(recs, id, 25);
    if (got.size() != want.size()) {
      ++mismatched;
      continue;
    }
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (got[i].id != want[i].id) ++mismatched;
      worst = std::max(worst, std::abs(got[i].similarity - want[i].similarity));
      if (i && want[i].similarity == want[i - 1].similarity) ++ties;
    }
  }
  o.pass = mismatched == 0 && worst <= kTopkSimTol && ties > 0;
  o.detail = fmt("100 queries x k=25 on 1000 x 1024: %zu id/order mismatches, %zu tied pairs checked, "
                 "max similarity diff %.2g",
                 mismatched, ties, worst);
  return o;
}

// ---- 4 ------------------------------------------------------------------

Outcome canny_behaviour() {
  Outcome o;
  const std::size_t w = 64, h = 48, step = 29;
  std::vector<std::uint8_t> flat(w * h * 3, 137);
  const auto e0 = canny_edges(flat, w, h);

  std::vector<std::uint8_t> img(w * h * 3);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) img[(y * w + x) * 3 + c] = x < step ? 40 : 210;
  const auto e1 = canny_edges(img, w, h);
  std::size_t bad_rows = 0;
  for (std::size_t y = 0; y < h; ++y) {
    std::vector<std::size_t> cols;
    for (std::size_t x = 0; x < w; ++x)
      if (e1.mask[y * w + x]) cols.push_back(x);
    // true edge lies between columns step-1 and step
    const bool one = cols.size() == 1 && cols[0] + 1 >= step - 1 && cols[0] <= step + 1;
    bad_rows += !one;
  }

  FixtureSpec spec;
  const auto f = generate_fixture(spec);
  const std::set<std::string> clouds(f.cloud_ids.begin(), f.cloud_ids.end());
  std::size_t right = 0;
  for (const auto& fp : f.footprints) {
    const auto chip = flag_obscured(extract_chip(f.raster, fp));
    right += (chip.quality_flag == QualityFlag::obscured) == (clouds.count(fp.id) > 0);
  }
  o.pass = e0.count() == 0 && bad_rows == 0 && right == f.footprints.size();
  o.detail = fmt("uniform: %zu edge px; step: %zu of %zu rows not a single px within 1 col; "
                 "flagging %zu/%zu correct (%zu clouds)",
                 e0.count(), bad_rows, h, right, f.footprints.size(), clouds.size());
  return o;
}

// ---- 5 ------------------------------------------------------------------

Outcome optimizer_correctness() {
  Outcome o;
  double g_lr = 0, g_mlp = 0, kkt = 0, box = 0, eq = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const std::size_t n = 8 + rng.below(10), d = 2 + rng.below(6), k = 2 + rng.below(4);
    const Matrix X = testsupport::random_matrix(n, d, seed);
    std::vector<int> y(n);
    for (auto& v : y) v = static_cast<int>(rng.below(k));
    const auto theta = testsupport::random_matrix(1, k * d + k, seed + 50, 0.5).data;
    g_lr = std::max(g_lr, oracle::gradient_rel_error(
                              [&](std::span<const double> t, std::span<double> g) {
                                return logreg_objective(X, y, k, 0.1 * static_cast<double>(seed), t, g);
                              },
                              theta));
    for (Activation a : {Activation::tanh, Activation::relu}) {
      MlpShape shape{{d, 3 + rng.below(5), 2 + rng.below(4), k}, a};
      const auto th = testsupport::random_matrix(1, shape.parameter_count(), seed + 90, 0.5).data;
      g_mlp = std::max(g_mlp, oracle::gradient_rel_error(
                                  [&](std::span<const double> t, std::span<double> g) {
                                    return mlp_objective(shape, X, y, 0.01, t, g);
                                  },
                                  th));
    }
  }
  Rng rng(99);
  for (KernelKind kern : {KernelKind::linear, KernelKind::poly, KernelKind::rbf, KernelKind::sigmoid}) {
    for (double C : {0.1, 1.0, 10.0}) {
      const std::size_t n = 60;
      const Matrix X = testsupport::random_matrix(n, 3, rng.below(1000));
      std::vector<int> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = X(i, 0) + 0.7 * X(i, 1) * X(i, 2) + 0.3 * rng.normal() > 0 ? 1 : -1;
      Matrix K(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) K(i, j) = kernel_value(kern, 0.2, X.row(i), X.row(j));
      const auto r = smo_solve(K, y, C);
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) {
        box = std::max({box, -r.alpha[i], r.alpha[i] - C});
        s += r.alpha[i] * y[i];
      }
      eq = std::max(eq, std::abs(s));
      kkt = std::max(kkt, oracle::kkt_violation(K, y, r.alpha, r.rho, C));
    }
  }
  o.pass = g_lr < kGradTol && g_mlp < kGradTol && box <= 0.0 && eq <= kKktTol && kkt <= kKktTol;
  o.detail = fmt("grad rel err logreg %.2g, mlp %.2g; SMO (4 kernels x 3 C) box excess %.2g, "
                 "|sum a y| %.2g, max KKT violation %.2g",
                 g_lr, g_mlp, std::max(box, 0.0), eq, kkt);
  return o;
}

// ---- 6 ------------------------------------------------------------------

Outcome search_spaces() {
  Outcome o;
  const auto grid = logreg_grid();
  std::set<std::tuple<std::string, double, std::string>> want, got;
  for (const char* p : {"l1", "l2"})
    for (double C : {0.001, 0.01, 0.1, 1.0, 10.0})
      for (const char* s : {"standard", "minmax", "robust"}) want.insert({p, C, s});
  for (const auto& c : grid) got.insert({to_string(c.penalty), c.C, to_string(c.scaler)});
  bool all_logreg = true;
  for (const auto& c : grid) all_logreg &= c.family == Family::logreg;

  Matrix X;
  std::vector<int> y;
  testsupport::two_blobs(120, 3.0, 5, X, y);
  std::vector<std::string> groups;
  for (std::size_t i = 0; i < y.size(); ++i) groups.push_back("g" + std::to_string(i % 12));
  const std::vector<std::string> cls = {"a", "b"};
  const auto dir = testsupport::temp_dir("acceptance_search");
  auto fingerprint = [&](const SearchResult& r, const std::string& name) {
    save_model(r.model, dir / name);
    return search_report_ndjson(r) + "#" + std::to_string(r.best) + "#" + slurp(dir / name);
  };
  const auto g = fingerprint(grid_search_cv(grid, X, y, groups, cls, 5, 11), "g");
  const auto r30 = fingerprint(random_search_cv(grid, X, y, groups, cls, 5, 30, 11), "r30");
  const auto r99 = fingerprint(random_search_cv(grid, X, y, groups, cls, 5, 99, 11), "r99");
  const auto svm1 = fingerprint(random_search_cv(svm_space(), X, y, groups, cls, 5, 12, 4), "s1");
  const auto svm2 = fingerprint(random_search_cv(svm_space(), X, y, groups, cls, 5, 12, 4), "s2");
  const auto g2 = fingerprint(grid_search_cv(grid, X, y, groups, cls, 5, 11), "g2");
  o.pass = grid.size() == 30 && got == want && all_logreg && g == r30 && g == r99 && svm1 == svm2 && g == g2;
  o.detail = fmt("grid %zu configs (%zu distinct, matches 2x5x3: %s); random n_iter=30/99 == exhaustive: %s; "
                 "same-seed reruns identical: %s",
                 grid.size(), got.size(), got == want ? "yes" : "no", g == r30 && g == r99 ? "yes" : "no",
                 svm1 == svm2 && g == g2 ? "yes" : "no");
  return o;
}

// ---- 7 ------------------------------------------------------------------

Outcome end_to_end() {
  Outcome o;
  omp_set_num_threads(1);
  const std::uint64_t seed = 1;
  FixtureSpec spec;  // 200 buildings, 4 + 4 classes, 6 sigma, seed 1
  spec.seed = seed;
  const auto dir = testsupport::temp_dir("acceptance_e2e");
  write_fixture(generate_fixture(spec), dir);

  // chip + filter
  const GeoRaster mosaic_raster = mosaic(load_mosaic_inputs(dir / "mosaic.ndjson"), spec.pixel_size);
  const auto footprints = load_footprints(dir / "footprints.geojson", spec.tile_size);
  std::set<std::string> usable;
  for (const auto& fp : footprints) {
    const auto chip = flag_obscured(extract_chip(mosaic_raster, fp));
    if (chip.quality_flag == QualityFlag::ok) usable.insert(fp.id);
  }
  const auto labels = read_labels(dir / "labels.csv");
  const auto embeddings = load_embeddings(dir / "embeddings.emb1");
  std::map<std::string, const EmbeddingRecord*> emb;
  for (const auto& e : embeddings) emb[e.building_id] = &e;
  const std::size_t dim = embeddings.front().vector.size();

  std::vector<PredictInput> deploy_inputs;
  for (const auto& e : embeddings)
    if (usable.count(e.building_id)) deploy_inputs.push_back({e.building_id, e.vector, ""});

  std::vector<PredictionRecord> all_records;
  std::string f1s;
  for (Task task : {Task::roof_pitch, Task::roof_material}) {
    std::vector<LabeledSample> samples;
    for (const auto& s : samples_for(labels, task))
      if (usable.count(s.building_id)) samples.push_back(s);
    const auto split = stratified_group_shuffle_split(samples, 0.2, seed);
    const auto& cls = task_classes(task);
    auto build = [&](std::size_t part, Matrix& X, std::vector<int>& y, std::vector<std::string>& g) {
      const auto idx = split.indices(samples, part);
      X = Matrix(idx.size(), dim);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& s = samples[idx[i]];
        const auto& v = emb.at(s.building_id)->vector;
        std::copy(v.begin(), v.end(), X.row(i).begin());
        y.push_back(static_cast<int>(std::find(cls.begin(), cls.end(), s.label) - cls.begin()));
        g.push_back(s.group_id);
      }
    };
    Matrix Xtr, Xte;
    std::vector<int> ytr, yte;
    std::vector<std::string> gtr, gte;
    build(DatasetSplit::kTrain, Xtr, ytr, gtr);
    build(DatasetSplit::kTest, Xte, yte, gte);
    const auto search = grid_search_cv(logreg_grid(), Xtr, ytr, gtr, cls, 5, seed);
    const auto cm = confusion_matrix(yte, predict_index(search.model, Xte), cls);
    const auto report = macro_report(cm);
    if (report.macro_f1 < kE2eMinF1) o.pass = false;
    std::string misses;
    for (std::size_t c = 0; c < cls.size(); ++c)
      if (report.per_class[c].f1 < 1.0)
        misses += fmt(" %s %zu/%zu", cls[c].c_str(), static_cast<std::size_t>(cm.counts[c][c]),
                      static_cast<std::size_t>(report.per_class[c].support));
    f1s += fmt("%s test macro-F1 %.4f%s%s; ", to_string(task).c_str(), report.macro_f1,
               misses.empty() ? "" : " (recall", misses.empty() ? "" : (misses + ")").c_str());

    const auto model_path = dir / (to_string(task) + ".rmdl");
    save_model(search.model, model_path);
    const auto recs = batch_predict(parse_provider(model_path.string(), task), deploy_inputs);
    all_records.insert(all_records.end(), recs.begin(), recs.end());
  }

  // deploy checks on the exported file
  export_geojson(all_records, footprints, dir / "predictions.geojson");
  std::ifstream in(dir / "predictions.geojson");
  const auto gj = nlohmann::json::parse(in);
  double worst_sum = 0;
  std::size_t vectors = 0;
  for (const auto& feat : gj["features"]) {
    for (Task t : {Task::roof_pitch, Task::roof_material}) {
      if (feat["properties"][to_string(t)].is_null()) continue;
      double s = 0;
      for (const auto& c : task_classes(t)) s += feat["properties"]["prob_" + c].get<double>();
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      ++vectors;
    }
  }
  std::string pct;
  bool pct_ok = true;
  for (Task t : {Task::roof_pitch, Task::roof_material}) {
    const auto& w = t == Task::roof_pitch ? spec.pitch_weights : spec.material_weights;
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    const auto stats = aggregate_stats(all_records, t);
    std::string got, want;
    for (std::size_t c = 0; c < w.size(); ++c) {
      const long expect = std::lround(100.0 * w[c] / wsum);
      pct_ok &= stats.classes[c].percent == expect;
      got += (c ? "/" : "") + std::to_string(stats.classes[c].percent);
      want += (c ? "/" : "") + std::to_string(expect);
    }
    pct += fmt("%s %s (want %s) ", to_string(t).c_str(), got.c_str(), want.c_str());
  }
  const bool sums_ok = worst_sum <= kProbSumTol && vectors == 2 * deploy_inputs.size();
  o.pass = o.pass && sums_ok && pct_ok;
  o.detail = f1s + fmt("GeoJSON %zu vectors, max |sum-1| %.2g; percents ", vectors, worst_sum) + pct;
  return o;
}

// ---- 8 ------------------------------------------------------------------

Outcome preprocessing_contract() {
  Outcome o;
  ImageChip chip;
  chip.building_id = "p";
  chip.width = 100;
  chip.height = 50;
  chip.pixels.resize(100 * 50 * 3);
  chip.pad_mask.assign(100 * 50, false);
  Rng rng(8);
  for (auto& v : chip.pixels) v = static_cast<std::uint8_t>(rng.below(256));
  const auto sq = pad_to_square(chip);
  const double diff = oracle::preprocess_max_diff(chip);
  const auto t = preprocess_chip(chip);
  const auto a = augment_chip(t, 0);
  const auto p = augment_params(0);
  const bool identity = a.values == t.values && !p.hflip && !p.vflip && p.angle_deg == 0.0;
  o.pass = sq.width == 100 && sq.height == 100 && diff <= kPreprocessTol && identity;
  o.detail = fmt("100x50 -> %zux%zu -> 224x224, max |lib - oracle| %.2g; identity augmentation exact: %s", sq.width,
                 sq.height, diff, identity ? "yes" : "no");
  return o;
}

// ---- 9 ------------------------------------------------------------------

Outcome provider_protocol() {
  Outcome o;
  Rng rng(9);
  std::vector<PredictInput> in(1000);
  for (std::size_t i = 0; i < in.size(); ++i) {
    in[i].id = fmt("bldg-%04zu", i);
    std::size_t left = 64;
    in[i].vector.resize(4);
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t take = rng.below(left + 1);
      in[i].vector[c] = static_cast<float>(take) / 64.0f;
      left -= take;
    }
    in[i].vector[3] = static_cast<float>(left) / 64.0f;
  }
  const std::string exe = FIXTURE_PROVIDER;
  auto cfg = parse_provider("cmd:" + exe + " echo", Task::roof_pitch);
  cfg.batch_size = 100;
  const auto recs = batch_predict(cfg, in);
  std::size_t missing = 0, altered = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (i >= recs.size() || recs[i].building_id != in[i].id || !recs[i].ok()) {
      ++missing;
      continue;
    }
    for (std::size_t c = 0; c < 4; ++c) altered += recs[i].probs[c] != in[i].vector[c];
  }
  std::vector<PredictInput> few(in.begin(), in.begin() + 50);
  const auto high = batch_predict(parse_provider("cmd:" + exe + " scale 1.5", Task::roof_pitch), few);
  const auto near = batch_predict(parse_provider("cmd:" + exe + " scale 1.0005", Task::roof_pitch), few);
  std::size_t rejected = 0, renormalized = 0;
  for (std::size_t i = 0; i < few.size(); ++i) {
    rejected += !high[i].ok();
    if (!near[i].ok()) continue;
    const double s = std::accumulate(near[i].probs.begin(), near[i].probs.end(), 0.0);
    bool same = std::abs(s - 1.0) <= 1e-12;
    for (std::size_t c = 0; c < 4; ++c) same &= std::abs(near[i].probs[c] - few[i].vector[c]) <= 1e-12;
    renormalized += same;
  }
  o.pass = recs.size() == 1000 && missing == 0 && altered == 0 && rejected == few.size() && renormalized == few.size();
  o.detail = fmt("1000 ids via subprocess: %zu missing, %zu altered values; sum 1.5 rejected %zu/%zu; "
                 "sum 1.0005 renormalized %zu/%zu",
                 missing, altered, rejected, few.size(), renormalized, few.size());
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit_s;  // 0 = no runtime limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"metric oracle equivalence", 5, metric_oracle},
      {"split integrity", 10, split_integrity},
      {"top-k exactness", 10, topk_exactness},
      {"canny behavior", 5, canny_behaviour},
      {"optimizer correctness", 30, optimizer_correctness},
      {"search spaces", 0, search_spaces},
      {"end-to-end pipeline", 120, end_to_end},
      {"preprocessing contract", 0, preprocessing_contract},
      {"external provider protocol", 0, provider_protocol},
  };
  const int threads = omp_get_max_threads();
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    omp_set_num_threads(threads);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string limit = "no limit";
    if (criteria[i].limit_s > 0) {
      limit = fmt("limit %.0fs", criteria[i].limit_s);
      if (secs >= criteria[i].limit_s) {
        o.pass = false;
        o.detail += " [over time]";
      }
    }
    failed += !o.pass;
    std::printf("%s  %zu. %-27s %7.2fs (%s)  %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, secs,
                limit.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed;
}
