#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"
#include "rooftop/canny.hpp"
#include "rooftop/chip.hpp"
#include "rooftop/datasplit.hpp"
#include "rooftop/deploy.hpp"
#include "rooftop/embedding.hpp"
#include "rooftop/footprint.hpp"
#include "rooftop/labels.hpp"
#include "rooftop/metrics.hpp"
#include "rooftop/raster_io.hpp"
#include "rooftop/raster_ops.hpp"
#include "rooftop/review_service.hpp"
#include "rooftop/search.hpp"
#include "rooftop/testkit.hpp"

namespace fs = std::filesystem;
using namespace rooftop;
using nlohmann::json;

namespace {

Task parse_task(const std::string& s) { return task_from(s); }

std::set<std::string> usable_ids(const fs::path& manifest) {
  std::set<std::string> ok;
  for (const auto& r : read_chip_manifest(manifest))
    if (r.quality_flag == QualityFlag::ok) ok.insert(r.building_id);
  return ok;
}

// Rows of one task that have an embedding (and a usable chip when a manifest is given).
struct Design {
  std::vector<LabeledSample> samples;
  Matrix X;
  std::vector<int> y;
  std::vector<std::string> groups;
};

Design design_for(const std::vector<LabeledSample>& labels, const std::vector<EmbeddingRecord>& emb, Task task,
                  const std::string& part, const fs::path& chips_manifest) {
  std::map<std::string, const EmbeddingRecord*> by_id;
  for (const auto& e : emb) by_id[e.building_id] = &e;
  std::optional<std::set<std::string>> ok;
  if (!chips_manifest.empty()) ok = usable_ids(chips_manifest);
  Design d;
  std::size_t skipped = 0;
  for (const auto& s : samples_for(labels, task)) {
    if (!part.empty() && s.split != part) continue;
    if (!by_id.count(s.building_id) || (ok && !ok->count(s.building_id))) {
      ++skipped;
      continue;
    }
    d.samples.push_back(s);
  }
  if (skipped) std::fprintf(stderr, "skipped %zu samples without an embedding or usable chip\n", skipped);
  if (d.samples.empty()) throw std::runtime_error("no samples for " + to_string(task) + (part.empty() ? "" : " part " + part));
  const auto& cls = task_classes(task);
  const std::size_t dim = emb.front().vector.size();
  d.X = Matrix(d.samples.size(), dim);
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const auto& v = by_id.at(d.samples[i].building_id)->vector;
    std::copy(v.begin(), v.end(), d.X.row(i).begin());
    d.y.push_back(static_cast<int>(std::find(cls.begin(), cls.end(), d.samples[i].label) - cls.begin()));
    d.groups.push_back(d.samples[i].group_id);
  }
  return d;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rooftop classification pipeline"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (0 keeps the runtime default)");

  // fixture
  auto* fixture = app.add_subcommand("fixture", "Write a synthetic dataset");
  FixtureSpec fspec;
  fs::path fixture_out;
  fixture->add_option("--seed", fspec.seed);
  fixture->add_option("--buildings", fspec.buildings);
  fixture->add_option("--dim", fspec.embedding_dim, "embedding dimension");
  fixture->add_option("--separation", fspec.separation, "class center distance in noise sigmas");
  fixture->add_option("--out", fixture_out)->required();

  // mosaic
  auto* mos = app.add_subcommand("mosaic", "Composite rasters listed in an NDJSON manifest");
  fs::path mos_manifest, mos_out;
  double mos_pixel = 0.5;
  mos->add_option("--manifest", mos_manifest)->required()->check(CLI::ExistingFile);
  mos->add_option("--pixel-size", mos_pixel);
  mos->add_option("--out", mos_out, ".tif (deflate GeoTIFF) or .png (+ world file)")->required();

  // chips
  auto* chips = app.add_subcommand("chips", "Crop one chip per footprint and flag obscured ones");
  fs::path ch_raster, ch_fp, ch_out;
  double ch_scale = kChipScale, ch_tile = kDefaultTileSize, ch_threshold = kObscuredThreshold;
  chips->add_option("--raster", ch_raster)->required()->check(CLI::ExistingFile);
  chips->add_option("--footprints", ch_fp)->required()->check(CLI::ExistingFile);
  chips->add_option("--out", ch_out)->required();
  chips->add_option("--scale", ch_scale, "MBR enlargement factor");
  chips->add_option("--tile-size", ch_tile, "grouping grid size in CRS units");
  chips->add_option("--threshold", ch_threshold, "edge density below which a chip is obscured");

  // filter
  auto* filter = app.add_subcommand("filter", "Recompute quality flags of a chip directory");
  fs::path fl_dir, fl_masks;
  CannyParams canny;
  double fl_threshold = kObscuredThreshold;
  filter->add_option("--chips", fl_dir, "directory holding chips.ndjson")->required()->check(CLI::ExistingDirectory);
  filter->add_option("--sigma", canny.sigma);
  filter->add_option("--low", canny.low_frac, "low threshold, fraction of the gradient maximum");
  filter->add_option("--high", canny.high_frac, "high threshold, fraction of the gradient maximum");
  filter->add_option("--threshold", fl_threshold);
  filter->add_option("--edge-masks", fl_masks, "write <id>.edges.png here for audit");

  // index
  auto* index = app.add_subcommand("index", "Embedding index");
  index->require_subcommand(1);
  auto* ibuild = index->add_subcommand("build", "Validate embeddings and write them as EMB1");
  fs::path ib_in, ib_out;
  ibuild->add_option("--embeddings", ib_in, "EMB1 or CSV")->required()->check(CLI::ExistingFile);
  ibuild->add_option("--out", ib_out);
  auto* iquery = index->add_subcommand("query", "Top-k cosine neighbours of one building");
  fs::path iq_in;
  std::string iq_id;
  std::size_t iq_k = 25;
  iquery->add_option("--embeddings", iq_in)->required()->check(CLI::ExistingFile);
  iquery->add_option("--id", iq_id)->required();
  iquery->add_option("--k", iq_k);

  // split
  auto* split = app.add_subcommand("split", "Group-aware stratified split per task");
  fs::path sp_labels, sp_out;
  double sp_frac = 0.2;
  std::uint64_t sp_seed = 0;
  std::size_t sp_kfold = 0;
  split->add_option("--labels", sp_labels)->required()->check(CLI::ExistingFile);
  split->add_option("--test-frac", sp_frac);
  split->add_option("--kfold", sp_kfold, "write fold indices instead of train/test");
  split->add_option("--seed", sp_seed);
  split->add_option("--out", sp_out, "defaults to overwriting --labels");

  // tune
  auto* tune = app.add_subcommand("tune", "Cross-validated search on the train part, refit the best config");
  fs::path tu_labels, tu_emb, tu_chips, tu_model, tu_report;
  std::string tu_task, tu_family = "logreg", tu_part = "train";
  std::size_t tu_folds = 5, tu_iter = 0;
  std::uint64_t tu_seed = 0;
  tune->add_option("--labels", tu_labels)->required()->check(CLI::ExistingFile);
  tune->add_option("--embeddings", tu_emb)->required()->check(CLI::ExistingFile);
  tune->add_option("--task", tu_task)->required();
  tune->add_option("--family", tu_family)->check(CLI::IsMember({"logreg", "svm", "mlp"}));
  tune->add_option("--n-iter", tu_iter, "random search size; 0 evaluates the whole space");
  tune->add_option("--folds", tu_folds);
  tune->add_option("--seed", tu_seed);
  tune->add_option("--part", tu_part, "split value to train on; empty uses every row");
  tune->add_option("--chips", tu_chips, "chips.ndjson; obscured chips are left out");
  tune->add_option("--model", tu_model)->required();
  tune->add_option("--report", tu_report, "per-config NDJSON");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Macro-averaged scores on a labeled part");
  fs::path ev_labels, ev_emb, ev_model, ev_chips, ev_json;
  std::string ev_task, ev_part = "test";
  eval->add_option("--labels", ev_labels)->required()->check(CLI::ExistingFile);
  eval->add_option("--embeddings", ev_emb)->required()->check(CLI::ExistingFile);
  eval->add_option("--model", ev_model)->required()->check(CLI::ExistingFile);
  eval->add_option("--task", ev_task)->required();
  eval->add_option("--part", ev_part);
  eval->add_option("--chips", ev_chips);
  eval->add_option("--json", ev_json);

  // predict
  auto* pred = app.add_subcommand("predict", "Batch inference through a model provider");
  fs::path pr_emb, pr_chips, pr_out;
  std::string pr_task, pr_provider;
  std::size_t pr_batch = 512, pr_conn = 4;
  long pr_timeout = 60000;
  pred->add_option("--task", pr_task)->required();
  pred->add_option("--provider", pr_provider, "model.rmdl, cmd:<command> or http://host:port/path")->required();
  pred->add_option("--embeddings", pr_emb)->required()->check(CLI::ExistingFile);
  pred->add_option("--chips", pr_chips, "chips.ndjson; obscured chips are left out");
  pred->add_option("--batch", pr_batch);
  pred->add_option("--connections", pr_conn);
  pred->add_option("--timeout-ms", pr_timeout);
  pred->add_option("--out", pr_out)->required();

  // export
  auto* exp = app.add_subcommand("export", "Join predictions to footprints as GeoJSON");
  std::vector<fs::path> ex_preds;
  fs::path ex_fp, ex_out;
  exp->add_option("--predictions", ex_preds)->required()->check(CLI::ExistingFile);
  exp->add_option("--footprints", ex_fp)->required()->check(CLI::ExistingFile);
  exp->add_option("--geojson", ex_out)->required();

  // stats
  auto* stats = app.add_subcommand("stats", "Class shares of predictions");
  std::vector<fs::path> st_preds;
  std::string st_task;
  bool st_json = false;
  stats->add_option("--predictions", st_preds)->required()->check(CLI::ExistingFile);
  stats->add_option("--task", st_task)->required();
  stats->add_flag("--json", st_json);

  // serve
  auto* serve = app.add_subcommand("serve", "Review service HTTP backend");
  ReviewConfig rc;
  std::string sv_host = "127.0.0.1";
  int sv_port = 8080;
  serve->add_option("--host", sv_host);
  serve->add_option("--port", sv_port);
  serve->add_option("--chips", rc.chips_dir)->required()->check(CLI::ExistingDirectory);
  serve->add_option("--labels", rc.labels)->required()->check(CLI::ExistingFile);
  serve->add_option("--embeddings", rc.embeddings);
  serve->add_option("--decisions", rc.decisions);
  serve->add_option("--static", rc.static_dir);

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*fixture) {
      const auto f = generate_fixture(fspec);
      write_fixture(f, fixture_out);
      std::printf("%zu buildings (%zu clouds) written to %s\n", f.footprints.size(), f.cloud_ids.size(),
                  fixture_out.c_str());
    } else if (*mos) {
      const auto m = mosaic(load_mosaic_inputs(mos_manifest), mos_pixel);
      if (mos_out.extension() == ".png")
        write_png_raster(m, mos_out);
      else
        write_geotiff(m, mos_out, TiffCompression::deflate);
      std::printf("%zux%zu mosaic written to %s\n", m.width, m.height, mos_out.c_str());
    } else if (*chips) {
      const auto raster = read_raster(ch_raster, 3);
      const auto fps = load_footprints(ch_fp, ch_tile);
      fs::create_directories(ch_out);
      std::vector<ChipRecord> records(fps.size());
      std::vector<std::string> errors(fps.size());
#pragma omp parallel for schedule(dynamic)
      for (std::size_t i = 0; i < fps.size(); ++i) {
        try {
          auto chip = flag_obscured(extract_chip(raster, fps[i], ch_scale), ch_threshold);
          write_chip_png(chip, ch_out / (chip.building_id + ".png"));
          records[i] = chip_record(chip);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
      std::vector<ChipRecord> kept;
      std::size_t obscured = 0;
      for (std::size_t i = 0; i < fps.size(); ++i) {
        if (!errors[i].empty()) {
          std::fprintf(stderr, "%s: %s\n", fps[i].id.c_str(), errors[i].c_str());
          continue;
        }
        obscured += records[i].quality_flag == QualityFlag::obscured;
        kept.push_back(records[i]);
      }
      write_chip_manifest(kept, ch_out / "chips.ndjson");
      std::printf("%zu chips, %zu obscured, %zu failed\n", kept.size(), obscured, fps.size() - kept.size());
    } else if (*filter) {
      auto records = read_chip_manifest(fl_dir / "chips.ndjson");
      if (!fl_masks.empty()) fs::create_directories(fl_masks);
      std::vector<double> density(records.size());
#pragma omp parallel for schedule(dynamic)
      for (std::size_t i = 0; i < records.size(); ++i) {
        auto chip = read_chip_png(fl_dir / (records[i].building_id + ".png"), records[i].building_id);
        density[i] = chip_edge_density(chip, canny);
        records[i].quality_flag = density[i] < fl_threshold ? QualityFlag::obscured : QualityFlag::ok;
        if (!fl_masks.empty()) {
          const auto e = canny_edges(chip.pixels, chip.width, chip.height, canny);
          PngImage img{e.width, e.height, 1, {}};
          for (bool b : e.mask) img.data.push_back(b ? 255 : 0);
          write_png(img, fl_masks / (records[i].building_id + ".edges.png"));
        }
      }
      write_chip_manifest(records, fl_dir / "chips.ndjson");
      std::size_t obscured = 0;
      for (const auto& r : records) obscured += r.quality_flag == QualityFlag::obscured;
      std::printf("%zu chips, %zu obscured\n", records.size(), obscured);
    } else if (*ibuild) {
      auto recs = load_embeddings(ib_in);
      const auto idx = build_index(recs);
      if (!ib_out.empty()) write_embeddings(recs, ib_out);
      std::printf("%zu vectors, dim %zu\n", idx.size(), idx.dim());
    } else if (*iquery) {
      const auto idx = build_index(load_embeddings(iq_in));
      json out = json::array();
      for (const auto& n : cosine_topk(idx, iq_id, iq_k)) out.push_back({{"id", n.id}, {"similarity", n.similarity}});
      std::cout << out.dump(1) << "\n";
    } else if (*split) {
      auto labels = read_labels(sp_labels);
      std::vector<LabeledSample> out;
      for (Task t : {Task::roof_pitch, Task::roof_material}) {
        auto samples = samples_for(labels, t);
        if (samples.empty()) continue;
        const auto s = sp_kfold ? assign_group_kfold(samples, sp_kfold, sp_seed)
                                : stratified_group_shuffle_split(samples, sp_frac, sp_seed);
        annotate_split(samples, s);
        const auto report = check_split(s, samples);
        std::printf("%s:", to_string(t).c_str());
        for (std::size_t p = 0; p < s.parts; ++p) std::printf(" %s=%zu", s.part_name(p).c_str(), s.part_size(p));
        std::printf("  max class-share deviation %.3f, violations %zu\n", report.max_deviation(),
                    report.violation_count());
        for (const auto& w : s.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        out.insert(out.end(), samples.begin(), samples.end());
      }
      write_labels(out, sp_out.empty() ? sp_labels : sp_out);
    } else if (*tune) {
      const Task task = parse_task(tu_task);
      const auto emb = load_embeddings(tu_emb);
      const auto d = design_for(read_labels(tu_labels), emb, task, tu_part, tu_chips);
      const auto space = search_space(tu_family == "logreg" ? Family::logreg
                                      : tu_family == "svm"  ? Family::svm
                                                            : Family::mlp);
      const auto& cls = task_classes(task);
      const auto r = tu_iter ? random_search_cv(space, d.X, d.y, d.groups, cls, tu_folds, tu_iter, tu_seed)
                             : grid_search_cv(space, d.X, d.y, d.groups, cls, tu_folds, tu_seed);
      save_model(r.model, tu_model);
      if (!tu_report.empty()) write_search_report(r, tu_report);
      std::printf("%zu configs on %zu rows; best %s, mean CV macro-F1 %.4f\n", r.evaluated.size(), d.samples.size(),
                  r.best_score().spec.describe().c_str(), r.best_score().mean_f1);
    } else if (*eval) {
      const Task task = parse_task(ev_task);
      const auto model = load_model(ev_model);
      const auto d = design_for(read_labels(ev_labels), load_embeddings(ev_emb), task, ev_part, ev_chips);
      const auto cm = confusion_matrix(d.y, predict_index(model, d.X), task_classes(task));
      const auto r = macro_report(cm);
      std::cout << report_table(r);
      if (!ev_json.empty()) write_text(ev_json, report_json(r, cm));
    } else if (*pred) {
      const Task task = parse_task(pr_task);
      auto cfg = parse_provider(pr_provider, task);
      cfg.batch_size = pr_batch;
      cfg.max_connections = pr_conn;
      cfg.timeout = std::chrono::milliseconds(pr_timeout);
      std::optional<std::set<std::string>> ok;
      if (!pr_chips.empty()) ok = usable_ids(pr_chips);
      std::vector<PredictInput> inputs;
      for (auto& e : load_embeddings(pr_emb))
        if (!ok || ok->count(e.building_id)) inputs.push_back({e.building_id, std::move(e.vector), ""});
      const auto recs = batch_predict(cfg, inputs);
      write_predictions(recs, pr_out);
      std::size_t failed = 0;
      for (const auto& r : recs) failed += !r.ok();
      std::printf("%zu predictions, %zu failed\n", recs.size(), failed);
      return failed ? 2 : 0;
    } else if (*exp) {
      std::vector<PredictionRecord> recs;
      for (const auto& p : ex_preds) {
        auto r = read_predictions(p);
        recs.insert(recs.end(), r.begin(), r.end());
      }
      export_geojson(recs, load_footprints(ex_fp), ex_out);
    } else if (*stats) {
      std::vector<PredictionRecord> recs;
      for (const auto& p : st_preds) {
        auto r = read_predictions(p);
        recs.insert(recs.end(), r.begin(), r.end());
      }
      const auto s = aggregate_stats(recs, parse_task(st_task));
      std::cout << (st_json ? stats_json(s) + "\n" : stats_table(s));
    } else if (*serve) {
      ReviewService svc(rc);
      if (!rc.embeddings.empty())
        svc.set_index(std::make_shared<const EmbeddingIndex>(build_index(load_embeddings(rc.embeddings))));
      std::printf("serving on http://%s:%d\n", sv_host.c_str(), sv_port);
      std::fflush(stdout);
      if (!svc.listen(sv_host, sv_port)) throw std::runtime_error("cannot listen on port " + std::to_string(sv_port));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
