#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "rooftop/chip.hpp"
#include "rooftop/review_service.hpp"
#include "rooftop/testkit.hpp"
#include "support.hpp"

using namespace rooftop;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Fixture labels, embeddings and fake chips in a fresh directory, plus a
// running service on an ephemeral port.
struct Harness {
  fs::path dir;
  Fixture fx;
  std::unique_ptr<ReviewService> svc;
  std::unique_ptr<httplib::Client> cli;
  std::thread thread;

  explicit Harness(const std::string& name, bool with_index = true, bool empty_labels = false) {
    dir = testsupport::temp_dir(name);
    FixtureSpec spec;
    spec.buildings = 80;
    spec.embedding_dim = 16;
    fx = generate_fixture(spec);
    fs::create_directories(dir / "chips");
    for (const auto& e : fx.embeddings) std::ofstream(dir / "chips" / (e.building_id + ".png"), std::ios::binary) << "PNG:" << e.building_id << std::string("\0\x01\xff", 3);
    std::vector<ChipRecord> manifest;
    for (std::size_t i = 0; i + 1 < fx.embeddings.size(); ++i)  // last one left out on purpose
      manifest.push_back({fx.footprints[i].id, "mosaic", 0, 0, 10, 10, 0.0, QualityFlag::ok, fx.footprints[i].tile_id});
    write_chip_manifest(manifest, dir / "chips" / "chips.ndjson");
    write_labels(empty_labels ? std::vector<LabeledSample>{} : fx.labels, dir / "labels.csv");
    write_embeddings(fx.embeddings, dir / "emb.emb1");
    start(with_index);
  }

  void start(bool with_index = true) {
    ReviewConfig cfg;
    cfg.chips_dir = dir / "chips";
    cfg.labels = dir / "labels.csv";
    if (with_index) cfg.embeddings = dir / "emb.emb1";
    svc = std::make_unique<ReviewService>(cfg);
    const int port = svc->bind_any();
    thread = std::thread([this] { svc->serve(); });
    svc->wait_until_ready();
    cli = std::make_unique<httplib::Client>("127.0.0.1", port);
  }

  void stop() {
    svc->stop();
    if (thread.joinable()) thread.join();
  }

  ~Harness() { stop(); }

  json get(const std::string& path, int expect = 200) {
    auto res = cli->Get(path);
    REQUIRE(res);
    CHECK(res->status == expect);
    return json::parse(res->body);
  }

  int post(const json& body) {
    auto res = cli->Post("/api/labels", body.dump(), "application/json");
    REQUIRE(res);
    return res->status;
  }

  // an unlabeled-for-task building near a minority query
  std::string first_unlabeled(const std::string& query, Task t) {
    for (const auto& item : get("/api/similar?query_id=" + query + "&k=79&task=" + to_string(t)))
      if (!item["labeled"].get<bool>()) return item["building_id"];
    return {};
  }
};

json decision(const std::string& id, const std::string& label, const std::string& verdict,
              const std::string& task = "roof_pitch") {
  return {{"building_id", id}, {"task", task}, {"label", label}, {"decision", verdict}, {"annotator", "t"}};
}

std::map<std::string, std::size_t> recount(const fs::path& labels, Task t) {
  std::map<std::string, std::size_t> out;
  for (const auto& s : read_labels(labels))
    if (s.task == t) ++out[s.label];
  return out;
}

}  // namespace

TEST_CASE("similar returns 25 items equal to the direct top-k call") {
  Harness h("review_similar");
  const std::string q = h.fx.embeddings[3].building_id;
  const auto items = h.get("/api/similar?query_id=" + q);
  REQUIRE(items.size() == 25);
  const auto oracle = cosine_topk(*h.svc->index(), q, 25);
  for (std::size_t i = 0; i < 25; ++i) {
    CHECK(items[i]["building_id"] == oracle[i].id);
    CHECK(items[i]["similarity"].get<double>() == oracle[i].similarity);
    CHECK(items[i]["chip_url"] == "/api/chips/" + oracle[i].id + ".png");
    if (i) CHECK(items[i - 1]["similarity"].get<double>() >= items[i]["similarity"].get<double>());
    // every fixture building has a pitch label
    CHECK(items[i]["labeled"].get<bool>());
    CHECK(items[i]["current_label"] == h.fx.pitch_truth.at(oracle[i].id));
  }
  CHECK(h.get("/api/similar?query_id=" + q + "&k=1000").size() == h.fx.embeddings.size() - 1);
  CHECK(h.get("/api/similar?query_id=" + q + "&k=3").size() == 3);
}

TEST_CASE("similar error statuses") {
  Harness h("review_errors");
  h.get("/api/similar?query_id=nope", 404);
  h.get("/api/similar", 400);
  h.get("/api/similar?query_id=" + h.fx.embeddings[0].building_id + "&k=0", 400);
  h.get("/api/similar?query_id=" + h.fx.embeddings[0].building_id + "&task=walls", 400);
  h.stop();
  h.start(false);
  h.get("/api/similar?query_id=" + h.fx.embeddings[0].building_id, 409);
  h.svc->set_index(std::make_shared<EmbeddingIndex>(build_index(h.fx.embeddings)));
  CHECK(h.get("/api/similar?query_id=" + h.fx.embeddings[0].building_id).size() == 25);
}

TEST_CASE("label posts") {
  Harness h("review_labels", true, true);
  const std::string a = h.fx.embeddings[0].building_id, b = h.fx.embeddings[1].building_id;
  const auto before = read_labels(h.dir / "labels.csv").size();
  CHECK(before == 0);

  CHECK(h.post(decision(a, "flat", "accept")) == 201);
  auto labels = read_labels(h.dir / "labels.csv");
  REQUIRE(labels.size() == 1);
  CHECK(labels[0].origin == Origin::mined);
  CHECK(labels[0].label == "flat");
  CHECK(labels[0].group_id == h.fx.footprints[0].tile_id);
  const std::string last = h.fx.embeddings.back().building_id;
  CHECK(h.post(decision(last, "gable", "accept")) == 201);
  CHECK(read_labels(h.dir / "labels.csv").back().group_id == "unassigned");

  CHECK(h.post(decision(b, "hip", "reject")) == 201);
  CHECK(read_labels(h.dir / "labels.csv").size() == 2);
  CHECK(h.post(decision(b, "hip", "accept")) == 201);
  labels = read_labels(h.dir / "labels.csv");
  REQUIRE(labels.size() == 3);
  CHECK(std::count_if(labels.begin(), labels.end(), [&](auto& s) { return s.building_id == b && s.label == "hip"; }) == 1);

  CHECK(h.post(decision(a, "flat", "accept", "roof_material")) == 422);
  CHECK(h.post(decision(a, "dome", "accept")) == 422);
  CHECK(h.post(decision(a, "flat", "maybe")) == 400);
  CHECK(h.post(json{{"building_id", a}}) == 400);
  auto res = h.cli->Post("/api/labels", "{not json", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  std::size_t lines = 0;
  std::ifstream log(h.dir / "decisions.ndjson");
  for (std::string l; std::getline(log, l);) ++lines;
  CHECK(lines == 4);
}

TEST_CASE("review round: accept 3, reject 2, then replay") {
  Harness h("review_round");
  const auto base_csv = slurp(h.dir / "labels.csv");
  const auto base_count = read_labels(h.dir / "labels.csv").size();
  const auto queries = h.get("/api/queries?task=roof_pitch");
  REQUIRE_FALSE(queries.empty());
  const std::string q = queries[0]["building_id"];
  const std::string cls = queries[0]["label"];
  const auto cands = h.get("/api/similar?query_id=" + q);
  REQUIRE(cands.size() == 25);
  std::vector<std::string> accepted, rejected;
  for (std::size_t i = 0; i < 5; ++i) {
    const std::string id = cands[i]["building_id"];
    const bool acc = i < 3;
    CHECK(h.post(decision(id, cls, acc ? "accept" : "reject")) == 201);
    (acc ? accepted : rejected).push_back(id);
  }
  std::size_t lines = 0;
  {
    std::ifstream log(h.dir / "decisions.ndjson");
    for (std::string l; std::getline(log, l);) ++lines;
  }
  CHECK(lines == 5);
  const auto now = read_labels(h.dir / "labels.csv");
  CHECK(now.size() == base_count);  // fixture buildings are already labeled: accepts overwrite
  std::map<std::string, LabeledSample> base_pitch, now_pitch;
  for (const auto& s : h.fx.labels)
    if (s.task == Task::roof_pitch) base_pitch[s.building_id] = s;
  for (const auto& s : now)
    if (s.task == Task::roof_pitch) now_pitch[s.building_id] = s;
  for (const auto& id : accepted) {
    CHECK(now_pitch[id].origin == Origin::mined);
    CHECK(now_pitch[id].label == cls);
    CHECK(now_pitch[id].group_id == base_pitch[id].group_id);
  }
  for (const auto& id : rejected) CHECK(now_pitch[id].label == base_pitch[id].label);

  // rejected candidates never come back for this task
  for (const auto& item : h.get("/api/similar?query_id=" + q + "&k=1000"))
    for (const auto& r : rejected) CHECK(item["building_id"] != r);
  CHECK(h.get("/api/similar?query_id=" + q + "&k=1000").size() == h.fx.embeddings.size() - 1 - rejected.size());

  // stats equal a recount of the labels file
  const auto stats = h.get("/api/stats");
  for (Task t : {Task::roof_pitch, Task::roof_material}) {
    const auto oracle = recount(h.dir / "labels.csv", t);
    for (const auto& c : task_classes(t)) {
      const auto it = oracle.find(c);
      CHECK(stats[to_string(t)][c].get<std::size_t>() == (it == oracle.end() ? 0 : it->second));
    }
  }

  // replay from empty over the base snapshot gives the same bytes
  LabelState replay;
  replay.base = read_labels(h.dir / "labels.csv.base.csv");
  CHECK(slurp(h.dir / "labels.csv.base.csv") == base_csv);
  for (const auto& d : read_decision_log(h.dir / "decisions.ndjson")) replay.apply(d);
  CHECK(labels_to_csv(replay.effective()) == slurp(h.dir / "labels.csv"));

  // restarting the service replays the log onto the snapshot
  const auto after = slurp(h.dir / "labels.csv");
  h.stop();
  std::filesystem::remove(h.dir / "labels.csv");
  h.start();
  CHECK(slurp(h.dir / "labels.csv") == after);
}

TEST_CASE("accepting unlabeled buildings grows the labels file") {
  Harness h("review_growth");
  // drop material labels so accepts add rows
  std::vector<LabeledSample> pitch_only;
  for (const auto& s : h.fx.labels)
    if (s.task == Task::roof_pitch) pitch_only.push_back(s);
  h.stop();
  fs::remove(h.dir / "labels.csv.base.csv");
  write_labels(pitch_only, h.dir / "labels.csv");
  h.start();
  const auto n0 = read_labels(h.dir / "labels.csv").size();
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(h.post(decision(h.fx.embeddings[i].building_id, "concrete_cement", "accept", "roof_material")) == 201);
  CHECK(h.post(decision(h.fx.embeddings[3].building_id, "incomplete", "reject", "roof_material")) == 201);
  CHECK(read_labels(h.dir / "labels.csv").size() == n0 + 3);
}

TEST_CASE("chips, queries and stats") {
  Harness h("review_misc");
  const std::string id = h.fx.embeddings[5].building_id;
  auto res = h.cli->Get("/api/chips/" + id + ".png");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == slurp(h.dir / "chips" / (id + ".png")));
  CHECK(res->get_header_value("Content-Type") == "image/png");
  res = h.cli->Get("/api/chips/missing.png");
  REQUIRE(res);
  CHECK(res->status == 404);

  // queries are minority-class exemplars only
  std::map<std::string, std::size_t> counts;
  for (const auto& s : h.fx.labels)
    if (s.task == Task::roof_pitch) ++counts[s.label];
  for (const auto& q : h.get("/api/queries?task=roof_pitch")) CHECK(counts[q["label"]] < 20);
  h.get("/api/queries?task=x", 400);

  const auto stats = h.get("/api/stats");
  CHECK(stats["roof_pitch"]["gable"].get<std::size_t>() == counts["gable"]);
  CHECK(stats["buildings"].get<std::size_t>() == h.fx.embeddings.size());
}

TEST_CASE("empty labels file gives an empty queries list") {
  Harness h("review_empty", true, true);
  CHECK(h.get("/api/queries").empty());
  const auto stats = h.get("/api/stats");
  CHECK(stats["roof_pitch"]["gable"] == 0);
}

TEST_CASE("concurrent posts never interleave log lines") {
  Harness h("review_concurrent");
  const int port = h.cli->port();
  std::vector<std::thread> ts;
  const std::string pad(4000, 'x');
  for (int t = 0; t < 8; ++t) {
    ts.emplace_back([&, t] {
      httplib::Client c("127.0.0.1", port);
      for (int i = 0; i < 25; ++i) {
        auto body = decision(h.fx.embeddings[(t * 25 + i) % h.fx.embeddings.size()].building_id, "hip",
                             i % 3 ? "accept" : "reject");
        body["annotator"] = std::to_string(t) + pad;
        c.Post("/api/labels", body.dump(), "application/json");
      }
    });
  }
  for (auto& t : ts) t.join();
  std::ifstream log(h.dir / "decisions.ndjson");
  std::size_t lines = 0;
  for (std::string l; std::getline(log, l);) {
    ++lines;
    const auto j = json::parse(l);
    CHECK(j["annotator"].get<std::string>().size() == pad.size() + 1);
  }
  CHECK(lines == 200);
  LabelState replay;
  replay.base = read_labels(h.dir / "labels.csv.base.csv");
  for (const auto& d : read_decision_log(h.dir / "decisions.ndjson")) replay.apply(d);
  CHECK(labels_to_csv(replay.effective()) == slurp(h.dir / "labels.csv"));
}

TEST_CASE("decision log errors name the line") {
  const auto dir = testsupport::temp_dir("review_log");
  std::ofstream(dir / "d.ndjson") << decision("a", "hip", "accept").dump() << "\n{\"building_id\":1}\n";
  try {
    read_decision_log(dir / "d.ndjson");
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  CHECK(read_decision_log(dir / "absent.ndjson").empty());
}
