#include "rooftop/review_service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "rooftop/chip.hpp"

namespace rooftop {

namespace fs = std::filesystem;
using nlohmann::json;

std::string decision_to_json(const ReviewDecision& d) {
  nlohmann::ordered_json j;
  j["building_id"] = d.building_id;
  j["task"] = to_string(d.task);
  j["label"] = d.label;
  j["decision"] = d.decision == Verdict::accept ? "accept" : "reject";
  j["annotator"] = d.annotator;
  j["timestamp"] = d.timestamp;
  return j.dump();
}

namespace {

struct BadRequest : std::runtime_error {
  int status;
  BadRequest(int s, const std::string& what) : std::runtime_error(what), status(s) {}
};

std::string now_iso() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Validates a decision body; 400 for structural problems, 422 for a label
// that does not belong to the task.
ReviewDecision parse_decision(const json& j) {
  if (!j.is_object()) throw BadRequest(400, "body must be a JSON object");
  auto text = [&](const char* key, bool required) -> std::string {
    if (!j.contains(key)) {
      if (required) throw BadRequest(400, std::string("missing field '") + key + "'");
      return {};
    }
    if (!j[key].is_string()) throw BadRequest(400, std::string("field '") + key + "' must be a string");
    return j[key].get<std::string>();
  };
  ReviewDecision d;
  d.building_id = text("building_id", true);
  if (d.building_id.empty()) throw BadRequest(400, "building_id is empty");
  try {
    d.task = task_from(text("task", true));
  } catch (const std::invalid_argument& e) {
    throw BadRequest(400, e.what());
  }
  d.label = text("label", true);
  const std::string verdict = text("decision", true);
  if (verdict == "accept") d.decision = Verdict::accept;
  else if (verdict == "reject") d.decision = Verdict::reject;
  else throw BadRequest(400, "decision must be 'accept' or 'reject'");
  d.annotator = text("annotator", false);
  d.timestamp = text("timestamp", false);
  if (!valid_label(d.task, d.label)) throw BadRequest(422, "'" + d.label + "' is not a " + to_string(d.task) + " class");
  return d;
}

bool safe_id(const std::string& id) {
  if (id.empty() || id.size() > 200) return false;
  for (char c : id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  }
  return id.find("..") == std::string::npos;
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, json{{"error", message}}, status);
}

void write_atomically(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

std::vector<LabeledSample> LabelState::effective() const {
  std::vector<LabeledSample> out = base;
  std::map<std::pair<std::string, Task>, std::size_t> pos;
  std::map<std::string, std::string> group_of;
  for (std::size_t i = 0; i < out.size(); ++i) {
    pos[{out[i].building_id, out[i].task}] = i;
    group_of.emplace(out[i].building_id, out[i].group_id);
  }
  for (const auto& [key, d] : last) {
    if (d.decision != Verdict::accept) continue;
    LabeledSample s;
    s.building_id = d.building_id;
    s.task = d.task;
    s.label = d.label;
    s.origin = Origin::mined;
    if (auto g = group_of.find(d.building_id); g != group_of.end()) s.group_id = g->second;
    else if (auto t = tile_of.find(d.building_id); t != tile_of.end() && !t->second.empty()) s.group_id = t->second;
    else s.group_id = "unassigned";
    if (auto p = pos.find(key); p != pos.end()) out[p->second] = s;
    else out.push_back(s);
  }
  return out;
}

std::set<std::string> LabelState::rejected(Task t) const {
  std::set<std::string> out;
  for (const auto& [key, d] : last) {
    if (key.second == t && d.decision == Verdict::reject) out.insert(key.first);
  }
  return out;
}

std::vector<ReviewDecision> read_decision_log(const fs::path& path) {
  std::vector<ReviewDecision> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_decision(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

ReviewService::ReviewService(ReviewConfig config) : config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
  if (config_.labels.empty()) throw std::invalid_argument("review service needs a labels file");
  if (config_.decisions.empty()) config_.decisions = config_.labels.parent_path() / "decisions.ndjson";
  if (config_.base_labels.empty()) config_.base_labels = config_.labels.string() + ".base.csv";
  if (!fs::exists(config_.base_labels)) {
    if (fs::exists(config_.labels)) fs::copy_file(config_.labels, config_.base_labels);
    else write_labels({}, config_.base_labels);
  }
  state_.base = read_labels(config_.base_labels);
  for (const auto& d : read_decision_log(config_.decisions)) state_.apply(d);
  if (const fs::path manifest = config_.chips_dir / "chips.ndjson"; !config_.chips_dir.empty() && fs::exists(manifest)) {
    for (const auto& r : read_chip_manifest(manifest)) state_.tile_of[r.building_id] = r.tile_id;
  }
  if (!config_.embeddings.empty()) set_index(std::make_shared<EmbeddingIndex>(build_index(load_embeddings(config_.embeddings))));
  persist_locked();
  routes();
}

ReviewService::~ReviewService() { stop(); }

void ReviewService::set_index(std::shared_ptr<const EmbeddingIndex> index) {
  std::lock_guard lock(index_mutex_);
  index_ = std::move(index);
}

std::shared_ptr<const EmbeddingIndex> ReviewService::index() const {
  std::lock_guard lock(index_mutex_);
  return index_;
}

std::vector<LabeledSample> ReviewService::labels() const {
  std::shared_lock lock(state_mutex_);
  return state_.effective();
}

void ReviewService::persist_locked() { write_atomically(config_.labels, labels_to_csv(state_.effective())); }

bool ReviewService::listen(const std::string& host, int port) { return server_->listen(host, port); }
int ReviewService::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }
bool ReviewService::serve() { return server_->listen_after_bind(); }
void ReviewService::stop() {
  if (server_) server_->stop();
}
void ReviewService::wait_until_ready() const { server_->wait_until_ready(); }

void ReviewService::routes() {
  auto& srv = *server_;

  srv.Get("/api/similar", [this](const httplib::Request& req, httplib::Response& res) {
    const auto idx = index();
    if (!idx) return send_error(res, 409, "embedding index not loaded");
    if (!req.has_param("query_id")) return send_error(res, 400, "query_id is required");
    const std::string query = req.get_param_value("query_id");
    std::size_t k = config_.default_k;
    Task task = Task::roof_pitch;
    try {
      if (req.has_param("k")) {
        const long v = std::stol(req.get_param_value("k"));
        if (v <= 0) return send_error(res, 400, "k must be positive");
        k = static_cast<std::size_t>(v);
      }
      if (req.has_param("task")) task = task_from(req.get_param_value("task"));
    } catch (const std::exception& e) {
      return send_error(res, 400, e.what());
    }
    if (!idx->contains(query)) return send_error(res, 404, "unknown query " + query);

    std::set<std::string> rejected;
    std::map<std::string, std::string> current;
    {
      std::shared_lock lock(state_mutex_);
      rejected = state_.rejected(task);
      for (const auto& s : state_.effective()) {
        if (s.task == task) current[s.building_id] = s.label;
      }
    }
    // over-fetch so rejected ids can be dropped without shortening the list
    const auto neighbors = cosine_topk(*idx, query, k + rejected.size());
    json out = json::array();
    for (const auto& n : neighbors) {
      if (out.size() == k) break;
      if (rejected.count(n.id)) continue;
      json item{{"building_id", n.id}, {"similarity", n.similarity}, {"chip_url", "/api/chips/" + n.id + ".png"}};
      const auto it = current.find(n.id);
      item["labeled"] = it != current.end();
      if (it != current.end()) item["current_label"] = it->second;
      out.push_back(std::move(item));
    }
    send_json(res, out);
  });

  srv.Post("/api/labels", [this](const httplib::Request& req, httplib::Response& res) {
    ReviewDecision d;
    try {
      d = parse_decision(json::parse(req.body));
    } catch (const BadRequest& e) {
      return send_error(res, e.status, e.what());
    } catch (const json::exception& e) {
      return send_error(res, 400, std::string("malformed JSON: ") + e.what());
    }
    if (d.timestamp.empty()) d.timestamp = now_iso();
    const std::string line = decision_to_json(d) + "\n";
    {
      // single writer: log line first, then the folded labels file
      std::lock_guard writer(log_mutex_);
      const int fd = ::open(config_.decisions.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
      if (fd < 0) return send_error(res, 500, "cannot open decision log");
      const ssize_t n = ::write(fd, line.data(), line.size());
      ::close(fd);
      if (n != static_cast<ssize_t>(line.size())) return send_error(res, 500, "short write to decision log");
      std::unique_lock lock(state_mutex_);
      state_.apply(d);
      try {
        persist_locked();
      } catch (const std::exception& e) {
        return send_error(res, 500, e.what());
      }
    }
    send_json(res, json::parse(decision_to_json(d)), 201);
  });

  srv.Get("/api/stats", [this](const httplib::Request&, httplib::Response& res) {
    const auto samples = labels();
    nlohmann::ordered_json out;
    std::set<std::string> buildings;
    for (Task t : {Task::roof_pitch, Task::roof_material}) {
      auto& node = out[to_string(t)];
      for (const auto& c : task_classes(t)) node[c] = 0;
    }
    for (const auto& s : samples) {
      auto& v = out[to_string(s.task)][s.label];
      v = v.get<std::size_t>() + 1;
      buildings.insert(s.building_id);
    }
    out["buildings"] = buildings.size();
    res.set_content(out.dump(), "application/json");
  });

  srv.Get("/api/queries", [this](const httplib::Request& req, httplib::Response& res) {
    std::vector<Task> tasks = {Task::roof_pitch, Task::roof_material};
    if (req.has_param("task")) {
      try {
        tasks = {task_from(req.get_param_value("task"))};
      } catch (const std::exception& e) {
        return send_error(res, 400, e.what());
      }
    }
    const auto samples = labels();
    const auto idx = index();
    json out = json::array();
    for (Task t : tasks) {
      const auto& cls = task_classes(t);
      std::map<std::string, std::size_t> counts;
      std::size_t total = 0;
      for (const auto& s : samples) {
        if (s.task != t) continue;
        ++counts[s.label];
        ++total;
      }
      // minority = below an even share of the task's labels
      const double even = static_cast<double>(total) / static_cast<double>(cls.size());
      for (const auto& s : samples) {
        if (s.task != t || static_cast<double>(counts[s.label]) >= even) continue;
        if (idx && !idx->contains(s.building_id)) continue;
        out.push_back({{"building_id", s.building_id},
                       {"task", to_string(t)},
                       {"label", s.label},
                       {"chip_url", "/api/chips/" + s.building_id + ".png"}});
      }
    }
    send_json(res, out);
  });

  srv.Get(R"(/api/chips/([^/]+)\.png)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    if (!safe_id(id)) return send_error(res, 400, "bad chip id");
    const fs::path p = config_.chips_dir / (id + ".png");
    std::ifstream in(p, std::ios::binary);
    if (!in) return send_error(res, 404, "no chip for " + id);
    std::ostringstream buf;
    buf << in.rdbuf();
    res.set_content(buf.str(), "image/png");
  });

  if (!config_.static_dir.empty()) srv.set_mount_point("/", config_.static_dir.string());
}

}  // namespace rooftop
