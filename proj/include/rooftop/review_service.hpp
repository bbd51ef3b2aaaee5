#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "rooftop/embedding.hpp"
#include "rooftop/labels.hpp"

namespace httplib {
class Server;
}

namespace rooftop {

enum class Verdict { accept, reject };

struct ReviewDecision {
  std::string building_id;
  Task task = Task::roof_pitch;
  std::string label;  // the query's class, proposed for the candidate
  Verdict decision = Verdict::accept;
  std::string annotator;
  std::string timestamp;  // ISO-8601
};

std::string decision_to_json(const ReviewDecision& d);

/// Label state as a pure fold over the decision log: per (building, task) the
/// last decision wins. Accept writes a mined sample with the proposed label;
/// reject restores whatever the base labels held for that key and bars the
/// building from later suggestions for that task.
struct LabelState {
  std::vector<LabeledSample> base;
  std::map<std::pair<std::string, Task>, ReviewDecision> last;
  std::map<std::string, std::string> tile_of;  // group ids for newly mined samples

  void apply(const ReviewDecision& d) { last[{d.building_id, d.task}] = d; }
  std::vector<LabeledSample> effective() const;
  std::set<std::string> rejected(Task t) const;
};

/// Reads decisions.ndjson; malformed lines are an error naming the line.
std::vector<ReviewDecision> read_decision_log(const std::filesystem::path& path);

struct ReviewConfig {
  std::filesystem::path chips_dir;
  std::filesystem::path labels;
  std::filesystem::path embeddings;  // optional; /api/similar answers 409 until an index is loaded
  std::filesystem::path decisions;   // default: decisions.ndjson next to the labels file
  std::filesystem::path base_labels; // default: <labels>.base.csv, snapshot taken on first start
  std::filesystem::path static_dir;  // optional front-end files served at /
  std::size_t default_k = 25;
};

/// HTTP backend for the accept/reject review loop.
///   GET  /api/similar?query_id=ID[&k=25][&task=roof_pitch]
///   POST /api/labels
///   GET  /api/stats
///   GET  /api/queries[?task=...]
///   GET  /api/chips/{id}.png
class ReviewService {
 public:
  explicit ReviewService(ReviewConfig config);
  ~ReviewService();
  ReviewService(const ReviewService&) = delete;
  ReviewService& operator=(const ReviewService&) = delete;

  /// Replaces the embedding index; in-flight requests keep the old one.
  void set_index(std::shared_ptr<const EmbeddingIndex> index);
  std::shared_ptr<const EmbeddingIndex> index() const;

  /// Blocks serving on host:port.
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it; call serve() afterwards.
  int bind_any(const std::string& host = "127.0.0.1");
  bool serve();
  void stop();
  void wait_until_ready() const;

  std::vector<LabeledSample> labels() const;
  const ReviewConfig& config() const { return config_; }

 private:
  void routes();
  void persist_locked();

  ReviewConfig config_;
  std::unique_ptr<httplib::Server> server_;
  mutable std::shared_mutex state_mutex_;
  LabelState state_;
  std::mutex log_mutex_;
  mutable std::mutex index_mutex_;
  std::shared_ptr<const EmbeddingIndex> index_;
};

}  // namespace rooftop
