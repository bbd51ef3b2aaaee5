#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rooftop {

class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EmbeddingRecord {
  std::string building_id;
  std::string model_id;
  std::vector<float> vector;

  std::size_t dim() const { return vector.size(); }
};

struct Neighbor {
  std::string id;
  double similarity = 0;
};

struct MiningCandidate {
  std::string id;
  double similarity = 0;
  std::string query_id;
};

/// Exact cosine-similarity index. Records are kept sorted by id in one
/// contiguous row-major matrix with precomputed L2 norms.
class EmbeddingIndex {
 public:
  EmbeddingIndex() = default;

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<double>& norms() const { return norms_; }
  const std::string& model_id() const { return model_id_; }
  bool contains(const std::string& id) const;
  std::size_t position(const std::string& id) const;
  std::span<const float> vector(std::size_t pos) const { return {matrix_.data() + pos * dim_, dim_}; }

  friend EmbeddingIndex build_index(std::vector<EmbeddingRecord> records);
  friend std::vector<Neighbor> cosine_topk(const EmbeddingIndex& index, const std::string& query_id, std::size_t k,
                                           bool parallel);

 private:
  std::size_t dim_ = 0;
  std::string model_id_;
  std::vector<std::string> ids_;
  std::vector<float> matrix_;
  std::vector<double> norms_;
};

/// Rejects empty input, mixed dimensions, duplicate ids, non-finite values
/// and zero vectors.
EmbeddingIndex build_index(std::vector<EmbeddingRecord> records);

/// The k most similar other records, similarity descending, ties by ascending
/// id. k is clamped to size - 1.
std::vector<Neighbor> cosine_topk(const EmbeddingIndex& index, const std::string& query_id, std::size_t k,
                                  bool parallel = true);

/// Union of the top-k neighbours of every query minus `exclude`, each with its
/// best similarity and the query that produced it.
std::vector<MiningCandidate> mine_minority_candidates(const EmbeddingIndex& index,
                                                      const std::vector<std::string>& query_ids, std::size_t k,
                                                      const std::set<std::string>& exclude);

/// EMB1: "EMB1", u32 dim, u32 count, then per record u16 id length, UTF-8 id,
/// dim float32, all little-endian.
std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& path);
void write_embeddings(const std::vector<EmbeddingRecord>& records, const std::filesystem::path& path);
/// CSV rows: id, v0, ..., v_{dim-1}; a header row starting with "id" is skipped.
std::vector<EmbeddingRecord> read_embeddings_csv(const std::filesystem::path& path);
/// Dispatches on the EMB1 magic, falling back to CSV.
std::vector<EmbeddingRecord> load_embeddings(const std::filesystem::path& path);

}  // namespace rooftop
