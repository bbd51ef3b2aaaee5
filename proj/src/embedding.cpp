#include "rooftop/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "rooftop/kernels.hpp"

namespace rooftop {
namespace fs = std::filesystem;

bool EmbeddingIndex::contains(const std::string& id) const {
  return std::binary_search(ids_.begin(), ids_.end(), id);
}

std::size_t EmbeddingIndex::position(const std::string& id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) throw EmbeddingError("unknown embedding id '" + id + "'");
  return static_cast<std::size_t>(it - ids_.begin());
}

EmbeddingIndex build_index(std::vector<EmbeddingRecord> records) {
  if (records.empty()) throw EmbeddingError("cannot build an index from no records");
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.building_id < b.building_id; });
  EmbeddingIndex idx;
  idx.dim_ = records.front().dim();
  idx.model_id_ = records.front().model_id;
  if (idx.dim_ == 0) throw EmbeddingError("embedding dimension must be positive");
  idx.ids_.reserve(records.size());
  idx.matrix_.reserve(records.size() * idx.dim_);
  idx.norms_.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.dim() != idx.dim_) {
      throw EmbeddingError("dimension mismatch for '" + r.building_id + "': " + std::to_string(r.dim()) + " vs " +
                           std::to_string(idx.dim_));
    }
    if (i > 0 && records[i - 1].building_id == r.building_id) {
      throw EmbeddingError("duplicate embedding id '" + r.building_id + "'");
    }
    double sq = 0.0;
    for (float v : r.vector) {
      if (!std::isfinite(v)) throw EmbeddingError("non-finite component in '" + r.building_id + "'");
      sq += static_cast<double>(v) * static_cast<double>(v);
    }
    if (sq == 0.0) throw EmbeddingError("zero vector for '" + r.building_id + "'");
    idx.ids_.push_back(r.building_id);
    idx.matrix_.insert(idx.matrix_.end(), r.vector.begin(), r.vector.end());
    idx.norms_.push_back(std::sqrt(sq));
  }
  return idx;
}

std::vector<Neighbor> cosine_topk(const EmbeddingIndex& index, const std::string& query_id, std::size_t k,
                                  bool parallel) {
  if (k < 1) throw EmbeddingError("k must be at least 1");
  const std::size_t q = index.position(query_id);
  const std::size_t n = index.size();
  std::vector<double> scores(n);
  const auto query = index.vector(q);
  if (parallel) {
    kernels::cosine_scores(index.matrix_, index.dim_, index.norms_, query, index.norms_[q], scores);
  } else {
    kernels::cosine_scores_serial(index.matrix_, index.dim_, index.norms_, query, index.norms_[q], scores);
  }

  std::vector<std::size_t> order;
  order.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (i != q) order.push_back(i);
  }
  k = std::min(k, order.size());
  // ids are sorted, so ascending position is ascending id
  auto better = [&](std::size_t a, std::size_t b) { return scores[a] != scores[b] ? scores[a] > scores[b] : a < b; };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);

  std::vector<Neighbor> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back({index.ids_[order[i]], scores[order[i]]});
  return out;
}

std::vector<MiningCandidate> mine_minority_candidates(const EmbeddingIndex& index,
                                                      const std::vector<std::string>& query_ids, std::size_t k,
                                                      const std::set<std::string>& exclude) {
  std::map<std::string, MiningCandidate> best;
  for (const auto& q : query_ids) {
    for (const auto& nb : cosine_topk(index, q, k)) {
      if (exclude.count(nb.id)) continue;
      auto [it, inserted] = best.try_emplace(nb.id, MiningCandidate{nb.id, nb.similarity, q});
      if (!inserted && nb.similarity > it->second.similarity) it->second = {nb.id, nb.similarity, q};
    }
  }
  std::vector<MiningCandidate> out;
  out.reserve(best.size());
  for (auto& [id, c] : best) out.push_back(std::move(c));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.similarity > b.similarity; });
  return out;
}

namespace {

template <typename T>
T read_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw EmbeddingError("truncated embedding file");
  std::make_unsigned_t<std::conditional_t<std::is_floating_point_v<T>, std::int32_t, T>> v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<decltype(v)>(buf[i]) << (8 * i);
  if constexpr (std::is_floating_point_v<T>) {
    return std::bit_cast<T>(v);
  } else {
    return static_cast<T>(v);
  }
}

template <typename T>
void write_le(std::ostream& out, T value) {
  using U = std::make_unsigned_t<std::conditional_t<std::is_floating_point_v<T>, std::int32_t, T>>;
  U v;
  if constexpr (std::is_floating_point_v<T>) {
    v = std::bit_cast<U>(value);
  } else {
    v = static_cast<U>(value);
  }
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

}  // namespace

std::vector<EmbeddingRecord> read_embeddings(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EmbeddingError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "EMB1", 4) != 0) throw EmbeddingError("not an EMB1 file");
  const auto dim = read_le<std::uint32_t>(in);
  const auto count = read_le<std::uint32_t>(in);
  std::vector<EmbeddingRecord> out;
  out.reserve(count);
  const std::string model = path.stem().string();
  for (std::uint32_t i = 0; i < count; ++i) {
    EmbeddingRecord r;
    const auto len = read_le<std::uint16_t>(in);
    r.building_id.resize(len);
    if (!in.read(r.building_id.data(), len)) throw EmbeddingError("truncated embedding file");
    r.model_id = model;
    r.vector.resize(dim);
    for (auto& v : r.vector) v = read_le<float>(in);
    out.push_back(std::move(r));
  }
  return out;
}

void write_embeddings(const std::vector<EmbeddingRecord>& records, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw EmbeddingError("cannot write " + path.string());
  const std::uint32_t dim = records.empty() ? 0 : static_cast<std::uint32_t>(records.front().dim());
  out.write("EMB1", 4);
  write_le<std::uint32_t>(out, dim);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(records.size()));
  for (const auto& r : records) {
    if (r.dim() != dim) throw EmbeddingError("dimension mismatch for '" + r.building_id + "'");
    if (r.building_id.size() > 0xffff) throw EmbeddingError("embedding id too long");
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(r.building_id.size()));
    out.write(r.building_id.data(), static_cast<std::streamsize>(r.building_id.size()));
    for (float v : r.vector) write_le<float>(out, v);
  }
}

std::vector<EmbeddingRecord> read_embeddings_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw EmbeddingError("cannot open " + path.string());
  std::vector<EmbeddingRecord> out;
  std::string line;
  bool first = true;
  const std::string model = path.stem().string();
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    if (first && (cell == "id" || cell == "building_id")) {
      first = false;
      continue;
    }
    first = false;
    EmbeddingRecord r{cell, model, {}};
    while (std::getline(ss, cell, ',')) {
      try {
        r.vector.push_back(std::stof(cell));
      } catch (const std::exception&) {
        throw EmbeddingError("bad number '" + cell + "' in " + path.string());
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<EmbeddingRecord> load_embeddings(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  if (in && std::memcmp(magic, "EMB1", 4) == 0) return read_embeddings(path);
  return read_embeddings_csv(path);
}

}  // namespace rooftop
