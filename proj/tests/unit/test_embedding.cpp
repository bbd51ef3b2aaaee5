#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "rooftop/embedding.hpp"
#include "rooftop/kernels.hpp"
#include "rooftop/rng.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace rooftop;

namespace {

std::string id_of(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "E%05zu", i);
  return buf;
}

std::vector<EmbeddingRecord> random_records(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<EmbeddingRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].building_id = id_of(i);
    out[i].model_id = "m";
    out[i].vector.resize(dim);
    for (auto& v : out[i].vector) v = static_cast<float>(rng.normal());
  }
  return out;
}

}  // namespace

TEST_CASE("orthonormal basis index") {
  std::vector<EmbeddingRecord> recs;
  for (std::size_t i = 0; i < 3; ++i) {
    EmbeddingRecord r{id_of(2 - i), "m", std::vector<float>(3, 0.0f)};
    r.vector[i] = 1.0f;
    recs.push_back(r);
  }
  const auto idx = build_index(recs);
  CHECK(idx.size() == 3);
  CHECK(idx.ids() == std::vector<std::string>{id_of(0), id_of(1), id_of(2)});
  for (double n : idx.norms()) CHECK(n == 1.0);
  const auto nb = cosine_topk(idx, id_of(1), 2);
  REQUIRE(nb.size() == 2);
  CHECK(nb[0].id == id_of(0));
  CHECK(nb[0].similarity == 0.0);
  CHECK(nb[1].id == id_of(2));
}

TEST_CASE("build errors") {
  auto recs = random_records(3, 4, 1);
  CHECK_THROWS_AS(build_index({}), EmbeddingError);
  auto dup = recs;
  dup[2].building_id = dup[0].building_id;
  CHECK_THROWS_AS(build_index(dup), EmbeddingError);
  auto mixed = recs;
  mixed[1].vector.pop_back();
  CHECK_THROWS_AS(build_index(mixed), EmbeddingError);
  auto zero = recs;
  std::fill(zero[1].vector.begin(), zero[1].vector.end(), 0.0f);
  CHECK_THROWS_AS(build_index(zero), EmbeddingError);
  auto nan = recs;
  nan[0].vector[0] = std::nanf("");
  CHECK_THROWS_AS(build_index(nan), EmbeddingError);
  CHECK_THROWS_AS(cosine_topk(build_index(recs), "nope", 1), EmbeddingError);
  CHECK_THROWS_AS(cosine_topk(build_index(recs), recs[0].building_id, 0), EmbeddingError);
}

TEST_CASE("norms of 1,000 random 1,024-d vectors") {
  const auto recs = random_records(1000, 1024, 2);
  const auto idx = build_index(recs);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    double sq = 0;
    for (float v : recs[i].vector) sq += double(v) * v;
    CHECK(testsupport::rel_err(idx.norms()[idx.position(recs[i].building_id)], std::sqrt(sq)) <= 1e-9);
  }
}

TEST_CASE("a duplicated query vector ranks first with similarity 1") {
  auto recs = random_records(50, 16, 3);
  recs.push_back({"ZZZ", "m", recs[7].vector});
  const auto nb = cosine_topk(build_index(recs), recs[7].building_id, 5);
  CHECK(nb[0].id == "ZZZ");
  CHECK(nb[0].similarity == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("top-25 on 1,000 random vectors equals the full-sort oracle") {
  const auto recs = random_records(1000, 1024, 4);
  const auto idx = build_index(recs);
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const std::string q = id_of(rng.below(1000));
    const auto got = cosine_topk(idx, q, 25);
    const auto want = oracle::full_sort_topk(recs, q, 25);
    REQUIRE(got.size() == 25);
    for (std::size_t i = 0; i < 25; ++i) {
      CHECK(got[i].id == want[i].id);
      CHECK(got[i].similarity == doctest::Approx(want[i].similarity).epsilon(1e-9));
    }
  }
}

TEST_CASE("tied similarities are ordered by id") {
  // many exact duplicates so every similarity ties in groups
  std::vector<EmbeddingRecord> recs;
  Rng rng(8);
  std::vector<std::vector<float>> protos(4, std::vector<float>(8));
  for (auto& p : protos)
    for (auto& v : p) v = static_cast<float>(rng.normal());
  for (std::size_t i = 0; i < 40; ++i) recs.push_back({id_of((i * 17) % 40), "m", protos[i % 4]});
  const auto idx = build_index(recs);
  for (const auto& q : {id_of(0), id_of(13)}) {
    const auto got = cosine_topk(idx, q, 39, true);
    const auto serial = cosine_topk(idx, q, 39, false);
    const auto want = oracle::full_sort_topk(recs, q, 39);
    for (std::size_t i = 0; i < 39; ++i) {
      CHECK(got[i].id == serial[i].id);
      // equal vectors give bit-identical scores, so ties must follow id order
      if (i > 0 && got[i].similarity == got[i - 1].similarity) CHECK(got[i - 1].id < got[i].id);
    }
    std::vector<std::string> a, b;
    for (auto& n : got) a.push_back(n.id);
    for (auto& n : want) b.push_back(n.id);
    CHECK(a == b);
  }
}

TEST_CASE("k is clamped and size-1 returns a permutation of the others") {
  const auto recs = random_records(30, 6, 9);
  const auto idx = build_index(recs);
  const auto nb = cosine_topk(idx, id_of(3), 1000);
  CHECK(nb.size() == 29);
  std::set<std::string> ids;
  for (auto& n : nb) {
    ids.insert(n.id);
    CHECK(n.similarity >= -1.0);
    CHECK(n.similarity <= 1.0);
  }
  CHECK(ids.size() == 29);
  CHECK(ids.count(id_of(3)) == 0);
}

TEST_CASE("similarity is symmetric and scale invariant") {
  auto recs = random_records(60, 12, 10);
  const auto idx = build_index(recs);
  for (std::size_t a = 0; a < 5; ++a) {
    for (const auto& n : cosine_topk(idx, id_of(a), 59)) {
      for (const auto& m : cosine_topk(idx, n.id, 59)) {
        if (m.id == id_of(a)) CHECK(std::abs(m.similarity - n.similarity) <= 1e-12);
      }
    }
  }
  auto scaled = recs;
  Rng rng(11);
  for (auto& r : scaled) {
    const float c = static_cast<float>(std::ldexp(1.0, static_cast<int>(rng.below(10)) - 5));
    for (auto& v : r.vector) v *= c;
  }
  const auto idx2 = build_index(scaled);
  for (std::size_t q = 0; q < 10; ++q) {
    const auto a = cosine_topk(idx, id_of(q), 59), b = cosine_topk(idx2, id_of(q), 59);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].id == b[i].id);
      CHECK(std::abs(a[i].similarity - b[i].similarity) <= 1e-9);
    }
  }
}

TEST_CASE("parallel cosine kernel equals the serial reference") {
  const auto recs = random_records(500, 64, 12);
  const auto idx = build_index(recs);
  std::vector<float> flat;
  for (std::size_t i = 0; i < idx.size(); ++i) flat.insert(flat.end(), idx.vector(i).begin(), idx.vector(i).end());
  std::vector<double> a(idx.size()), b(idx.size());
  kernels::cosine_scores(flat, 64, idx.norms(), idx.vector(7), idx.norms()[7], a);
  kernels::cosine_scores_serial(flat, 64, idx.norms(), idx.vector(7), idx.norms()[7], b);
  CHECK(a == b);
}

TEST_CASE("minority mining") {
  const auto recs = random_records(200, 16, 13);
  const auto idx = build_index(recs);
  SUBCASE("single query without exclusions reduces to top-k") {
    const auto cands = mine_minority_candidates(idx, {id_of(4)}, 25, {});
    const auto nb = cosine_topk(idx, id_of(4), 25);
    REQUIRE(cands.size() == 25);
    for (std::size_t i = 0; i < 25; ++i) {
      CHECK(cands[i].id == nb[i].id);
      CHECK(cands[i].similarity == nb[i].similarity);
      CHECK(cands[i].query_id == id_of(4));
    }
  }
  SUBCASE("shared neighbours appear once with their best similarity") {
    const std::vector<std::string> qs = {id_of(1), id_of(2)};
    const auto cands = mine_minority_candidates(idx, qs, 40, {});
    std::map<std::string, std::pair<double, std::string>> oracle;
    for (const auto& q : qs)
      for (const auto& n : oracle::full_sort_topk(recs, q, 40)) {
        auto it = oracle.find(n.id);
        if (it == oracle.end() || n.similarity > it->second.first) oracle[n.id] = {n.similarity, q};
      }
    REQUIRE(cands.size() == oracle.size());
    for (std::size_t i = 0; i < cands.size(); ++i) {
      CHECK(cands[i].similarity == doctest::Approx(oracle[cands[i].id].first).epsilon(1e-12));
      CHECK(cands[i].query_id == oracle[cands[i].id].second);
      if (i) CHECK(cands[i - 1].similarity >= cands[i].similarity);
    }
  }
  SUBCASE("everything labeled leaves nothing") {
    const auto nb = cosine_topk(idx, id_of(9), 10);
    std::set<std::string> labeled;
    for (auto& n : nb) labeled.insert(n.id);
    CHECK(mine_minority_candidates(idx, {id_of(9)}, 10, labeled).empty());
  }
}

TEST_CASE("EMB1 and CSV readers") {
  const auto dir = testsupport::temp_dir("emb_io");
  auto recs = random_records(20, 5, 14);
  recs[3].building_id = "b\xc3\xa9timent-7";  // UTF-8 id
  write_embeddings(recs, dir / "scale-mae.emb1");
  const auto back = load_embeddings(dir / "scale-mae.emb1");
  REQUIRE(back.size() == 20);
  CHECK(back[3].building_id == recs[3].building_id);
  CHECK(back[0].model_id == "scale-mae");
  for (std::size_t i = 0; i < 20; ++i) CHECK(back[i].vector == recs[i].vector);

  std::ofstream(dir / "e.csv") << "id,v0,v1\nA,1.5,-2\nB,0.25,4e-1\n";
  const auto csv = load_embeddings(dir / "e.csv");
  REQUIRE(csv.size() == 2);
  CHECK(csv[1].vector == std::vector<float>{0.25f, 0.4f});
  std::ofstream(dir / "bad.csv") << "A,1,x\n";
  CHECK_THROWS_AS(load_embeddings(dir / "bad.csv"), EmbeddingError);

  std::ofstream(dir / "trunc.emb1", std::ios::binary) << std::string("EMB1\x04\0\0\0\x02\0\0\0", 12);
  CHECK_THROWS_AS(read_embeddings(dir / "trunc.emb1"), EmbeddingError);
}
