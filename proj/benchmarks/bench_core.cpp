// Microbenchmarks for the numeric hot paths: dense matmul, TuckER batch
// scoring, one message-passing layer and the attention head.

#include <benchmark/benchmark.h>

#include "knowsite/decoder.hpp"
#include "knowsite/encoder.hpp"
#include "knowsite/tucker.hpp"

using namespace knowsite;

namespace {

void BM_Matmul(benchmark::State& state) {
  const int64_t n = state.range(0);
  Rng rng(1);
  auto a = num::Tensor::uniform({n, n}, -1, 1, rng);
  auto b = num::Tensor::uniform({n, n}, -1, 1, rng);
  for (auto _ : state) {
    auto c = num::matmul(a, b);
    benchmark::DoNotOptimize(c.value().data());
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_MatmulBackward(benchmark::State& state) {
  const int64_t n = state.range(0);
  Rng rng(2);
  auto a = num::Tensor::uniform({n, n}, -1, 1, rng, true);
  auto b = num::Tensor::uniform({n, n}, -1, 1, rng, true);
  for (auto _ : state) {
    auto loss = num::sum(num::matmul(a, b));
    num::backward(loss);
    a.clear_grad();
    b.clear_grad();
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(64)->Arg(128);

void BM_TuckerScoreBatch(benchmark::State& state) {
  const int64_t entities = state.range(0);
  Rng rng(3);
  model::TuckerModel m(entities, 35, 64, rng);
  std::vector<int64_t> subjects, relations;
  for (int i = 0; i < 128; ++i) {
    subjects.push_back(static_cast<int64_t>(rng.uniform_index(
        static_cast<uint64_t>(entities))));
    relations.push_back(static_cast<int64_t>(rng.uniform_index(35)));
  }
  num::NoGradGuard guard;
  for (auto _ : state) {
    auto scores = m.score_batch(subjects, relations);
    benchmark::DoNotOptimize(scores.value().data());
  }
}
BENCHMARK(BM_TuckerScoreBatch)->Arg(1000)->Arg(5000);

void BM_EncoderLayer(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(4);
  std::vector<ukg::Entity> entities;
  for (int i = 0; i < n; ++i) {
    ukg::Entity e;
    e.id = i;
    e.ontology = ukg::Ontology::Poi;
    e.name = "poi:" + std::to_string(i);
    entities.push_back(e);
  }
  std::vector<ukg::RelationDef> rels(12);
  for (int r = 0; r < 12; ++r) {
    rels[static_cast<size_t>(r)].id = r;
    rels[static_cast<size_t>(r)].name = "R" + std::to_string(r);
    rels[static_cast<size_t>(r)].abbrev = "R" + std::to_string(r);
    rels[static_cast<size_t>(r)].skip_inverse = true;
  }
  std::vector<ukg::Fact> facts;
  for (int i = 0; i < n * 10; ++i) {
    facts.push_back({static_cast<int>(rng.uniform_index(
                         static_cast<uint64_t>(n))),
                     static_cast<int>(rng.uniform_index(12)),
                     static_cast<int>(rng.uniform_index(
                         static_cast<uint64_t>(n)))});
  }
  ukg::KnowledgeGraph kg(entities, rels, facts);
  auto graph = model::GraphEdges::from_kg(kg);
  model::EncoderConfig cfg;
  cfg.layers = 1;
  cfg.op = model::ComposeOp::Rotate;
  num::ParameterStore store;
  Rng init(5);
  model::Encoder enc(cfg, 12, 64, store, init);
  auto h0 = num::Tensor::uniform({n, 64}, -1, 1, init);
  auto r0 = num::Tensor::uniform({12, 64}, -1, 1, init);
  num::NoGradGuard guard;
  for (auto _ : state) {
    auto out = enc.layer_forward(graph, h0, r0, 0, false, nullptr, store);
    benchmark::DoNotOptimize(out.value().data());
  }
}
BENCHMARK(BM_EncoderLayer)->Arg(1000)->Arg(3000);

void BM_Attention(benchmark::State& state) {
  const int64_t brands = state.range(0);
  Rng rng(6);
  num::ParameterStore store;
  model::Decoder dec(model::PathCompose::Add, 64, store, rng);
  auto brand_rows = num::Tensor::uniform({brands, 64}, -1, 1, rng);
  auto rel_rows = num::Tensor::uniform({35, 64}, -1, 1, rng);
  std::vector<model::RelationPath> paths(8);
  for (int i = 0; i < 8; ++i) {
    paths[static_cast<size_t>(i)].relation_ids = {i % 35, (i * 3 + 1) % 35};
  }
  num::NoGradGuard guard;
  for (auto _ : state) {
    auto out = dec.attend(brand_rows, paths, rel_rows, store);
    benchmark::DoNotOptimize(out.z.value().data());
  }
}
BENCHMARK(BM_Attention)->Arg(128)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
