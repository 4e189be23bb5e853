#include "knowsite/encoder.hpp"

#include <cmath>

namespace knowsite::model {

using num::Tensor;

ComposeOp compose_op_from_name(const std::string& name) {
  if (name == "sub" || name == "subtract") return ComposeOp::Subtract;
  if (name == "mult" || name == "multiply") return ComposeOp::Multiply;
  if (name == "rotate") return ComposeOp::Rotate;
  throw ConfigError("unknown encoder composition op: " + name);
}

const char* compose_op_name(ComposeOp op) {
  switch (op) {
    case ComposeOp::Subtract: return "sub";
    case ComposeOp::Multiply: return "mult";
    case ComposeOp::Rotate: return "rotate";
  }
  return "?";
}

GraphEdges GraphEdges::from_kg(const ukg::KnowledgeGraph& kg) {
  GraphEdges g;
  g.n_entities = kg.entity_count();
  g.n_relations = kg.relation_count();
  std::vector<RelationEdges> per_rel(
      static_cast<size_t>(kg.relation_count()));
  for (const auto& f : kg.facts()) {
    auto& re = per_rel[static_cast<size_t>(f.r)];
    re.relation = f.r;
    re.subjects.push_back(f.s);
    re.objects.push_back(f.o);
  }
  for (auto& re : per_rel) {
    if (re.subjects.empty()) continue;
    std::vector<int64_t> degree(static_cast<size_t>(g.n_entities), 0);
    for (int64_t v : re.objects) degree[static_cast<size_t>(v)]++;
    re.inv_in_degree.assign(static_cast<size_t>(g.n_entities), 0.0);
    for (size_t v = 0; v < degree.size(); ++v) {
      if (degree[v] > 0) {
        re.inv_in_degree[v] = 1.0 / static_cast<double>(degree[v]);
      }
    }
    g.relations.push_back(std::move(re));
  }
  return g;
}

Tensor compose(const Tensor& h_u, const Tensor& h_r, ComposeOp op) {
  const bool matrix = h_u.rank() == 2;
  switch (op) {
    case ComposeOp::Subtract:
      return matrix ? num::sub_rowvec(h_u, h_r) : num::sub(h_u, h_r);
    case ComposeOp::Multiply:
      return matrix ? num::mul_rowvec(h_u, h_r) : num::mul(h_u, h_r);
    case ComposeOp::Rotate:
      return num::rotate_compose(h_u, h_r);
  }
  throw ConfigError("bad compose op");
}

Encoder::Encoder(const EncoderConfig& cfg, int n_relations, int64_t dim,
                 num::ParameterStore& store, Rng& init_rng)
    : cfg_(cfg), n_relations_(n_relations), dim_(dim) {
  if (cfg.layers < 0 || cfg.layers > 3) {
    throw ConfigError("encoder layers must be in 0..3, got " +
                      std::to_string(cfg.layers));
  }
  if (cfg.op == ComposeOp::Rotate && dim % 2 != 0) {
    throw DimensionError("rotate composition needs an even dimension");
  }
  const double glorot = std::sqrt(6.0 / (2.0 * static_cast<double>(dim)));
  for (int k = 0; k < cfg.layers; ++k) {
    for (int r = 0; r < n_relations; ++r) {
      store.add(w_name(k, r),
                Tensor::uniform({dim, dim}, -glorot, glorot, init_rng, true));
    }
    if (cfg.self_loop) {
      store.add(self_name(k),
                Tensor::uniform({dim, dim}, -glorot, glorot, init_rng, true));
    }
    store.add(rel_name(k),
              Tensor::uniform({dim, dim}, -glorot, glorot, init_rng, true));
    if (cfg.batchnorm) {
      store.add(bn_name(k, "gamma"), Tensor::full({dim}, 1.0, true));
      store.add(bn_name(k, "beta"), Tensor::zeros({dim}, true));
    }
  }
}

std::string Encoder::w_name(int layer, int relation) const {
  return "enc.l" + std::to_string(layer) + ".rel" + std::to_string(relation);
}
std::string Encoder::self_name(int layer) const {
  return "enc.l" + std::to_string(layer) + ".self";
}
std::string Encoder::rel_name(int layer) const {
  return "enc.l" + std::to_string(layer) + ".rel_proj";
}
std::string Encoder::bn_name(int layer, const char* part) const {
  return "enc.l" + std::to_string(layer) + ".bn_" + part;
}

Tensor Encoder::layer_forward(const GraphEdges& graph, const Tensor& entity_h,
                              const Tensor& relation_h, int layer,
                              bool training, Rng* dropout_rng,
                              num::ParameterStore& store) const {
  const int64_t n = graph.n_entities;
  Tensor acc = Tensor::zeros({n, dim_});
  for (const auto& re : graph.relations) {
    Tensor h_r = num::reshape(
        num::gather_rows(relation_h, {re.relation}), {dim_});
    Tensor h_u = num::gather_rows(entity_h, re.subjects);
    Tensor msg = compose(h_u, h_r, cfg_.op);
    msg = num::matmul(msg, store.at(w_name(layer, re.relation)).tensor);
    if (training && cfg_.dropout > 0.0 && dropout_rng != nullptr) {
      msg = num::dropout(msg, cfg_.dropout, *dropout_rng);
    }
    Tensor pooled = num::scale_rows(
        num::scatter_add_rows(msg, re.objects, n), re.inv_in_degree);
    acc = num::add(acc, pooled);
  }
  if (cfg_.self_loop) {
    acc = num::add(acc, num::matmul(entity_h, store.at(self_name(layer)).tensor));
  }
  Tensor h = cfg_.tanh_activation ? num::tanh(acc) : acc;
  if (cfg_.batchnorm) {
    // Full-graph batch statistics; the "batch" is always every entity, so
    // the same normalization applies at training and evaluation time.
    Tensor mu = num::mean_axis0(h);
    Tensor centered = num::sub_rowvec(h, mu);
    Tensor var = num::mean_axis0(num::square(centered));
    Tensor inv_sigma = num::rsqrt(num::add_scalar(var, cfg_.bn_eps));
    Tensor xhat = num::mul_rowvec(centered, inv_sigma);
    h = num::add_rowvec(num::mul_rowvec(xhat, store.at(bn_name(layer, "gamma")).tensor),
                        store.at(bn_name(layer, "beta")).tensor);
  }
  return h;
}

Tensor Encoder::relation_forward(const Tensor& relation_h, int layer,
                                 num::ParameterStore& store) const {
  return num::matmul(relation_h, store.at(rel_name(layer)).tensor);
}

Encoder::Output Encoder::forward(const GraphEdges& graph,
                                 const Tensor& entity0, const Tensor& relation0,
                                 bool training, Rng* dropout_rng,
                                 num::ParameterStore& store) const {
  if (entity0.dim(1) != dim_ || relation0.dim(1) != dim_) {
    throw ConfigError("embedding tables do not match the encoder dimension");
  }
  Tensor entity_h = entity0;
  Tensor relation_h = relation0;
  for (int k = 0; k < cfg_.layers; ++k) {
    Tensor next_entities = layer_forward(graph, entity_h, relation_h, k,
                                         training, dropout_rng, store);
    relation_h = relation_forward(relation_h, k, store);
    entity_h = next_entities;
  }
  return {entity_h, relation_h};
}

}  // namespace knowsite::model
