#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "knowsite/kg.hpp"
#include "knowsite/optim.hpp"
#include "knowsite/tensor.hpp"

namespace knowsite::model {

enum class ComposeOp { Subtract, Multiply, Rotate };

ComposeOp compose_op_from_name(const std::string& name);
const char* compose_op_name(ComposeOp op);

struct EncoderConfig {
  int layers = 2;  // K in 0..3; 0 passes the tables through untouched
  ComposeOp op = ComposeOp::Rotate;
  bool tanh_activation = true;  // false: identity (fidelity tests)
  bool self_loop = true;
  double dropout = 0.0;   // on projected messages, training only
  bool batchnorm = true;  // full-graph batch statistics on node states
  double bn_eps = 1e-5;
};

// Per-relation edge lists (subject -> object) extracted once from the KG.
struct GraphEdges {
  struct RelationEdges {
    int relation = -1;
    std::vector<int64_t> subjects;
    std::vector<int64_t> objects;
    std::vector<double> inv_in_degree;  // per entity: 1/|N_v^r| or 0
  };
  int64_t n_entities = 0;
  int n_relations = 0;
  std::vector<RelationEdges> relations;  // only relations with facts

  static GraphEdges from_kg(const ukg::KnowledgeGraph& kg);
};

// phi(h_u, h_r): element-wise subtraction/multiplication or pairwise complex
// rotation by the unit-normalized relation vector.
num::Tensor compose(const num::Tensor& h_u, const num::Tensor& h_r,
                    ComposeOp op);

// K rounds of relation-specific mean-pooled message passing over incoming
// edges plus a linear relation update per layer.
class Encoder {
 public:
  // Registers W_r per (relation, layer), one relation projection per layer,
  // an optional self-loop projection, and batchnorm scale/shift.
  Encoder(const EncoderConfig& cfg, int n_relations, int64_t dim,
          num::ParameterStore& store, Rng& init_rng);

  struct Output {
    num::Tensor entity_h;    // [|E|, d]
    num::Tensor relation_h;  // [|R|, d]
  };

  Output forward(const GraphEdges& graph, const num::Tensor& entity0,
                 const num::Tensor& relation0, bool training,
                 Rng* dropout_rng, num::ParameterStore& store) const;

  // One message-passing round, exposed for layer-level tests.
  num::Tensor layer_forward(const GraphEdges& graph,
                            const num::Tensor& entity_h,
                            const num::Tensor& relation_h, int layer,
                            bool training, Rng* dropout_rng,
                            num::ParameterStore& store) const;
  // Linear relation table update for one layer.
  num::Tensor relation_forward(const num::Tensor& relation_h, int layer,
                               num::ParameterStore& store) const;

  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  int n_relations_ = 0;
  int64_t dim_ = 0;

  std::string w_name(int layer, int relation) const;
  std::string self_name(int layer) const;
  std::string rel_name(int layer) const;
  std::string bn_name(int layer, const char* part) const;
};

}  // namespace knowsite::model
