#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "knowsite/dataset.hpp"
#include "knowsite/decoder.hpp"
#include "knowsite/embedding.hpp"
#include "knowsite/encoder.hpp"
#include "knowsite/kg.hpp"
#include "knowsite/paths.hpp"
#include "knowsite/tucker.hpp"

namespace knowsite::model {

struct ModelConfig {
  int64_t dim = 64;
  EncoderConfig encoder;
  PathCompose composition = PathCompose::Gru;
  double alpha = 0.5;
  double lambda_reg = 1e-5;
  bool reg_squared = false;  // lambda * |theta|^2 instead of lambda * |theta|
  bool freeze_pretrained = false;
  uint64_t seed = 0;
};

// Encoder + relation-path decoder over one KG, scoring brands against the
// full candidate region set.
class KnowSiteModel {
 public:
  // Pretrained tables are matched to KG entities/relations by name;
  // pass nullptr for uniform(-0.1, 0.1) initialization.
  KnowSiteModel(const ukg::KnowledgeGraph& kg, const ModelConfig& cfg,
                const EmbeddingTable* pretrained_entities,
                const EmbeddingTable* pretrained_relations,
                std::vector<RelationPath> paths);

  num::ParameterStore& params() { return params_; }
  const ModelConfig& config() const { return cfg_; }
  const ukg::KnowledgeGraph& kg() const { return *kg_; }
  const std::vector<RelationPath>& paths() const { return paths_; }
  const std::vector<int>& candidate_regions() const { return regions_; }
  int region_index(int region_entity_id) const;

  struct Forward {
    num::Tensor scores;     // [B, |A|]
    num::Tensor attention;  // [B, n_p]
  };
  Forward forward(const std::vector<int>& brand_ids, bool training,
                  Rng* dropout_rng);

  // Mean cross-entropy over the batch plus the parameter-norm term.
  num::Tensor loss(const std::vector<SitePair>& batch, bool training,
                   Rng* dropout_rng);

  // Deterministic eval-mode encoder output (h^K tables).
  Encoder::Output encode_eval();
  // Attention weights for one brand, eval mode.
  std::vector<double> attention_weights(int brand_id);

  // Current (possibly fine-tuned) layer-0 tables, by KG entity order.
  EmbeddingTable entity_table() const;
  EmbeddingTable relation_table() const;

 private:
  const ukg::KnowledgeGraph* kg_;
  ModelConfig cfg_;
  std::vector<RelationPath> paths_;
  GraphEdges graph_;
  num::ParameterStore params_;
  std::unique_ptr<Encoder> encoder_;
  std::unique_ptr<Decoder> decoder_;
  // When frozen, the layer-0 tables live outside the parameter store.
  num::Tensor frozen_entities_, frozen_relations_;
  std::vector<int> regions_;
  std::map<int, int> region_index_;
  int osa_relation_ = -1;

  num::Tensor entity0();
  num::Tensor relation0();
  num::Tensor parameter_norm();
};

// L2 norm of every parameter in the store as one concatenated vector
// (sqrt of the total sum of squares); graph-recorded.
num::Tensor parameter_l2_norm(num::ParameterStore& store, bool squared);

}  // namespace knowsite::model
