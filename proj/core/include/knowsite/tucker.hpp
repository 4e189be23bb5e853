#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "knowsite/embedding.hpp"
#include "knowsite/kg.hpp"
#include "knowsite/optim.hpp"
#include "knowsite/tensor.hpp"

namespace knowsite::model {

struct TuckerConfig {
  int64_t dim = 64;
  double lr = 0.003;
  int batch_size = 128;
  double label_smoothing = 0.1;
  double dropout = 0.3;  // on subject embedding rows
  int max_epochs = 200;
  int patience = 10;
  double min_improvement = 1e-4;
  uint64_t seed = 0;
};

// Trilinear scorer: score(s, r, o) = sum_ijk core[i,j,k] e_s[i] w_r[j] e_o[k].
class TuckerModel {
 public:
  TuckerModel(int64_t n_entities, int64_t n_relations, int64_t dim, Rng& rng);

  num::ParameterStore& params() { return params_; }
  const num::ParameterStore& params() const { return params_; }
  int64_t dim() const { return dim_; }

  num::Tensor entity_rows() { return params_.at("tucker.entities").tensor; }
  num::Tensor relation_rows() { return params_.at("tucker.relations").tensor; }
  num::Tensor core() { return params_.at("tucker.core").tensor; }  // [d,d,d]

  // Raw scores against every entity for a batch of (s, r); dropout_rng
  // enables subject-row dropout (training only).
  num::Tensor score_batch(const std::vector<int64_t>& subjects,
                          const std::vector<int64_t>& relations,
                          double dropout_p = 0.0, Rng* dropout_rng = nullptr);

 private:
  int64_t dim_;
  num::ParameterStore params_;
};

// Raw scores for one (s, r) over all candidate objects, no grad.
num::Tensor tucker_score(TuckerModel& m, int64_t s, int64_t r);
// The same scores squashed to probabilities.
num::Tensor tucker_probabilities(TuckerModel& m, int64_t s, int64_t r);

// 1-vs-all binary cross entropy with label smoothing over a batch of (s, r)
// groups; exposed for gradient tests.
num::Tensor tucker_batch_loss(TuckerModel& m,
                              const std::vector<int64_t>& subjects,
                              const std::vector<int64_t>& relations,
                              const std::vector<std::vector<int64_t>>& objects,
                              double label_smoothing, double dropout_p = 0.0,
                              Rng* dropout_rng = nullptr);

struct PretrainResult {
  EmbeddingTable entities;
  EmbeddingTable relations;
  num::Tensor core;  // trained core tensor, for re-scoring
  std::vector<double> loss_history;      // accepted (monotone) epoch losses
  std::vector<double> raw_loss_history;  // losses as evaluated
  int epochs = 0;
};

// Rebuilds the trained scorer from a pretraining result.
TuckerModel rebuild_tucker(const PretrainResult& result);

// Task-agnostic pre-training over the full fact set. Expects leakage
// already removed from kg; empty fact set is a contract error.
PretrainResult pretrain(const ukg::KnowledgeGraph& kg, const TuckerConfig& cfg);

// Writes sampled POI rows plus all non-POI rows with ontology labels for
// external projection tools. Returns the number of rows written.
int64_t export_for_projection(const EmbeddingTable& entities,
                              const ukg::KnowledgeGraph& kg, int64_t sample,
                              uint64_t seed,
                              const std::filesystem::path& out_tsv);

}  // namespace knowsite::model
