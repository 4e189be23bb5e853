#include "knowsite/model.hpp"

#include <algorithm>

namespace knowsite::model {

using num::Tensor;

namespace {

Tensor init_table(const ukg::KnowledgeGraph& kg, int64_t dim,
                  const EmbeddingTable* pretrained, bool entities, Rng& rng) {
  const int64_t n = entities ? kg.entity_count() : kg.relation_count();
  if (pretrained == nullptr) {
    return Tensor::uniform({n, dim}, -0.1, 0.1, rng, true);
  }
  if (pretrained->dim() != dim) {
    throw ConfigError("pretrained table dimension " +
                      std::to_string(pretrained->dim()) +
                      " does not match model dimension " + std::to_string(dim));
  }
  // Remap pretrained rows into KG id order by name.
  std::vector<double> data(static_cast<size_t>(n * dim));
  const auto& src = pretrained->rows.value();
  for (int64_t i = 0; i < n; ++i) {
    const std::string& name = entities
                                  ? kg.entity(static_cast<int>(i)).name
                                  : kg.relation(static_cast<int>(i)).name;
    const int64_t row = pretrained->row_of(name);
    std::copy_n(src.data() + row * dim, dim, data.data() + i * dim);
  }
  return Tensor::from({n, dim}, std::move(data), true);
}

}  // namespace

Tensor parameter_l2_norm(num::ParameterStore& store, bool squared) {
  Tensor total = Tensor::scalar(0.0);
  for (auto& p : store.params()) {
    total = num::add(total, num::sum(num::square(p.tensor)));
  }
  return squared ? total : num::sqrt(total);
}

KnowSiteModel::KnowSiteModel(const ukg::KnowledgeGraph& kg,
                             const ModelConfig& cfg,
                             const EmbeddingTable* pretrained_entities,
                             const EmbeddingTable* pretrained_relations,
                             std::vector<RelationPath> paths)
    : kg_(&kg), cfg_(cfg), paths_(std::move(paths)) {
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0) {
    throw ConfigError("alpha must be in [0,1]");
  }
  if (paths_.empty() && cfg.alpha < 1.0) {
    throw ConfigError("empty path table needs alpha = 1");
  }
  auto osa = kg.find_relation("OpenStoreAt");
  if (!osa) throw ConfigError("KG vocabulary lacks OpenStoreAt");
  osa_relation_ = *osa;
  regions_ = kg.region_ids();
  if (regions_.empty()) throw ContractError("KG has no candidate regions");
  for (size_t i = 0; i < regions_.size(); ++i) {
    region_index_[regions_[i]] = static_cast<int>(i);
  }
  graph_ = GraphEdges::from_kg(kg);

  Rng init(cfg.seed);
  Tensor entities = init_table(kg, cfg.dim, pretrained_entities, true, init);
  Tensor relations = init_table(kg, cfg.dim, pretrained_relations, false, init);
  if (cfg.freeze_pretrained) {
    frozen_entities_ = entities.detached_copy(false);
    frozen_relations_ = relations.detached_copy(false);
  } else {
    params_.add("emb.entities", entities);
    params_.add("emb.relations", relations);
  }
  encoder_ = std::make_unique<Encoder>(cfg.encoder, kg.relation_count(),
                                       cfg.dim, params_, init);
  decoder_ = std::make_unique<Decoder>(cfg.composition, cfg.dim, params_, init);
}

int KnowSiteModel::region_index(int region_entity_id) const {
  auto it = region_index_.find(region_entity_id);
  if (it == region_index_.end()) {
    throw LookupError("entity " + std::to_string(region_entity_id) +
                      " is not a candidate region");
  }
  return it->second;
}

Tensor KnowSiteModel::entity0() {
  return cfg_.freeze_pretrained ? frozen_entities_
                                : params_.at("emb.entities").tensor;
}

Tensor KnowSiteModel::relation0() {
  return cfg_.freeze_pretrained ? frozen_relations_
                                : params_.at("emb.relations").tensor;
}

KnowSiteModel::Forward KnowSiteModel::forward(const std::vector<int>& brand_ids,
                                              bool training, Rng* dropout_rng) {
  if (brand_ids.empty()) throw ContractError("forward on an empty batch");
  auto out = encoder_->forward(graph_, entity0(), relation0(), training,
                               dropout_rng, params_);
  std::vector<int64_t> brand_idx(brand_ids.begin(), brand_ids.end());
  Tensor brand_rows = num::gather_rows(out.entity_h, brand_idx);
  std::vector<int64_t> region_idx(regions_.begin(), regions_.end());
  Tensor region_rows = num::gather_rows(out.entity_h, region_idx);
  Tensor osa_row = num::reshape(
      num::gather_rows(out.relation_h, {osa_relation_}), {cfg_.dim});

  Tensor z, attention;
  if (!paths_.empty()) {
    auto attended =
        decoder_->attend(brand_rows, paths_, out.relation_h, params_);
    z = attended.z;
    attention = attended.weights;
  } else {
    z = brand_rows;  // unused at alpha=1
    attention = Tensor::zeros({static_cast<int64_t>(brand_ids.size()), 1});
  }
  Tensor scores =
      decoder_->score_regions(z, brand_rows, region_rows, osa_row, cfg_.alpha);
  return {scores, attention};
}

Tensor KnowSiteModel::loss(const std::vector<SitePair>& batch, bool training,
                           Rng* dropout_rng) {
  if (batch.empty()) throw ContractError("loss on an empty batch");
  std::vector<int> brands;
  brands.reserve(batch.size());
  for (const auto& p : batch) brands.push_back(p.brand);
  Forward fwd = forward(brands, training, dropout_rng);

  const int64_t b = static_cast<int64_t>(batch.size());
  const int64_t n = static_cast<int64_t>(regions_.size());
  std::vector<double> onehot(static_cast<size_t>(b * n), 0.0);
  for (int64_t i = 0; i < b; ++i) {
    const int target = region_index(batch[static_cast<size_t>(i)].region);
    onehot[static_cast<size_t>(i * n + target)] = 1.0;
  }
  Tensor mask = Tensor::from({b, n}, std::move(onehot));
  Tensor nll = num::mul_scalar(
      num::sum(num::mul(num::log_softmax(fwd.scores), mask)),
      -1.0 / static_cast<double>(b));
  Tensor reg = num::mul_scalar(parameter_l2_norm(params_, cfg_.reg_squared),
                               cfg_.lambda_reg);
  return num::add(nll, reg);
}

Encoder::Output KnowSiteModel::encode_eval() {
  num::NoGradGuard guard;
  return encoder_->forward(graph_, entity0(), relation0(), false, nullptr,
                           params_);
}

std::vector<double> KnowSiteModel::attention_weights(int brand_id) {
  num::NoGradGuard guard;
  Forward fwd = forward({brand_id}, false, nullptr);
  return fwd.attention.value();
}

EmbeddingTable KnowSiteModel::entity_table() const {
  std::vector<std::string> names;
  for (const auto& e : kg_->entities()) names.push_back(e.name);
  Tensor rows = cfg_.freeze_pretrained
                    ? frozen_entities_
                    : params_.at("emb.entities").tensor;
  return EmbeddingTable::make(rows.detached_copy(), std::move(names));
}

EmbeddingTable KnowSiteModel::relation_table() const {
  std::vector<std::string> names;
  for (const auto& r : kg_->relations()) names.push_back(r.name);
  Tensor rows = cfg_.freeze_pretrained
                    ? frozen_relations_
                    : params_.at("emb.relations").tensor;
  return EmbeddingTable::make(rows.detached_copy(), std::move(names));
}

}  // namespace knowsite::model
