#include "knowsite/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace knowsite::model {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must be in [0,1]");
  if (lambda_reg < 0.0) throw ConfigError("lambda_reg must be >= 0");
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigError("dropout must be in [0,1)");
  }
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (layers < 0 || layers > 3) throw ConfigError("layers must be in 0..3");
  if (enforce_grid) {
    auto in = [](double x, const double* grid, size_t n) {
      for (size_t i = 0; i < n; ++i) {
        if (x == grid[i]) return true;
      }
      return false;
    };
    if (!in(lr, kLrGrid, 4)) {
      throw ConfigError("grid mode: lr must be one of the protocol grid");
    }
    if (!in(dropout, kDropoutGrid, 3)) {
      throw ConfigError("grid mode: dropout must be one of the protocol grid");
    }
  }
}

ModelConfig TrainConfig::model_config(uint64_t run_seed) const {
  ModelConfig mc;
  mc.dim = dim;
  mc.encoder.layers = layers;
  mc.encoder.op = encoder_op;
  mc.encoder.self_loop = self_loop;
  mc.encoder.batchnorm = batchnorm;
  mc.encoder.dropout = dropout;
  mc.composition = composition;
  mc.alpha = alpha;
  mc.lambda_reg = lambda_reg;
  mc.reg_squared = reg_squared;
  mc.freeze_pretrained = freeze_pretrained;
  mc.seed = run_seed;
  return mc;
}

TrainResult train(const ukg::KnowledgeGraph& kg, const SiteDataset& ds,
                  const EmbeddingTable* pretrained_entities,
                  const EmbeddingTable* pretrained_relations,
                  const std::vector<RelationPath>& paths,
                  const TrainConfig& cfg,
                  const std::map<int, long long>& region_popularity,
                  ValidEvaluator valid_override) {
  cfg.validate();
  if (ds.train.empty()) throw ContractError("training needs train pairs");

  TrainResult result;
  result.model = std::make_unique<KnowSiteModel>(
      kg, cfg.model_config(cfg.seed), pretrained_entities,
      pretrained_relations, paths);
  KnowSiteModel& model = *result.model;

  Rng train_rng(cfg.seed ^ 0x517cc1b727220a95ULL);
  EarlyStopper stopper(cfg.patience);
  auto best_state = model.params().snapshot();
  std::vector<SitePair> order = ds.train;

  auto validate_now = [&](int epoch) {
    if (valid_override) return valid_override(model, epoch);
    auto report =
        eval::evaluate_model(model, ds, Split::Valid, region_popularity, {10});
    return report.mean.at(10).ndcg;
  };

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    train_rng.shuffle(order);
    double loss_weighted = 0.0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end =
          std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      std::vector<SitePair> batch(order.begin() + static_cast<int64_t>(start),
                                  order.begin() + static_cast<int64_t>(end));
      num::Tensor loss = model.loss(batch, /*training=*/true, &train_rng);
      loss_weighted += loss.item() * static_cast<double>(batch.size());
      num::backward(loss);
      num::adam_step(model.params(), cfg.lr);
    }
    EpochRow row;
    row.epoch = epoch;
    row.train_loss = loss_weighted / static_cast<double>(order.size());
    row.valid_ndcg10 = validate_now(epoch);
    result.history.push_back(row);

    const double prev_best = stopper.best();
    const bool stop = stopper.observe(row.valid_ndcg10);
    if (row.valid_ndcg10 > prev_best) {
      best_state = model.params().snapshot();
    }
    if (stop) break;
  }
  model.params().restore(best_state);
  result.best_epoch = stopper.best_epoch();
  result.best_valid = stopper.best();
  return result;
}

ExperimentResult run_experiment(
    const ukg::KnowledgeGraph& kg, const SiteDataset& ds,
    const EmbeddingTable* pretrained_entities,
    const EmbeddingTable* pretrained_relations,
    const std::vector<RelationPath>& paths, const TrainConfig& cfg,
    const std::map<int, long long>& region_popularity,
    const std::vector<int>& ks, Split split, std::vector<uint64_t> seeds,
    int jobs) {
  cfg.validate();
  if (seeds.empty()) {
    for (int i = 0; i < cfg.runs; ++i) {
      seeds.push_back(cfg.seed + static_cast<uint64_t>(i));
    }
  }
  ExperimentResult result;
  result.seeds = seeds;
  result.per_run.resize(seeds.size());

  auto run_one = [&](size_t i) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = seeds[i];
    auto trained = train(kg, ds, pretrained_entities, pretrained_relations,
                         paths, run_cfg, region_popularity);
    result.per_run[i] = eval::evaluate_model(*trained.model, ds, split,
                                             region_popularity, ks);
  };

  if (jobs <= 1 || seeds.size() == 1) {
    for (size_t i = 0; i < seeds.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    const size_t workers =
        std::min<size_t>(static_cast<size_t>(jobs), seeds.size());
    for (size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const size_t i = next.fetch_add(1);
          if (i >= seeds.size()) break;
          run_one(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  result.aggregate = eval::aggregate_runs(result.per_run);
  return result;
}

std::vector<std::string> ablation_variant_names() {
  return {"full",         "wo_pretrain",     "wo_encoder",    "wo_decoder",
          "drop_region",  "drop_brand",      "drop_store"};
}

TrainConfig ablation_variant_config(const TrainConfig& base,
                                    const std::string& name) {
  TrainConfig cfg = base;
  if (name == "wo_encoder") {
    cfg.layers = 0;
  } else if (name == "wo_decoder") {
    cfg.alpha = 1.0;
  } else if (name != "full" && name != "wo_pretrain" &&
             name != "drop_region" && name != "drop_brand" &&
             name != "drop_store") {
    throw ConfigError("unknown ablation variant: " + name);
  }
  return cfg;
}

std::vector<RelationPath> ablation_variant_paths(
    const std::vector<RelationPath>& base, const std::string& name) {
  if (name == "drop_region") return drop_group(base, PathGroup::RegionBased);
  if (name == "drop_brand") return drop_group(base, PathGroup::BrandBased);
  if (name == "drop_store") return drop_group(base, PathGroup::StoreBased);
  return base;
}

bool ablation_variant_uses_pretrain(const std::string& name) {
  return name != "wo_pretrain";
}

AblationResult ablation_suite(
    const ukg::KnowledgeGraph& kg, const SiteDataset& ds,
    const EmbeddingTable* pretrained_entities,
    const EmbeddingTable* pretrained_relations,
    const std::vector<RelationPath>& paths, const TrainConfig& cfg,
    const std::map<int, long long>& region_popularity,
    const std::vector<int>& ks, int jobs) {
  AblationResult result;
  for (const auto& name : ablation_variant_names()) {
    const TrainConfig variant_cfg = ablation_variant_config(cfg, name);
    const auto variant_paths = ablation_variant_paths(paths, name);
    const bool pretrain = ablation_variant_uses_pretrain(name);
    result.variants[name] = run_experiment(
        kg, ds, pretrain ? pretrained_entities : nullptr,
        pretrain ? pretrained_relations : nullptr, variant_paths, variant_cfg,
        region_popularity, ks, Split::Test, {}, jobs);
  }
  return result;
}

}  // namespace knowsite::model
