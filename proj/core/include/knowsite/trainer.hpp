#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "knowsite/metrics.hpp"
#include "knowsite/model.hpp"

namespace knowsite::model {

inline constexpr double kLrGrid[] = {0.0005, 0.001, 0.003, 0.005};
inline constexpr double kDropoutGrid[] = {0.1, 0.3, 0.5};

struct TrainConfig {
  int batch_size = 128;
  int64_t dim = 64;
  double lr = 0.001;
  double dropout = 0.1;
  double alpha = 0.5;
  double lambda_reg = 1e-5;
  bool reg_squared = false;
  int patience = 10;
  int max_epochs = 100;
  uint64_t seed = 0;
  int runs = 10;
  // When on, lr and dropout must come from the protocol grids.
  bool enforce_grid = false;

  int layers = 2;
  ComposeOp encoder_op = ComposeOp::Rotate;
  bool self_loop = true;
  bool batchnorm = true;
  PathCompose composition = PathCompose::Gru;
  bool freeze_pretrained = false;

  void validate() const;
  ModelConfig model_config(uint64_t run_seed) const;
};

// Patience-based stopping on a higher-is-better metric.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}

  // Records one epoch's metric; returns true when training should stop.
  bool observe(double metric) {
    ++epochs_;
    if (metric > best_) {
      best_ = metric;
      best_epoch_ = epochs_;
      stall_ = 0;
    } else {
      ++stall_;
    }
    return stall_ >= patience_;
  }

  double best() const { return best_; }
  int best_epoch() const { return best_epoch_; }
  int epochs_seen() const { return epochs_; }

 private:
  int patience_;
  int epochs_ = 0;
  int stall_ = 0;
  double best_ = -std::numeric_limits<double>::infinity();
  int best_epoch_ = -1;
};

struct EpochRow {
  int epoch = 0;  // 1-based
  double train_loss = 0;
  double valid_ndcg10 = 0;
};

struct TrainResult {
  std::unique_ptr<KnowSiteModel> model;  // best-validation parameters
  std::vector<EpochRow> history;
  int best_epoch = -1;
  double best_valid = 0;
};

// Optional validation-metric override; the default computes NDCG@10 on the
// valid split. The result must be higher-is-better.
using ValidEvaluator = std::function<double(KnowSiteModel&, int epoch)>;

TrainResult train(const ukg::KnowledgeGraph& kg, const SiteDataset& ds,
                  const EmbeddingTable* pretrained_entities,
                  const EmbeddingTable* pretrained_relations,
                  const std::vector<RelationPath>& paths,
                  const TrainConfig& cfg,
                  const std::map<int, long long>& region_popularity,
                  ValidEvaluator valid_override = nullptr);

struct ExperimentResult {
  eval::MetricsReport aggregate;
  std::vector<eval::MetricsReport> per_run;
  std::vector<uint64_t> seeds;
};

// Trains cfg.runs models with seeds seed..seed+runs-1 (or the explicit
// list) and reports per-metric mean and standard deviation on `split`.
ExperimentResult run_experiment(
    const ukg::KnowledgeGraph& kg, const SiteDataset& ds,
    const EmbeddingTable* pretrained_entities,
    const EmbeddingTable* pretrained_relations,
    const std::vector<RelationPath>& paths, const TrainConfig& cfg,
    const std::map<int, long long>& region_popularity,
    const std::vector<int>& ks, Split split = Split::Test,
    std::vector<uint64_t> seeds = {}, int jobs = 1);

// Model variants evaluated identically: the full model, no pre-training
// (uniform init), no encoder (0 layers), no decoder (alpha = 1) and the
// three path-group removals.
std::vector<std::string> ablation_variant_names();
TrainConfig ablation_variant_config(const TrainConfig& base,
                                    const std::string& name);
std::vector<RelationPath> ablation_variant_paths(
    const std::vector<RelationPath>& base, const std::string& name);
bool ablation_variant_uses_pretrain(const std::string& name);

struct AblationResult {
  std::map<std::string, ExperimentResult> variants;
};

AblationResult ablation_suite(
    const ukg::KnowledgeGraph& kg, const SiteDataset& ds,
    const EmbeddingTable* pretrained_entities,
    const EmbeddingTable* pretrained_relations,
    const std::vector<RelationPath>& paths, const TrainConfig& cfg,
    const std::map<int, long long>& region_popularity,
    const std::vector<int>& ks, int jobs = 1);

}  // namespace knowsite::model
