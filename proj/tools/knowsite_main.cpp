// knowsite: site-selection pipeline driver.
//
// Subcommands: synth, build-kg, pretrain, train, evaluate, explain, ablate.
// Every run is determined by a JSON config plus the master seed; the
// KNOWSITE_SEED environment variable overrides the config seed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "knowsite/config.hpp"
#include "knowsite/explain.hpp"
#include "knowsite/heatmap.hpp"
#include "knowsite/metrics.hpp"
#include "knowsite/serialize.hpp"
#include "knowsite/synthcity.hpp"
#include "knowsite/trainer.hpp"
#include "knowsite/tucker.hpp"

namespace fs = std::filesystem;
using namespace knowsite;

namespace {

RunConfig load_config_or_default(const std::string& path) {
  std::optional<uint64_t> env_seed;
  if (const char* env = std::getenv("KNOWSITE_SEED")) {
    env_seed = std::stoull(env);
  }
  if (path.empty()) {
    RunConfig cfg;
    if (env_seed) cfg.seed = *env_seed;
    cfg.city.seed = 0;
    cfg.dataset.seed = 0;
    cfg.tucker.seed = 0;
    cfg.train.seed = 0;
    cfg.derive_seeds();
    return cfg;
  }
  return load_run_config(path, env_seed ? &*env_seed : nullptr);
}

struct WorkingData {
  ukg::LoadedKg loaded;
  SiteDataset dataset;
  ukg::KnowledgeGraph kg;  // leakage-removed
  std::map<int, long long> region_popularity;
  std::vector<model::RelationPath> paths;
};

// KG + sites -> split dataset -> leakage-removed graph, as every modeling
// stage sees it.
WorkingData prepare_working_data(const fs::path& kg_dir,
                                 const fs::path& sites_file,
                                 const RunConfig& cfg) {
  WorkingData w;
  w.loaded = ukg::load_kg(kg_dir);
  auto rows = load_sites_file(sites_file);
  SiteDataset ds = build_site_dataset(w.loaded.kg, w.loaded.brand_alias, rows,
                                      cfg.dataset);
  auto leak = ukg::remove_leakage(w.loaded.kg, ds.holdout_pairs());
  ds.remap(leak.old_to_new);
  w.kg = std::move(leak.kg);
  w.dataset = std::move(ds);
  for (const auto& [name, pop] : w.loaded.region_popularity) {
    if (auto id = w.kg.find_entity(name)) w.region_popularity[*id] = pop;
  }
  w.paths = cfg.paths_file.empty()
                ? model::default_path_table(w.kg)
                : model::load_path_table(cfg.paths_file, w.kg);
  return w;
}

std::optional<EmbeddingTable> maybe_load_table(const fs::path& dir,
                                               const char* stem) {
  const fs::path path = dir / stem;
  if (!fs::exists(path)) {
    throw SourceError("missing embedding table " + path.string());
  }
  return load_embeddings(path);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw SourceError("cannot write " + path.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

void write_history_csv(const fs::path& path,
                       const std::vector<model::EpochRow>& history) {
  std::ofstream out(path);
  if (!out) throw SourceError("cannot write " + path.string());
  out << "epoch,train_loss,valid_ndcg10\n";
  char buf[128];
  for (const auto& row : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", row.epoch,
                  row.train_loss, row.valid_ndcg10);
    out << buf;
  }
}

struct CheckpointPaths {
  fs::path kg_dir, sites_file, pretrained_dir;
};

void save_checkpoint(const fs::path& out_dir, const RunConfig& cfg,
                     const CheckpointPaths& paths,
                     model::KnowSiteModel& model,
                     const std::vector<model::EpochRow>& history) {
  fs::create_directories(out_dir);
  nlohmann::ordered_json meta;
  meta["config"] = nlohmann::ordered_json::parse(run_config_to_json(cfg));
  meta["kg_dir"] = fs::absolute(paths.kg_dir).string();
  meta["sites_file"] = fs::absolute(paths.sites_file).string();
  meta["pretrained_dir"] =
      paths.pretrained_dir.empty()
          ? ""
          : fs::absolute(paths.pretrained_dir).string();
  write_text(out_dir / "model_config.json", meta.dump(2));

  save_parameters(out_dir / "params.bin", model.params());
  save_embeddings(out_dir / "entities.emb", model.entity_table());
  save_embeddings(out_dir / "relations.emb", model.relation_table());
  auto encoded = model.encode_eval();
  std::vector<std::string> entity_names, relation_names;
  for (const auto& e : model.kg().entities()) entity_names.push_back(e.name);
  for (const auto& r : model.kg().relations()) relation_names.push_back(r.name);
  save_embeddings(out_dir / "encoded_entities.emb",
                  EmbeddingTable::make(encoded.entity_h.detached_copy(),
                                       entity_names));
  save_embeddings(out_dir / "encoded_relations.emb",
                  EmbeddingTable::make(encoded.relation_h.detached_copy(),
                                       relation_names));
  write_history_csv(out_dir / "history.csv", history);
}

struct LoadedCheckpoint {
  RunConfig cfg;
  CheckpointPaths paths;
  WorkingData data;
  std::unique_ptr<model::KnowSiteModel> model;
};

LoadedCheckpoint load_checkpoint(const fs::path& model_dir) {
  LoadedCheckpoint ck;
  std::ifstream in(model_dir / "model_config.json");
  if (!in) {
    throw SourceError("missing model_config.json in " + model_dir.string());
  }
  nlohmann::ordered_json meta = nlohmann::ordered_json::parse(in);
  ck.cfg = parse_run_config(meta.at("config").dump());
  ck.paths.kg_dir = meta.at("kg_dir").get<std::string>();
  ck.paths.sites_file = meta.at("sites_file").get<std::string>();
  ck.paths.pretrained_dir = meta.at("pretrained_dir").get<std::string>();

  ck.data = prepare_working_data(ck.paths.kg_dir, ck.paths.sites_file, ck.cfg);
  auto entities = load_embeddings(model_dir / "entities.emb");
  auto relations = load_embeddings(model_dir / "relations.emb");
  // The saved layer-0 tables seed construction (they are the final values);
  // params.bin then restores everything registered in the store.
  ck.model = std::make_unique<model::KnowSiteModel>(
      ck.data.kg, ck.cfg.train.model_config(ck.cfg.train.seed), &entities,
      &relations, ck.data.paths);
  load_parameters(model_dir / "params.bin", ck.model->params());
  return ck;
}

std::vector<std::string> brand_entity_names(const ukg::KnowledgeGraph& kg) {
  std::vector<std::string> names;
  for (int b : kg.brand_ids()) names.push_back(kg.entity(b).name);
  return names;
}

nlohmann::ordered_json experiment_json(const model::ExperimentResult& result) {
  nlohmann::ordered_json j;
  j["aggregate"] =
      nlohmann::ordered_json::parse(result.aggregate.to_json_string());
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (size_t i = 0; i < result.per_run.size(); ++i) {
    nlohmann::ordered_json run;
    run["seed"] = result.seeds[i];
    run["metrics"] =
        nlohmann::ordered_json::parse(result.per_run[i].to_json_string());
    runs.push_back(run);
  }
  j["runs"] = runs;
  return j;
}

// ---- subcommand bodies ----

int cmd_synth(const std::string& config_path, const std::string& out_dir) {
  RunConfig cfg = load_config_or_default(config_path);
  auto city = synth::generate_city(cfg.city, cfg.patterns);
  synth::write_city(city, out_dir);
  std::cout << "wrote " << city.sources.regions.size() << " regions, "
            << city.sources.pois.size() << " pois, "
            << city.sources.sites.size() << " site rows to " << out_dir
            << "\n";
  return 0;
}

int cmd_build_kg(const std::string& sources_dir, const std::string& out_dir,
                 const std::string& config_path) {
  RunConfig cfg = load_config_or_default(config_path);
  auto src = ukg::load_sources(sources_dir);
  auto result = ukg::build_kg(src, cfg.extract);
  ukg::save_kg(result, out_dir);
  std::cout << "entities=" << result.kg.entity_count()
            << " relations=" << result.kg.relation_count()
            << " facts=" << result.kg.facts().size()
            << " pois_outside_regions=" << result.stats.pois_outside_regions
            << " brands_without_pois=" << result.stats.brands_without_pois
            << "\n";
  if (!result.report.valid()) {
    std::cerr << "error: validation: " << result.report.violations.size()
              << " violations, " << result.report.duplicate_facts
              << " duplicates (see validation_report.json)\n";
    return 1;
  }
  return 0;
}

int cmd_pretrain(const std::string& kg_dir, const std::string& out_dir,
                 const std::string& sites_file,
                 const std::string& config_path, int epochs_override,
                 double lr_override, const std::string& projection_file,
                 int projection_sample) {
  RunConfig cfg = load_config_or_default(config_path);
  if (epochs_override > 0) cfg.tucker.max_epochs = epochs_override;
  if (lr_override > 0) cfg.tucker.lr = lr_override;

  auto loaded = ukg::load_kg(kg_dir);
  const ukg::KnowledgeGraph* kg = &loaded.kg;
  ukg::KnowledgeGraph stripped;
  if (!sites_file.empty()) {
    auto rows = load_sites_file(sites_file);
    SiteDataset ds = build_site_dataset(loaded.kg, loaded.brand_alias, rows,
                                        cfg.dataset);
    auto leak = ukg::remove_leakage(loaded.kg, ds.holdout_pairs());
    stripped = std::move(leak.kg);
    kg = &stripped;
    std::cout << "leakage removal dropped " << leak.removed_facts
              << " facts and " << leak.removed_pois << " store pois\n";
  } else {
    std::cout << "note: pretraining on the full graph (pass --sites to strip "
                 "held-out links)\n";
  }
  auto result = model::pretrain(*kg, cfg.tucker);
  fs::create_directories(out_dir);
  save_embeddings(fs::path(out_dir) / "entities.emb", result.entities);
  save_embeddings(fs::path(out_dir) / "relations.emb", result.relations);
  std::vector<std::string> core_name = {"core"};
  save_embeddings(
      fs::path(out_dir) / "core.emb",
      EmbeddingTable::make(
          num::reshape(result.core, {1, result.core.numel()}).detached_copy(),
          core_name));
  std::cout << "pretrained " << result.entities.count() << " entities for "
            << result.epochs << " epochs, final loss "
            << result.loss_history.back() << "\n";
  if (!projection_file.empty()) {
    const int64_t written = model::export_for_projection(
        result.entities, *kg, projection_sample, cfg.seed, projection_file);
    std::cout << "projection export: " << written << " rows\n";
  }
  return 0;
}

int cmd_train(const std::string& kg_dir, const std::string& sites_file,
              const std::string& pretrained_dir,
              const std::string& config_path, const std::string& out_dir,
              int jobs) {
  RunConfig cfg = load_config_or_default(config_path);
  WorkingData w = prepare_working_data(kg_dir, sites_file, cfg);

  std::optional<EmbeddingTable> pre_e, pre_r;
  if (!pretrained_dir.empty()) {
    pre_e = maybe_load_table(pretrained_dir, "entities.emb");
    pre_r = maybe_load_table(pretrained_dir, "relations.emb");
  }
  auto result = model::train(w.kg, w.dataset, pre_e ? &*pre_e : nullptr,
                             pre_r ? &*pre_r : nullptr, w.paths, cfg.train,
                             w.region_popularity);
  CheckpointPaths paths{kg_dir, sites_file, pretrained_dir};
  save_checkpoint(out_dir, cfg, paths, *result.model, result.history);
  std::cout << "trained " << result.history.size() << " epochs, best epoch "
            << result.best_epoch << " valid ndcg@10 " << result.best_valid
            << "\n";

  if (cfg.train.runs > 1) {
    auto experiment = model::run_experiment(
        w.kg, w.dataset, pre_e ? &*pre_e : nullptr, pre_r ? &*pre_r : nullptr,
        w.paths, cfg.train, w.region_popularity, cfg.eval_ks, Split::Test, {},
        jobs > 0 ? jobs : cfg.jobs);
    write_text(fs::path(out_dir) / "experiment_metrics.json",
               experiment_json(experiment).dump(2));
    std::cout << "experiment over " << cfg.train.runs
              << " runs: mean hit@10 = "
              << experiment.aggregate.mean.at(10).hit << "\n";
  }
  return 0;
}

int cmd_evaluate(const std::string& model_dir, const std::string& split_name,
                 std::string out_file) {
  auto ck = load_checkpoint(model_dir);
  const Split split = split_from_name(split_name);
  auto report = eval::evaluate_model(*ck.model, ck.data.dataset, split,
                                     ck.data.region_popularity,
                                     ck.cfg.eval_ks);
  if (out_file.empty()) {
    out_file = (fs::path(model_dir) / "metrics_report.json").string();
  }
  write_text(out_file, report.to_json_string());
  eval::write_per_brand_csv(
      report, ck.data.kg,
      fs::path(out_file).replace_extension(".per_brand.csv"));
  std::cout << "split=" << split_name
            << " brands=" << report.brands_evaluated
            << " hit@10=" << report.mean.at(10).hit
            << " ndcg@10=" << report.mean.at(10).ndcg << "\n";
  return 0;
}

int cmd_explain(const std::string& model_dir, const std::string& out_dir,
                const std::string& ablation_report, bool render_heatmaps) {
  auto ck = load_checkpoint(model_dir);
  fs::create_directories(out_dir);
  const auto brand_names = brand_entity_names(ck.data.kg);

  auto attention = xai::brand_attention(*ck.model, ck.data.kg.brand_ids());
  xai::write_attention_csv(attention, fs::path(out_dir) / "attention_brands.csv");
  auto categories = xai::category_attention(*ck.model);
  xai::write_attention_csv(categories,
                           fs::path(out_dir) / "attention_categories.csv");

  // Task-agnostic vs task-specific brand distances.
  EmbeddingTable pretrained_rows =
      ck.paths.pretrained_dir.empty()
          ? load_embeddings(fs::path(model_dir) / "entities.emb")
          : load_embeddings(fs::path(ck.paths.pretrained_dir) /
                            "entities.emb");
  auto cos_pre = xai::cosine_matrix(pretrained_rows, brand_names);
  xai::write_cosine_csv(cos_pre, fs::path(out_dir) / "cosine_pretrained.csv");
  auto encoded = load_embeddings(fs::path(model_dir) / "encoded_entities.emb");
  auto cos_enc = xai::cosine_matrix(encoded, brand_names);
  xai::write_cosine_csv(cos_enc, fs::path(out_dir) / "cosine_encoded.csv");

  if (!ablation_report.empty()) {
    std::ifstream in(ablation_report);
    if (!in) throw SourceError("cannot open " + ablation_report);
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(in);
    std::map<std::string, eval::MetricsReport> variants;
    for (auto it = j.at("variants").begin(); it != j.at("variants").end();
         ++it) {
      eval::MetricsReport r;
      r.ks = {10};
      const auto& per_k = it.value().at("aggregate").at("per_k").at("10");
      r.mean[10] = {per_k.at("ndcg").get<double>(),
                    per_k.at("hit").get<double>(),
                    per_k.at("precision").get<double>(),
                    per_k.at("recall").get<double>(),
                    per_k.at("map").get<double>()};
      r.stddev[10] = {};
      variants[it.key()] = std::move(r);
    }
    auto pg = xai::path_group_report(variants);
    xai::write_path_group_csv(pg, fs::path(out_dir) / "path_group_deltas.csv");
  }

  if (render_heatmaps) {
    write_heatmap_png(fs::path(out_dir) / "attention_brands.png",
                      attention.values);
    if (!categories.values.empty()) {
      write_heatmap_png(fs::path(out_dir) / "attention_categories.png",
                        categories.values);
    }
    write_heatmap_png(fs::path(out_dir) / "cosine_pretrained.png",
                      cos_pre.distance);
    write_heatmap_png(fs::path(out_dir) / "cosine_encoded.png",
                      cos_enc.distance);
  }
  std::cout << "explained " << attention.row_names.size() << " brands, "
            << categories.row_names.size() << " categories\n";
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& kg_dir,
               const std::string& sites_file,
               const std::string& pretrained_dir, const std::string& out_dir,
               int jobs) {
  RunConfig cfg = load_config_or_default(config_path);
  WorkingData w = prepare_working_data(kg_dir, sites_file, cfg);
  std::optional<EmbeddingTable> pre_e, pre_r;
  if (!pretrained_dir.empty()) {
    pre_e = maybe_load_table(pretrained_dir, "entities.emb");
    pre_r = maybe_load_table(pretrained_dir, "relations.emb");
  }
  auto result = model::ablation_suite(
      w.kg, w.dataset, pre_e ? &*pre_e : nullptr, pre_r ? &*pre_r : nullptr,
      w.paths, cfg.train, w.region_popularity, cfg.eval_ks,
      jobs > 0 ? jobs : cfg.jobs);

  fs::create_directories(out_dir);
  nlohmann::ordered_json j;
  nlohmann::ordered_json variants;
  std::map<std::string, eval::MetricsReport> aggregate_by_variant;
  for (const auto& [name, experiment] : result.variants) {
    variants[name] = experiment_json(experiment);
    aggregate_by_variant[name] = experiment.aggregate;
    std::cout << name << ": hit@10=" << experiment.aggregate.mean.at(10).hit
              << " ndcg@10=" << experiment.aggregate.mean.at(10).ndcg << "\n";
  }
  j["variants"] = variants;
  write_text(fs::path(out_dir) / "ablation_metrics.json", j.dump(2));
  auto pg = xai::path_group_report(aggregate_by_variant);
  xai::write_path_group_csv(pg, fs::path(out_dir) / "path_group_deltas.csv");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knowledge-driven site selection pipeline"};
  app.require_subcommand(1);
  std::string workdir;
  app.add_option("--workdir", workdir,
                 "resolve all relative paths against this directory");

  std::string config_path, out_dir, sources_dir, kg_dir, sites_file;
  std::string pretrained_dir, model_dir, split_name = "test", out_file;
  std::string ablation_report;
  int jobs = 0;
  int pretrain_epochs = 0, projection_sample = 1000;
  double pretrain_lr = 0;
  std::string projection_file;
  bool render_heatmaps = false;

  auto* synth = app.add_subcommand("synth", "generate a synthetic city");
  synth->add_option("--config", config_path, "run config JSON");
  synth->add_option("--out", out_dir, "output directory")->required();

  auto* build = app.add_subcommand("build-kg", "extract the knowledge graph");
  build->add_option("--sources", sources_dir, "source TSV directory")
      ->required();
  build->add_option("--out", out_dir, "output directory")->required();
  build->add_option("--config", config_path, "run config JSON");

  auto* pre = app.add_subcommand("pretrain", "embedding pre-training");
  pre->add_option("--kg", kg_dir, "KG directory")->required();
  pre->add_option("--out", out_dir, "output directory")->required();
  pre->add_option("--sites", sites_file,
                  "site pairs; enables leakage removal before pre-training");
  pre->add_option("--config", config_path, "run config JSON");
  pre->add_option("--pretrain-epochs", pretrain_epochs, "epoch override");
  pre->add_option("--pretrain-lr", pretrain_lr, "learning-rate override");
  pre->add_option("--projection-export", projection_file,
                  "write an embedding TSV for external projection");
  pre->add_option("--projection-sample", projection_sample,
                  "sampled POI rows in the projection export");

  auto* train = app.add_subcommand("train", "train the ranking model");
  train->add_option("--kg", kg_dir, "KG directory")->required();
  train->add_option("--sites", sites_file, "site pairs TSV")->required();
  train->add_option("--pretrained", pretrained_dir,
                    "pre-trained embedding directory");
  train->add_option("--config", config_path, "run config JSON");
  train->add_option("--out", out_dir, "checkpoint directory")->required();
  train->add_option("--jobs", jobs, "parallel runs for the experiment loop");

  auto* evaluate = app.add_subcommand("evaluate", "score a trained model");
  evaluate->add_option("--model", model_dir, "checkpoint directory")
      ->required();
  evaluate->add_option("--split", split_name, "train|valid|test");
  evaluate->add_option("--out", out_file, "metrics report path");

  auto* explain = app.add_subcommand("explain", "emit explainability CSVs");
  explain->add_option("--model", model_dir, "checkpoint directory")
      ->required();
  explain->add_option("--out", out_dir, "output directory")->required();
  explain->add_option("--ablation-report", ablation_report,
                      "ablation_metrics.json for path-group deltas");
  explain->add_flag("--render-heatmaps", render_heatmaps,
                    "also render PNG heatmaps");

  auto* ablate = app.add_subcommand("ablate", "run the model-variant suite");
  ablate->add_option("--model-config", config_path, "run config JSON")
      ->required();
  ablate->add_option("--kg", kg_dir, "KG directory")->required();
  ablate->add_option("--sites", sites_file, "site pairs TSV")->required();
  ablate->add_option("--pretrained", pretrained_dir,
                     "pre-trained embedding directory");
  ablate->add_option("--out", out_dir, "output directory")->required();
  ablate->add_option("--jobs", jobs, "parallel runs per variant");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!workdir.empty()) fs::current_path(workdir);
    if (synth->parsed()) return cmd_synth(config_path, out_dir);
    if (build->parsed()) return cmd_build_kg(sources_dir, out_dir, config_path);
    if (pre->parsed()) {
      return cmd_pretrain(kg_dir, out_dir, sites_file, config_path,
                          pretrain_epochs, pretrain_lr, projection_file,
                          projection_sample);
    }
    if (train->parsed()) {
      return cmd_train(kg_dir, sites_file, pretrained_dir, config_path,
                       out_dir, jobs);
    }
    if (evaluate->parsed()) return cmd_evaluate(model_dir, split_name, out_file);
    if (explain->parsed()) {
      return cmd_explain(model_dir, out_dir, ablation_report, render_heatmaps);
    }
    if (ablate->parsed()) {
      return cmd_ablate(config_path, kg_dir, sites_file, pretrained_dir,
                        out_dir, jobs);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
