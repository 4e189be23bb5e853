#include "knowsite/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace knowsite {

namespace {

using nlohmann::ordered_json;

void reject_unknown(const ordered_json& j, const std::set<std::string>& known,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

template <typename T>
void read(const ordered_json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

synth::PatternKind pattern_kind_from_string(const std::string& s) {
  if (s == "related_brand_colocation") {
    return synth::PatternKind::RelatedBrandColocation;
  }
  if (s == "flow_following") return synth::PatternKind::FlowFollowing;
  if (s == "function_matching") return synth::PatternKind::FunctionMatching;
  throw ConfigError("unknown pattern kind: " + s);
}

}  // namespace

void RunConfig::derive_seeds() {
  if (city.seed == 0) city.seed = seed;
  if (dataset.seed == 0) dataset.seed = seed + 1;
  if (tucker.seed == 0) tucker.seed = seed + 2;
  if (train.seed == 0) train.seed = seed + 3;
}

RunConfig parse_run_config(const std::string& json_text,
                           const uint64_t* seed_override) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j,
                 {"seed", "city", "patterns", "extract", "dataset", "pretrain",
                  "train", "eval_ks", "paths_file", "jobs"},
                 "config");
  RunConfig cfg;
  read(j, "seed", cfg.seed);
  if (seed_override != nullptr) cfg.seed = *seed_override;
  read(j, "jobs", cfg.jobs);
  read(j, "paths_file", cfg.paths_file);
  if (j.contains("eval_ks")) {
    cfg.eval_ks = j.at("eval_ks").get<std::vector<int>>();
  }

  if (j.contains("city")) {
    const auto& c = j.at("city");
    reject_unknown(c,
                   {"grid_rows", "grid_cols", "voronoi_seeds", "n_brands",
                    "n_pois", "n_ba", "n_cate1", "n_cate2", "n_cate3", "seed"},
                   "config.city");
    read(c, "grid_rows", cfg.city.grid_rows);
    read(c, "grid_cols", cfg.city.grid_cols);
    read(c, "voronoi_seeds", cfg.city.voronoi_seeds);
    read(c, "n_brands", cfg.city.n_brands);
    read(c, "n_pois", cfg.city.n_pois);
    read(c, "n_ba", cfg.city.n_ba);
    read(c, "n_cate1", cfg.city.n_cate1);
    read(c, "n_cate2", cfg.city.n_cate2);
    read(c, "n_cate3", cfg.city.n_cate3);
    uint64_t s = 0;
    read(c, "seed", s);
    cfg.city.seed = s;
  } else {
    cfg.city.seed = 0;
  }

  if (j.contains("patterns")) {
    for (const auto& p : j.at("patterns")) {
      reject_unknown(p, {"kind", "brands", "strength"}, "config.patterns[]");
      synth::PlantedPattern pattern;
      pattern.kind = pattern_kind_from_string(p.at("kind").get<std::string>());
      pattern.brand_indices = p.at("brands").get<std::vector<int>>();
      read(p, "strength", pattern.strength);
      cfg.patterns.push_back(std::move(pattern));
    }
  }

  if (j.contains("extract")) {
    const auto& e = j.at("extract");
    reject_unknown(e,
                   {"near_km", "sim_threshold", "flow_min", "cochk_min",
                    "comp_km", "ba_radius_km", "planar", "cocheckin",
                    "subcateof_31"},
                   "config.extract");
    read(e, "near_km", cfg.extract.near_km);
    read(e, "sim_threshold", cfg.extract.sim_threshold);
    read(e, "flow_min", cfg.extract.flow_min);
    read(e, "cochk_min", cfg.extract.cochk_min);
    read(e, "comp_km", cfg.extract.comp_km);
    read(e, "ba_radius_km", cfg.extract.ba_radius_km);
    read(e, "planar", cfg.extract.planar);
    read(e, "cocheckin", cfg.extract.schema.cocheckin);
    read(e, "subcateof_31", cfg.extract.schema.subcateof_31);
  }

  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    reject_unknown(d, {"seed", "split_per_brand", "min_stores"},
                   "config.dataset");
    uint64_t s = 0;
    read(d, "seed", s);
    cfg.dataset.seed = s;
    read(d, "split_per_brand", cfg.dataset.split_per_brand);
    read(d, "min_stores", cfg.dataset.min_stores);
  } else {
    cfg.dataset.seed = 0;
  }

  if (j.contains("pretrain")) {
    const auto& p = j.at("pretrain");
    reject_unknown(p,
                   {"dim", "lr", "batch_size", "label_smoothing", "dropout",
                    "max_epochs", "patience", "min_improvement", "seed"},
                   "config.pretrain");
    read(p, "dim", cfg.tucker.dim);
    read(p, "lr", cfg.tucker.lr);
    read(p, "batch_size", cfg.tucker.batch_size);
    read(p, "label_smoothing", cfg.tucker.label_smoothing);
    read(p, "dropout", cfg.tucker.dropout);
    read(p, "max_epochs", cfg.tucker.max_epochs);
    read(p, "patience", cfg.tucker.patience);
    read(p, "min_improvement", cfg.tucker.min_improvement);
    uint64_t s = 0;
    read(p, "seed", s);
    cfg.tucker.seed = s;
  } else {
    cfg.tucker.seed = 0;
  }

  if (j.contains("train")) {
    const auto& t = j.at("train");
    reject_unknown(t,
                   {"batch_size", "dim", "lr", "dropout", "alpha",
                    "lambda_reg", "reg_squared", "patience", "max_epochs",
                    "seed", "runs", "enforce_grid", "layers", "encoder_op",
                    "self_loop", "batchnorm", "composition",
                    "freeze_pretrained"},
                   "config.train");
    read(t, "batch_size", cfg.train.batch_size);
    read(t, "dim", cfg.train.dim);
    read(t, "lr", cfg.train.lr);
    read(t, "dropout", cfg.train.dropout);
    read(t, "alpha", cfg.train.alpha);
    read(t, "lambda_reg", cfg.train.lambda_reg);
    read(t, "reg_squared", cfg.train.reg_squared);
    read(t, "patience", cfg.train.patience);
    read(t, "max_epochs", cfg.train.max_epochs);
    read(t, "runs", cfg.train.runs);
    read(t, "enforce_grid", cfg.train.enforce_grid);
    read(t, "layers", cfg.train.layers);
    if (t.contains("encoder_op")) {
      cfg.train.encoder_op =
          model::compose_op_from_name(t.at("encoder_op").get<std::string>());
    }
    read(t, "self_loop", cfg.train.self_loop);
    read(t, "batchnorm", cfg.train.batchnorm);
    if (t.contains("composition")) {
      cfg.train.composition =
          model::path_compose_from_name(t.at("composition").get<std::string>());
    }
    read(t, "freeze_pretrained", cfg.train.freeze_pretrained);
    uint64_t s = 0;
    read(t, "seed", s);
    cfg.train.seed = s;
  } else {
    cfg.train.seed = 0;
  }

  cfg.derive_seeds();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file,
                          const uint64_t* seed_override) {
  std::ifstream in(file);
  if (!in) throw SourceError("cannot open config " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), seed_override);
}

std::string run_config_to_json(const RunConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  ordered_json city;
  city["grid_rows"] = cfg.city.grid_rows;
  city["grid_cols"] = cfg.city.grid_cols;
  city["voronoi_seeds"] = cfg.city.voronoi_seeds;
  city["n_brands"] = cfg.city.n_brands;
  city["n_pois"] = cfg.city.n_pois;
  city["n_ba"] = cfg.city.n_ba;
  city["n_cate1"] = cfg.city.n_cate1;
  city["n_cate2"] = cfg.city.n_cate2;
  city["n_cate3"] = cfg.city.n_cate3;
  city["seed"] = cfg.city.seed;
  j["city"] = city;
  ordered_json patterns = ordered_json::array();
  for (const auto& p : cfg.patterns) {
    ordered_json pj;
    pj["kind"] = synth::pattern_kind_name(p.kind);
    pj["brands"] = p.brand_indices;
    pj["strength"] = p.strength;
    patterns.push_back(pj);
  }
  j["patterns"] = patterns;
  ordered_json extract;
  extract["near_km"] = cfg.extract.near_km;
  extract["sim_threshold"] = cfg.extract.sim_threshold;
  extract["flow_min"] = cfg.extract.flow_min;
  extract["cochk_min"] = cfg.extract.cochk_min;
  extract["comp_km"] = cfg.extract.comp_km;
  extract["ba_radius_km"] = cfg.extract.ba_radius_km;
  extract["planar"] = cfg.extract.planar;
  extract["cocheckin"] = cfg.extract.schema.cocheckin;
  extract["subcateof_31"] = cfg.extract.schema.subcateof_31;
  j["extract"] = extract;
  ordered_json dataset;
  dataset["seed"] = cfg.dataset.seed;
  dataset["split_per_brand"] = cfg.dataset.split_per_brand;
  dataset["min_stores"] = cfg.dataset.min_stores;
  j["dataset"] = dataset;
  ordered_json pretrain;
  pretrain["dim"] = cfg.tucker.dim;
  pretrain["lr"] = cfg.tucker.lr;
  pretrain["batch_size"] = cfg.tucker.batch_size;
  pretrain["label_smoothing"] = cfg.tucker.label_smoothing;
  pretrain["dropout"] = cfg.tucker.dropout;
  pretrain["max_epochs"] = cfg.tucker.max_epochs;
  pretrain["patience"] = cfg.tucker.patience;
  pretrain["min_improvement"] = cfg.tucker.min_improvement;
  pretrain["seed"] = cfg.tucker.seed;
  j["pretrain"] = pretrain;
  ordered_json train;
  train["batch_size"] = cfg.train.batch_size;
  train["dim"] = cfg.train.dim;
  train["lr"] = cfg.train.lr;
  train["dropout"] = cfg.train.dropout;
  train["alpha"] = cfg.train.alpha;
  train["lambda_reg"] = cfg.train.lambda_reg;
  train["reg_squared"] = cfg.train.reg_squared;
  train["patience"] = cfg.train.patience;
  train["max_epochs"] = cfg.train.max_epochs;
  train["seed"] = cfg.train.seed;
  train["runs"] = cfg.train.runs;
  train["enforce_grid"] = cfg.train.enforce_grid;
  train["layers"] = cfg.train.layers;
  train["encoder_op"] = model::compose_op_name(cfg.train.encoder_op);
  train["self_loop"] = cfg.train.self_loop;
  train["batchnorm"] = cfg.train.batchnorm;
  train["composition"] = model::path_compose_name(cfg.train.composition);
  train["freeze_pretrained"] = cfg.train.freeze_pretrained;
  j["train"] = train;
  j["eval_ks"] = cfg.eval_ks;
  j["paths_file"] = cfg.paths_file;
  j["jobs"] = cfg.jobs;
  return j.dump(2);
}

}  // namespace knowsite
