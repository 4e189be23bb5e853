#pragma once

#include <filesystem>
#include <string>

#include "knowsite/dataset.hpp"
#include "knowsite/extract.hpp"
#include "knowsite/synthcity.hpp"
#include "knowsite/trainer.hpp"
#include "knowsite/tucker.hpp"

namespace knowsite {

// One structured file holding every tunable; derived sub-seeds come from the
// master seed unless a section pins its own.
struct RunConfig {
  uint64_t seed = 1;
  synth::CityConfig city;
  std::vector<synth::PlantedPattern> patterns;
  ukg::ExtractConfig extract;
  DatasetOptions dataset;
  model::TuckerConfig tucker;
  model::TrainConfig train;
  std::vector<int> eval_ks = {5, 10, 20};
  std::string paths_file;  // optional decoder path-table override
  int jobs = 1;

  // Applies the master seed to sections that did not pin their own.
  void derive_seeds();
};

// Strict parse: unknown keys anywhere are rejected. A seed override (e.g.
// the KNOWSITE_SEED environment variable) replaces the master seed before
// sub-seeds are derived; explicitly pinned section seeds stay put.
RunConfig load_run_config(const std::filesystem::path& file,
                          const uint64_t* seed_override = nullptr);
RunConfig parse_run_config(const std::string& json_text,
                           const uint64_t* seed_override = nullptr);
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace knowsite
