#include <doctest.h>

#include <cmath>

#include "knowsite/model.hpp"
#include "knowsite/trainer.hpp"
#include "test_support.hpp"

using namespace knowsite;
using namespace knowsite::model;
using knowsite::testsupport::fast_train_config;
using knowsite::testsupport::make_planted_world;
using knowsite::testsupport::tiny_city;

namespace {

testsupport::PlantedWorld& shared_world() {
  static auto world = make_planted_world(
      tiny_city(1001),
      {{synth::PatternKind::RelatedBrandColocation, {0, 4}, 0.9}});
  return world;
}

}  // namespace

TEST_CASE("early stopper stops after patience epochs without improvement") {
  EarlyStopper stopper(1);
  CHECK_FALSE(stopper.observe(0.5));  // epoch 1, best
  CHECK(stopper.observe(0.4));        // epoch 2, worse -> stop
  CHECK(stopper.best_epoch() == 1);
  CHECK(stopper.epochs_seen() == 2);
  CHECK(stopper.best() == doctest::Approx(0.5));

  EarlyStopper patient(3);
  CHECK_FALSE(patient.observe(0.1));
  CHECK_FALSE(patient.observe(0.2));  // improvement resets the stall
  CHECK_FALSE(patient.observe(0.15));
  CHECK_FALSE(patient.observe(0.15));
  CHECK(patient.observe(0.05));
  CHECK(patient.best_epoch() == 2);
}

TEST_CASE("train stops at epoch 2 under patience 1 and restores epoch 1") {
  auto& w = shared_world();
  TrainConfig cfg = fast_train_config(5);
  cfg.patience = 1;
  cfg.max_epochs = 20;

  std::vector<std::vector<double>> snapshots;
  auto result = train(w.kg, w.dataset, nullptr, nullptr, w.paths, cfg,
                      w.region_popularity,
                      [&](KnowSiteModel& m, int epoch) {
                        snapshots.push_back(
                            m.params().at("emb.entities").tensor.value());
                        // Monotonically worse after epoch 1.
                        return 1.0 - 0.1 * epoch;
                      });
  CHECK(result.history.size() == 2);  // stopped after the second epoch
  CHECK(result.best_epoch == 1);
  CHECK(result.model->params().at("emb.entities").tensor.value() ==
        snapshots[0]);
}

TEST_CASE("zero learning rate freezes parameters and loss") {
  auto& w = shared_world();
  TrainConfig cfg = fast_train_config(6);
  cfg.lr = 0.0;
  cfg.dropout = 0.0;
  cfg.max_epochs = 3;
  cfg.patience = 10;
  auto result = train(w.kg, w.dataset, nullptr, nullptr, w.paths, cfg,
                      w.region_popularity);
  REQUIRE(result.history.size() == 3);
  CHECK(result.history[0].train_loss ==
        doctest::Approx(result.history[1].train_loss).epsilon(1e-12));
  CHECK(result.history[1].train_loss ==
        doctest::Approx(result.history[2].train_loss).epsilon(1e-12));

  KnowSiteModel fresh(w.kg, cfg.model_config(cfg.seed), nullptr, nullptr,
                      w.paths);
  CHECK(result.model->params().at("emb.entities").tensor.value() ==
        fresh.params().at("emb.entities").tensor.value());
}

TEST_CASE("uniform scores give ln 2 loss over two regions") {
  // Two regions, one brand, one train pair, identical embeddings rows.
  std::vector<ukg::Entity> entities;
  auto add = [&](ukg::Ontology o, const std::string& name) {
    ukg::Entity e;
    e.id = static_cast<int>(entities.size());
    e.ontology = o;
    e.name = name;
    entities.push_back(e);
    return e.id;
  };
  const int r0 = add(ukg::Ontology::Region, "region:a");
  add(ukg::Ontology::Region, "region:b");
  const int b0 = add(ukg::Ontology::Brand, "brand:x");
  auto rels = ukg::with_inverses(ukg::base_relations());
  int osa = -1;
  for (const auto& r : rels) {
    if (r.name == "OpenStoreAt") osa = r.id;
  }
  ukg::KnowledgeGraph kg(entities, rels, {{b0, osa, r0}});

  ModelConfig mc;
  mc.dim = 4;
  mc.encoder.layers = 0;
  mc.alpha = 1.0;  // pure bilinear
  mc.lambda_reg = 0.0;
  mc.composition = PathCompose::Add;
  mc.seed = 3;
  KnowSiteModel m(kg, mc, nullptr, nullptr, default_path_table(kg));
  auto& emb = m.params().at("emb.entities").tensor.leaf_value();
  std::fill(emb.begin(), emb.end(), 1.0);  // identical rows -> equal scores
  auto loss = m.loss({{b0, r0}}, false, nullptr);
  CHECK(loss.item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  SUBCASE("a dominant true-region score drives the loss to zero") {
    // Make region:a's embedding hugely aligned with the bilinear direction.
    auto& rel_rows = m.params().at("emb.relations").tensor.leaf_value();
    std::fill(rel_rows.begin(), rel_rows.end(), 1.0);
    for (int j = 0; j < 4; ++j) emb[static_cast<size_t>(r0 * 4 + j)] = 50.0;
    auto small = m.loss({{b0, r0}}, false, nullptr);
    CHECK(small.item() < 1e-3);
  }

  SUBCASE("empty batch is a contract error") {
    CHECK_THROWS_AS((void)m.loss({}, false, nullptr), ContractError);
  }
}

TEST_CASE("parameter norm matches the 3-4-5 triangle") {
  num::ParameterStore store;
  store.add("theta", num::Tensor::from({2}, {3.0, 4.0}, true));
  CHECK(parameter_l2_norm(store, false).item() == doctest::Approx(5.0));
  CHECK(parameter_l2_norm(store, true).item() == doctest::Approx(25.0));
}

TEST_CASE("full-model gradients match finite differences on a toy instance") {
  // 20 entities, 5 relations, d=8; every encoder op and composition.
  Rng rng(71);
  std::vector<ukg::Entity> entities;
  auto add = [&](ukg::Ontology o, const std::string& name) {
    ukg::Entity e;
    e.id = static_cast<int>(entities.size());
    e.ontology = o;
    e.name = name;
    entities.push_back(e);
    return e.id;
  };
  std::vector<int> regions, brands;
  for (int i = 0; i < 6; ++i) {
    regions.push_back(add(ukg::Ontology::Region, "region:" + std::to_string(i)));
  }
  for (int i = 0; i < 5; ++i) {
    brands.push_back(add(ukg::Ontology::Brand, "brand:" + std::to_string(i)));
  }
  for (int i = 0; i < 9; ++i) {
    add(ukg::Ontology::Poi, "poi:" + std::to_string(i));
  }
  // Five relations: OSA plus four generic ones; facts wired randomly but
  // signature-consistent for OSA.
  std::vector<ukg::RelationDef> rels(5);
  const char* names[5] = {"OpenStoreAt", "R1", "R2", "R3", "R4"};
  for (int r = 0; r < 5; ++r) {
    rels[static_cast<size_t>(r)].id = r;
    rels[static_cast<size_t>(r)].name = names[r];
    rels[static_cast<size_t>(r)].abbrev = names[r];
    rels[static_cast<size_t>(r)].skip_inverse = true;
    rels[static_cast<size_t>(r)].subject = ukg::Ontology::Brand;
    rels[static_cast<size_t>(r)].object = ukg::Ontology::Region;
  }
  std::vector<ukg::Fact> facts;
  for (int b : brands) {
    facts.push_back({b, 0, regions[rng.uniform_index(6)]});
  }
  for (int i = 0; i < 30; ++i) {
    facts.push_back({static_cast<int>(rng.uniform_index(20)),
                     1 + static_cast<int>(rng.uniform_index(4)),
                     static_cast<int>(rng.uniform_index(20))});
  }
  ukg::KnowledgeGraph kg(entities, rels, facts);

  // A path table over the toy vocabulary.
  std::vector<RelationPath> paths;
  for (int r = 1; r <= 4; ++r) {
    RelationPath p;
    p.criterion = "P" + std::to_string(r);
    p.group = PathGroup::RegionBased;
    p.relation_ids = {0, r};
    paths.push_back(p);
  }

  std::vector<SitePair> batch = {{brands[0], regions[1]},
                                 {brands[2], regions[4]},
                                 {brands[4], regions[0]}};

  for (ComposeOp op :
       {ComposeOp::Subtract, ComposeOp::Multiply, ComposeOp::Rotate}) {
    for (PathCompose comp :
         {PathCompose::Add, PathCompose::Mult, PathCompose::Gru}) {
      ModelConfig mc;
      mc.dim = 8;
      mc.encoder.layers = 2;
      mc.encoder.op = op;
      mc.encoder.self_loop = true;
      mc.encoder.batchnorm = true;
      mc.encoder.dropout = 0.0;
      mc.composition = comp;
      mc.alpha = 0.4;
      mc.lambda_reg = 1e-3;
      mc.seed = 100 + static_cast<uint64_t>(op) * 10 +
                static_cast<uint64_t>(comp);
      KnowSiteModel m(kg, mc, nullptr, nullptr, paths);
      auto mismatch = num::check_gradients(
          [&] { return m.loss(batch, true, nullptr); }, m.params());
      INFO("op=" << compose_op_name(op)
                 << " composition=" << path_compose_name(comp) << ": "
                 << mismatch);
      CHECK(mismatch.empty());
    }
  }
}

TEST_CASE("training on the planted city halves the loss") {
  auto& w = shared_world();
  TrainConfig cfg = fast_train_config(9);
  cfg.max_epochs = 12;
  cfg.patience = 12;
  cfg.lr = 0.003;
  auto result = train(w.kg, w.dataset, nullptr, nullptr, w.paths, cfg,
                      w.region_popularity);
  REQUIRE(result.history.size() >= 5);
  const double first = result.history.front().train_loss;
  const double last = result.history.back().train_loss;
  CHECK(last < 0.5 * first);
  // Averaged over the first epochs the loss decreases.
  CHECK(result.history[4].train_loss < result.history[0].train_loss);
}

TEST_CASE("early stopping never returns parameters below the best metric") {
  auto& w = shared_world();
  TrainConfig cfg = fast_train_config(10);
  cfg.max_epochs = 6;
  cfg.patience = 2;
  auto result = train(w.kg, w.dataset, nullptr, nullptr, w.paths, cfg,
                      w.region_popularity);
  auto report = eval::evaluate_model(*result.model, w.dataset, Split::Valid,
                                     w.region_popularity, {10});
  CHECK(report.mean.at(10).ndcg == doctest::Approx(result.best_valid).epsilon(1e-12));
}

TEST_CASE("train is deterministic for a fixed seed") {
  auto& w = shared_world();
  TrainConfig cfg = fast_train_config(11);
  cfg.max_epochs = 3;
  cfg.dropout = 0.1;
  auto a = train(w.kg, w.dataset, nullptr, nullptr, w.paths, cfg,
                 w.region_popularity);
  auto b = train(w.kg, w.dataset, nullptr, nullptr, w.paths, cfg,
                 w.region_popularity);
  REQUIRE(a.history.size() == b.history.size());
  for (size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].valid_ndcg10 == b.history[i].valid_ndcg10);
  }
  CHECK(a.model->params().at("emb.entities").tensor.value() ==
        b.model->params().at("emb.entities").tensor.value());
}

TEST_CASE("run_experiment statistics") {
  auto& w = shared_world();
  TrainConfig cfg = fast_train_config(12);
  cfg.max_epochs = 2;
  cfg.runs = 1;

  auto one = run_experiment(w.kg, w.dataset, nullptr, nullptr, w.paths, cfg,
                            w.region_popularity, {10});
  CHECK(one.per_run.size() == 1);
  CHECK(one.aggregate.mean.at(10).hit ==
        doctest::Approx(one.per_run[0].mean.at(10).hit));
  CHECK(one.aggregate.stddev.at(10).hit == doctest::Approx(0.0));

  auto twin = run_experiment(w.kg, w.dataset, nullptr, nullptr, w.paths, cfg,
                             w.region_popularity, {10}, Split::Test,
                             {42, 42});
  CHECK(twin.aggregate.stddev.at(10).ndcg == doctest::Approx(0.0));

  auto spread = run_experiment(w.kg, w.dataset, nullptr, nullptr, w.paths,
                               cfg, w.region_popularity, {10}, Split::Test,
                               {1, 2, 3});
  double lo = 1e9, hi = -1e9;
  for (const auto& run : spread.per_run) {
    lo = std::min(lo, run.mean.at(10).hit);
    hi = std::max(hi, run.mean.at(10).hit);
  }
  CHECK(spread.aggregate.mean.at(10).hit >= lo - 1e-12);
  CHECK(spread.aggregate.mean.at(10).hit <= hi + 1e-12);
}

TEST_CASE("grid enforcement rejects off-grid rates") {
  TrainConfig cfg = fast_train_config(1);
  cfg.enforce_grid = true;
  cfg.lr = 0.002;  // not in the protocol grid
  cfg.dropout = 0.3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.lr = 0.003;
  cfg.dropout = 0.2;  // not in the protocol grid
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.dropout = 0.3;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("wo_decoder ablation is bit-identical to alpha one") {
  auto& w = shared_world();
  TrainConfig cfg = fast_train_config(13);
  cfg.max_epochs = 2;
  cfg.alpha = 1.0;
  auto direct = train(w.kg, w.dataset, nullptr, nullptr, w.paths, cfg,
                      w.region_popularity);

  TrainConfig variant =
      ablation_variant_config(fast_train_config(13), "wo_decoder");
  variant.max_epochs = 2;
  auto ablated = train(w.kg, w.dataset, nullptr, nullptr,
                       ablation_variant_paths(w.paths, "wo_decoder"), variant,
                       w.region_popularity);
  CHECK(direct.model->params().at("emb.entities").tensor.value() ==
        ablated.model->params().at("emb.entities").tensor.value());
  auto ra = eval::evaluate_model(*direct.model, w.dataset, Split::Test,
                                 w.region_popularity, {10});
  auto rb = eval::evaluate_model(*ablated.model, w.dataset, Split::Test,
                                 w.region_popularity, {10});
  CHECK(ra.mean.at(10).hit == rb.mean.at(10).hit);
  CHECK(ra.mean.at(10).ndcg == rb.mean.at(10).ndcg);
}

TEST_CASE("removing every path group needs alpha one") {
  auto& w = shared_world();
  ModelConfig mc;
  mc.dim = 8;
  mc.encoder.layers = 0;
  mc.alpha = 0.5;
  CHECK_THROWS_AS(
      KnowSiteModel(w.kg, mc, nullptr, nullptr, std::vector<RelationPath>{}),
      ConfigError);
  mc.alpha = 1.0;
  CHECK_NOTHROW(
      KnowSiteModel(w.kg, mc, nullptr, nullptr, std::vector<RelationPath>{}));
}

TEST_CASE("ablation variant plumbing") {
  auto names = ablation_variant_names();
  CHECK(names.size() == 7);
  TrainConfig base = fast_train_config(2);
  CHECK(ablation_variant_config(base, "wo_encoder").layers == 0);
  CHECK(ablation_variant_config(base, "wo_decoder").alpha == 1.0);
  CHECK_FALSE(ablation_variant_uses_pretrain("wo_pretrain"));
  CHECK(ablation_variant_uses_pretrain("full"));
  auto& w = shared_world();
  CHECK(ablation_variant_paths(w.paths, "drop_region").size() == 4);
  CHECK(ablation_variant_paths(w.paths, "drop_brand").size() == 6);
  CHECK_THROWS_AS(ablation_variant_config(base, "nonsense"), ConfigError);
}
