#include "knowsite/tucker.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>

namespace knowsite::model {

using num::Tensor;

TuckerModel::TuckerModel(int64_t n_entities, int64_t n_relations, int64_t dim,
                         Rng& rng)
    : dim_(dim) {
  if (n_entities < 1 || n_relations < 1 || dim < 1) {
    throw ContractError("tucker model needs entities, relations and dim >= 1");
  }
  params_.add("tucker.entities",
              Tensor::normal({n_entities, dim}, 0.0, 0.05, rng, true));
  params_.add("tucker.relations",
              Tensor::normal({n_relations, dim}, 0.0, 0.05, rng, true));
  params_.add("tucker.core",
              Tensor::uniform({dim, dim, dim}, -1.0, 1.0, rng, true));
}

Tensor TuckerModel::score_batch(const std::vector<int64_t>& subjects,
                                const std::vector<int64_t>& relations,
                                double dropout_p, Rng* dropout_rng) {
  if (subjects.size() != relations.size() || subjects.empty()) {
    throw ContractError("score_batch needs matching nonempty id lists");
  }
  const int64_t b = static_cast<int64_t>(subjects.size());
  Tensor entities = entity_rows();
  Tensor e_s = num::gather_rows(entities, subjects);  // [B,d]
  if (dropout_p > 0.0 && dropout_rng != nullptr) {
    e_s = num::dropout(e_s, dropout_p, *dropout_rng);
  }
  Tensor w_r = num::gather_rows(relation_rows(), relations);  // [B,d]
  // Contract the subject index first: T[b,j,k] = sum_i e[b,i] core[i,j,k].
  Tensor core_flat = num::reshape(core(), {dim_, dim_ * dim_});
  Tensor t = num::reshape(num::matmul(e_s, core_flat), {b, dim_, dim_});
  // Then the relation index: m[b,k] = sum_j w[b,j] T[b,j,k].
  Tensor m =
      num::reshape(num::bmm(num::reshape(w_r, {b, 1, dim_}), t), {b, dim_});
  return num::matmul(m, num::transpose(entities));  // [B, |E|]
}

Tensor tucker_score(TuckerModel& m, int64_t s, int64_t r) {
  num::NoGradGuard guard;
  Tensor scores = m.score_batch({s}, {r});
  return num::reshape(scores, {scores.dim(1)});
}

Tensor tucker_probabilities(TuckerModel& m, int64_t s, int64_t r) {
  num::NoGradGuard guard;
  return num::sigmoid(tucker_score(m, s, r));
}

Tensor tucker_batch_loss(TuckerModel& m, const std::vector<int64_t>& subjects,
                         const std::vector<int64_t>& relations,
                         const std::vector<std::vector<int64_t>>& objects,
                         double label_smoothing, double dropout_p,
                         Rng* dropout_rng) {
  Tensor raw = m.score_batch(subjects, relations, dropout_p, dropout_rng);
  const int64_t b = raw.dim(0), n = raw.dim(1);
  // Smoothed multi-hot targets: y' = (1-ls) y + ls / |E|.
  std::vector<double> target(static_cast<size_t>(b * n),
                             label_smoothing / static_cast<double>(n));
  for (int64_t i = 0; i < b; ++i) {
    for (int64_t o : objects[static_cast<size_t>(i)]) {
      target[static_cast<size_t>(i * n + o)] =
          (1.0 - label_smoothing) + label_smoothing / static_cast<double>(n);
    }
  }
  std::vector<double> complement(target.size());
  for (size_t i = 0; i < target.size(); ++i) complement[i] = 1.0 - target[i];
  Tensor y = Tensor::from({b, n}, std::move(target));
  Tensor one_minus_y = Tensor::from({b, n}, std::move(complement));
  // Stable BCE with logits: y*softplus(-x) + (1-y)*softplus(x).
  Tensor loss_terms = num::add(num::mul(y, num::softplus(num::neg(raw))),
                               num::mul(one_minus_y, num::softplus(raw)));
  return num::mean(loss_terms);
}

PretrainResult pretrain(const ukg::KnowledgeGraph& kg,
                        const TuckerConfig& cfg) {
  if (kg.facts().empty()) {
    throw ContractError("pretrain on an empty fact set");
  }
  Rng rng(cfg.seed);
  TuckerModel model(kg.entity_count(), kg.relation_count(), cfg.dim, rng);

  // Group facts by (s, r) for 1-vs-all targets.
  std::map<std::pair<int, int>, std::vector<int64_t>> grouped;
  for (const auto& f : kg.facts()) {
    grouped[{f.s, f.r}].push_back(f.o);
  }
  struct Group {
    int64_t s, r;
    std::vector<int64_t> objects;
  };
  std::vector<Group> groups;
  groups.reserve(grouped.size());
  for (auto& [key, objs] : grouped) {
    groups.push_back({key.first, key.second, std::move(objs)});
  }

  PretrainResult result;
  double lr = cfg.lr;
  double best_loss = std::numeric_limits<double>::infinity();
  auto best_state = model.params().snapshot();
  int stall = 0;

  std::vector<size_t> order(groups.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    int batches = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end =
          std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      std::vector<int64_t> subjects, relations;
      std::vector<std::vector<int64_t>> objects;
      for (size_t i = start; i < end; ++i) {
        const Group& g = groups[order[i]];
        subjects.push_back(g.s);
        relations.push_back(g.r);
        objects.push_back(g.objects);
      }
      Tensor loss = tucker_batch_loss(model, subjects, relations, objects,
                                      cfg.label_smoothing, cfg.dropout, &rng);
      epoch_loss += loss.item();
      ++batches;
      num::backward(loss);
      num::adam_step(model.params(), lr);
    }
    epoch_loss /= std::max(1, batches);
    result.raw_loss_history.push_back(epoch_loss);
    result.epochs = epoch + 1;

    if (epoch_loss > best_loss) {
      // Regression: halve the rate and pick up again from the best state.
      lr *= 0.5;
      model.params().restore(best_state);
      result.loss_history.push_back(best_loss);
      ++stall;
    } else {
      if (best_loss - epoch_loss < cfg.min_improvement) {
        ++stall;
      } else {
        stall = 0;
      }
      best_loss = epoch_loss;
      best_state = model.params().snapshot();
      result.loss_history.push_back(epoch_loss);
    }
    if (stall >= cfg.patience) break;
  }
  model.params().restore(best_state);

  std::vector<std::string> entity_names, relation_names;
  for (const auto& e : kg.entities()) entity_names.push_back(e.name);
  for (const auto& r : kg.relations()) relation_names.push_back(r.name);
  result.entities = EmbeddingTable::make(model.entity_rows().detached_copy(),
                                         std::move(entity_names));
  result.relations = EmbeddingTable::make(
      model.relation_rows().detached_copy(), std::move(relation_names));
  result.core = model.core().detached_copy();
  return result;
}

TuckerModel rebuild_tucker(const PretrainResult& result) {
  Rng rng(0);
  TuckerModel m(result.entities.count(), result.relations.count(),
                result.entities.dim(), rng);
  m.params().at("tucker.entities").tensor.leaf_value() =
      result.entities.rows.value();
  m.params().at("tucker.relations").tensor.leaf_value() =
      result.relations.rows.value();
  m.params().at("tucker.core").tensor.leaf_value() = result.core.value();
  return m;
}

int64_t export_for_projection(const EmbeddingTable& entities,
                              const ukg::KnowledgeGraph& kg, int64_t sample,
                              uint64_t seed,
                              const std::filesystem::path& out_tsv) {
  if (sample < 0) throw ConfigError("projection sample must be >= 0");
  std::vector<int> pois = kg.poi_ids();
  if (sample > static_cast<int64_t>(pois.size())) {
    sample = static_cast<int64_t>(pois.size());  // clamp
  }
  Rng rng(seed);
  rng.shuffle(pois);
  pois.resize(static_cast<size_t>(sample));
  std::sort(pois.begin(), pois.end());

  // Coarse category per POI for labeling.
  std::map<int, std::string> poi_cate1;
  if (auto p2c1 = kg.find_relation("POIToCate_1")) {
    for (const auto& f : kg.facts()) {
      if (f.r == *p2c1) poi_cate1[f.s] = kg.entity(f.o).name;
    }
  }

  std::ofstream out(out_tsv);
  if (!out) throw SourceError("cannot write " + out_tsv.string());
  out.precision(12);
  out << "name\tontology\tcate1";
  for (int64_t j = 0; j < entities.dim(); ++j) out << "\tdim" << j;
  out << '\n';
  int64_t written = 0;
  auto emit = [&](int entity_id) {
    const auto& e = kg.entity(entity_id);
    auto cate = poi_cate1.find(entity_id);
    out << e.name << '\t' << ukg::ontology_name(e.ontology) << '\t'
        << (cate == poi_cate1.end() ? "" : cate->second);
    const int64_t row = entities.row_of(e.name);
    const auto& data = entities.rows.value();
    for (int64_t j = 0; j < entities.dim(); ++j) {
      out << '\t' << data[static_cast<size_t>(row * entities.dim() + j)];
    }
    out << '\n';
    ++written;
  };
  for (int poi : pois) emit(poi);
  for (const auto& e : kg.entities()) {
    if (e.ontology != ukg::Ontology::Poi) emit(e.id);
  }
  return written;
}

}  // namespace knowsite::model
