#include "knowsite/decoder.hpp"

#include <cmath>

namespace knowsite::model {

using num::Tensor;

PathCompose path_compose_from_name(const std::string& name) {
  if (name == "add") return PathCompose::Add;
  if (name == "mult") return PathCompose::Mult;
  if (name == "gru") return PathCompose::Gru;
  throw ConfigError("unknown path composition: " + name);
}

const char* path_compose_name(PathCompose c) {
  switch (c) {
    case PathCompose::Add: return "add";
    case PathCompose::Mult: return "mult";
    case PathCompose::Gru: return "gru";
  }
  return "?";
}

Decoder::Decoder(PathCompose mode, int64_t dim, num::ParameterStore& store,
                 Rng& init_rng)
    : mode_(mode), dim_(dim) {
  const double glorot = std::sqrt(6.0 / (2.0 * static_cast<double>(dim)));
  store.add("dec.attn.query",
            Tensor::uniform({dim, dim}, -glorot, glorot, init_rng, true));
  store.add("dec.attn.key",
            Tensor::uniform({dim, dim}, -glorot, glorot, init_rng, true));
  store.add("dec.attn.value",
            Tensor::uniform({dim, dim}, -glorot, glorot, init_rng, true));
  if (mode == PathCompose::Gru) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    for (const char* gate : {"z", "r", "h"}) {
      store.add(std::string("dec.gru.w") + gate,
                Tensor::uniform({dim, dim}, -bound, bound, init_rng, true));
      store.add(std::string("dec.gru.u") + gate,
                Tensor::uniform({dim, dim}, -bound, bound, init_rng, true));
      store.add(std::string("dec.gru.b") + gate, Tensor::zeros({dim}, true));
    }
  }
}

Tensor Decoder::path_repr(const Tensor& brand_rows, const RelationPath& p,
                          const Tensor& relation_h,
                          num::ParameterStore& store) const {
  if (p.relation_ids.empty()) {
    // Empty sequence composes to the brand representation itself.
    return brand_rows;
  }
  switch (mode_) {
    case PathCompose::Add: {
      Tensor acc = num::reshape(
          num::gather_rows(relation_h, {p.relation_ids[0]}), {dim_});
      for (size_t i = 1; i < p.relation_ids.size(); ++i) {
        acc = num::add(acc, num::reshape(num::gather_rows(
                                relation_h, {p.relation_ids[i]}),
                                         {dim_}));
      }
      return num::add_rowvec(brand_rows, acc);
    }
    case PathCompose::Mult: {
      Tensor acc = num::reshape(
          num::gather_rows(relation_h, {p.relation_ids[0]}), {dim_});
      for (size_t i = 1; i < p.relation_ids.size(); ++i) {
        acc = num::mul(acc, num::reshape(num::gather_rows(
                                relation_h, {p.relation_ids[i]}),
                                         {dim_}));
      }
      return num::mul_rowvec(brand_rows, acc);
    }
    case PathCompose::Gru: {
      Tensor h = brand_rows;  // initial hidden state
      for (int rel : p.relation_ids) {
        Tensor x = num::gather_rows(relation_h, {rel});  // [1,d]
        auto gate_input = [&](const char* gate) {
          Tensor xw = num::reshape(
              num::matmul(x, store.at(std::string("dec.gru.w") + gate).tensor),
              {dim_});
          return num::add(xw, store.at(std::string("dec.gru.b") + gate).tensor);
        };
        Tensor z = num::sigmoid(num::add_rowvec(
            num::matmul(h, store.at("dec.gru.uz").tensor), gate_input("z")));
        Tensor r = num::sigmoid(num::add_rowvec(
            num::matmul(h, store.at("dec.gru.ur").tensor), gate_input("r")));
        Tensor candidate = num::tanh(num::add_rowvec(
            num::matmul(num::mul(r, h), store.at("dec.gru.uh").tensor),
            gate_input("h")));
        // h_t = (1 - z) * h_{t-1} + z * candidate
        h = num::add(num::sub(h, num::mul(z, h)), num::mul(z, candidate));
      }
      return h;
    }
  }
  throw ConfigError("bad path composition");
}

Decoder::Attended Decoder::attend(const Tensor& brand_rows,
                                  const std::vector<RelationPath>& paths,
                                  const Tensor& relation_h,
                                  num::ParameterStore& store) const {
  if (paths.empty()) {
    throw ConfigError("attention needs at least one relation path");
  }
  const int64_t b = brand_rows.dim(0);
  const int64_t n_p = static_cast<int64_t>(paths.size());
  std::vector<Tensor> reprs;
  reprs.reserve(paths.size());
  for (const auto& p : paths) {
    reprs.push_back(path_repr(brand_rows, p, relation_h, store));
  }
  Tensor p3 = num::stack_axis1(reprs);                   // [B, n_p, d]
  Tensor p_flat = num::reshape(p3, {b * n_p, dim_});
  Tensor keys = num::reshape(
      num::matmul(p_flat, store.at("dec.attn.key").tensor), {b, n_p, dim_});
  Tensor values = num::reshape(
      num::matmul(p_flat, store.at("dec.attn.value").tensor), {b, n_p, dim_});
  Tensor query = num::matmul(brand_rows, store.at("dec.attn.query").tensor);
  Tensor scores = num::reshape(
      num::bmm(keys, num::reshape(query, {b, dim_, 1})), {b, n_p});
  scores = num::mul_scalar(scores, 1.0 / std::sqrt(static_cast<double>(dim_)));
  Tensor weights = num::softmax(scores);  // [B, n_p]
  Tensor z = num::reshape(
      num::bmm(num::reshape(weights, {b, 1, n_p}), values), {b, dim_});
  return {z, weights};
}

Tensor Decoder::score_regions(const Tensor& z, const Tensor& brand_rows,
                              const Tensor& region_rows, const Tensor& osa_row,
                              double alpha) const {
  if (alpha < 0.0 || alpha > 1.0) {
    throw ConfigError("alpha must be in [0,1], got " + std::to_string(alpha));
  }
  Tensor regions_t = num::transpose(region_rows);  // [d, |A|]
  Tensor bilinear = num::matmul(num::mul_rowvec(brand_rows, osa_row),
                                regions_t);  // [B, |A|]
  if (alpha == 1.0) {
    return bilinear;
  }
  Tensor path_part = num::matmul(z, regions_t);
  return num::add(num::mul_scalar(path_part, 1.0 - alpha),
                  num::mul_scalar(bilinear, alpha));
}

double fused_score(const Tensor& z, const Tensor& h_b, const Tensor& h_a,
                   const Tensor& osa_row, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) {
    throw ConfigError("alpha must be in [0,1], got " + std::to_string(alpha));
  }
  num::NoGradGuard guard;
  const double path_part = num::dot(z, h_a).item();
  const double bilinear =
      num::sum(num::mul(num::mul(h_b, osa_row), h_a)).item();
  return (1.0 - alpha) * path_part + alpha * bilinear;
}

}  // namespace knowsite::model
