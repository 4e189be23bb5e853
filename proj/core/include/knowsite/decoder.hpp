#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "knowsite/optim.hpp"
#include "knowsite/paths.hpp"
#include "knowsite/tensor.hpp"

namespace knowsite::model {

enum class PathCompose { Add, Mult, Gru };

PathCompose path_compose_from_name(const std::string& name);
const char* path_compose_name(PathCompose c);

// Relation-path scoring head: brand-specific path representations, scaled
// dot-product attention over them, and the fused region score.
class Decoder {
 public:
  // Registers attention projections and, for Gru composition, the gate
  // parameters (weights uniform in +-1/sqrt(d), biases zero).
  Decoder(PathCompose mode, int64_t dim, num::ParameterStore& store,
          Rng& init_rng);

  PathCompose mode() const { return mode_; }
  int64_t dim() const { return dim_; }

  // Brand-specific representation of one path for a batch of brands:
  // Add and Mult fold the relation rows into the brand rows; Gru runs a
  // recurrent cell over the relation sequence from the brand state.
  num::Tensor path_repr(const num::Tensor& brand_rows, const RelationPath& p,
                        const num::Tensor& relation_h,
                        num::ParameterStore& store) const;

  struct Attended {
    num::Tensor z;        // [B, d]
    num::Tensor weights;  // [B, n_p], rows sum to 1
  };
  Attended attend(const num::Tensor& brand_rows,
                  const std::vector<RelationPath>& paths,
                  const num::Tensor& relation_h,
                  num::ParameterStore& store) const;

  // (1-alpha) z.h_a + alpha <h_b, w_osa, h_a> against every region row.
  num::Tensor score_regions(const num::Tensor& z,
                            const num::Tensor& brand_rows,
                            const num::Tensor& region_rows,
                            const num::Tensor& osa_row, double alpha) const;

 private:
  PathCompose mode_;
  int64_t dim_;
};

// Scalar fusion for a single (brand, region) pair.
double fused_score(const num::Tensor& z, const num::Tensor& h_b,
                   const num::Tensor& h_a, const num::Tensor& osa_row,
                   double alpha);

}  // namespace knowsite::model
