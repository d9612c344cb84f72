#pragma once

#include <map>
#include <string>
#include <vector>

#include "fedda/tensor.hpp"

namespace fedda {

// Ordered layer-name -> tensor map. The ordering (ascending layer name) fixes
// every reduction order in this module, which keeps aggregation results
// bit-reproducible.
using ParamMap = std::map<std::string, Tensor>;

struct AggregationConfig {
  double rho = 0.0;    // quasi-global regularization weight, may be negative
  double gamma = 1.0;  // server-side step size, > 0
  bool include_quasi = true;
};

// Layer-wise attention weights: alpha[l] has one entry per input model and
// sums to 1; beta[l] weights the quasi-global pull.
struct AttentionWeights {
  std::map<std::string, std::vector<double>> alpha;
  std::map<std::string, double> beta;
};

// Throws std::invalid_argument naming the offending model/layer when the
// maps are not shape-compatible.
void check_compatible(const ParamMap& reference, const ParamMap& other,
                      const std::string& what);

// Squared Frobenius distance between two equally shaped tensors.
double layer_distance(const Tensor& a, const Tensor& b);

// Numerically stable softmax (max-subtraction). Throws on empty or
// non-finite input.
std::vector<double> softmax(const std::vector<double>& scores);

AttentionWeights attention_weights(const std::vector<ParamMap>& inputs,
                                   const ParamMap& output_prev,
                                   const ParamMap& quasi);

// Dual attention server update: per layer l,
//   w_out = w_prev - gamma * (sum_m alpha_m (w_prev - w_in_m)
//                             + rho * beta * (w_prev - w_quasi)).
// The quasi term is skipped entirely when cfg.include_quasi is false or
// rho == 0, so the rho == 0 path is instruction-identical to fedatt.
ParamMap fedda_update(const ParamMap& output_prev, const std::vector<ParamMap>& inputs,
                      const ParamMap& quasi, const AggregationConfig& cfg);

// Unweighted elementwise mean of the inputs.
ParamMap fedavg(const std::vector<ParamMap>& inputs);

// Attention-weighted aggregation without the quasi-global anchor.
ParamMap fedatt(const ParamMap& output_prev, const std::vector<ParamMap>& inputs, double gamma);

}  // namespace fedda
