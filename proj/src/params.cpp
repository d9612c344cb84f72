#include "fedda/params.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedda {

void check_compatible(const ParamMap& reference, const ParamMap& other, const std::string& what) {
  if (reference.size() != other.size())
    throw std::invalid_argument(what + ": layer count mismatch (" +
                                std::to_string(reference.size()) + " vs " +
                                std::to_string(other.size()) + ")");
  auto it = other.begin();
  for (const auto& [name, tensor] : reference) {
    if (it->first != name)
      throw std::invalid_argument(what + ": layer name mismatch, expected '" + name +
                                  "' got '" + it->first + "'");
    if (!tensor.same_shape(it->second))
      throw std::invalid_argument(what + ": shape mismatch on layer '" + name + "'");
    ++it;
  }
}

double layer_distance(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("layer_distance: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::vector<double> softmax(const std::vector<double>& scores) {
  if (scores.empty()) throw std::invalid_argument("softmax: empty input");
  for (double s : scores)
    if (!std::isfinite(s)) throw std::invalid_argument("softmax: non-finite score");
  double m = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

AttentionWeights attention_weights(const std::vector<ParamMap>& inputs,
                                   const ParamMap& output_prev, const ParamMap& quasi) {
  if (inputs.empty()) throw std::invalid_argument("attention_weights: no input models");
  for (std::size_t m = 0; m < inputs.size(); ++m)
    check_compatible(output_prev, inputs[m], "attention_weights: input model " + std::to_string(m));
  check_compatible(output_prev, quasi, "attention_weights: quasi model");

  AttentionWeights w;
  for (const auto& [name, prev] : output_prev) {
    std::vector<double> scores(inputs.size());
    for (std::size_t m = 0; m < inputs.size(); ++m)
      scores[m] = layer_distance(inputs[m].at(name), prev);
    w.alpha[name] = softmax(scores);
    // The quasi-global weight per layer is 1: the softmax of a single score.
    // Its overall strength is controlled by rho alone.
    w.beta[name] = 1.0;
  }
  return w;
}

namespace {

ParamMap apply_update(const ParamMap& output_prev, const std::vector<ParamMap>& inputs,
                      const ParamMap* quasi, double rho, double gamma) {
  if (inputs.empty()) throw std::invalid_argument("fedda_update: no input models");
  if (!(gamma > 0.0)) throw std::invalid_argument("fedda_update: gamma must be > 0");
  if (!std::isfinite(rho)) throw std::invalid_argument("fedda_update: rho must be finite");

  AttentionWeights w = attention_weights(inputs, output_prev, quasi ? *quasi : output_prev);

  ParamMap out;
  for (const auto& [name, prev] : output_prev) {
    const std::vector<double>& alpha = w.alpha.at(name);
    double beta = w.beta.at(name);
    Tensor t(prev.shape);
    for (std::size_t i = 0; i < prev.size(); ++i) {
      double grad = 0.0;
      for (std::size_t m = 0; m < inputs.size(); ++m)
        grad += alpha[m] * (prev[i] - inputs[m].at(name)[i]);
      if (quasi) grad += rho * beta * (prev[i] - quasi->at(name)[i]);
      t[i] = prev[i] - gamma * grad;
      if (!std::isfinite(t[i]))
        throw std::runtime_error("fedda_update: non-finite result on layer '" + name +
                                 "' (divergent gamma/rho?)");
    }
    out.emplace(name, std::move(t));
  }
  return out;
}

}  // namespace

ParamMap fedda_update(const ParamMap& output_prev, const std::vector<ParamMap>& inputs,
                      const ParamMap& quasi, const AggregationConfig& cfg) {
  bool use_quasi = cfg.include_quasi && cfg.rho != 0.0;
  if (use_quasi) return apply_update(output_prev, inputs, &quasi, cfg.rho, cfg.gamma);
  return apply_update(output_prev, inputs, nullptr, 0.0, cfg.gamma);
}

ParamMap fedavg(const std::vector<ParamMap>& inputs) {
  if (inputs.empty()) throw std::invalid_argument("fedavg: empty model list");
  for (std::size_t m = 1; m < inputs.size(); ++m)
    check_compatible(inputs[0], inputs[m], "fedavg: input model " + std::to_string(m));

  ParamMap out;
  double inv = 1.0 / static_cast<double>(inputs.size());
  for (const auto& [name, first] : inputs[0]) {
    Tensor t(first.shape);
    for (std::size_t i = 0; i < t.size(); ++i) {
      double s = 0.0;
      for (const ParamMap& in : inputs) s += in.at(name)[i];
      t[i] = s * inv;
      if (!std::isfinite(t[i]))
        throw std::runtime_error("fedavg: non-finite result on layer '" + name + "'");
    }
    out.emplace(name, std::move(t));
  }
  return out;
}

ParamMap fedatt(const ParamMap& output_prev, const std::vector<ParamMap>& inputs, double gamma) {
  return apply_update(output_prev, inputs, nullptr, 0.0, gamma);
}

}  // namespace fedda
