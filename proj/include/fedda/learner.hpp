#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedda/data.hpp"
#include "fedda/params.hpp"

namespace fedda {

enum class LearnerKind { Linear, Recurrent };

enum class LossKind { SquaredError, AbsoluteError };

struct LearnerConfig {
  LearnerKind kind = LearnerKind::Recurrent;
  int input_len = 6;
  int hidden = 64;
  int layers = 2;
  double eta = 0.01;  // SGD learning rate
  int batch = 20;
  int epochs = 1;  // local epochs per round
  std::uint64_t seed = 0;
};

// A batch is a view over sample indices of a SampleSet.
struct BatchView {
  const SampleSet* set = nullptr;
  std::span<const std::size_t> indices;
};

struct LossGrad {
  double loss = 0.0;
  ParamMap grad;
};

// Local predictor over a ParamMap. Two architectures:
//  - Linear: layers "linear.w" [input_len], "linear.b" [1], zero-initialized.
//  - Recurrent: stacked LSTM fed one scalar per time step, gate order
//    i,f,g,o; per layer j the layers are "lstm<j>.w_ih" [4H x in],
//    "lstm<j>.w_hh" [4H x H], "lstm<j>.b_ih" [4H], "lstm<j>.b_hh" [4H],
//    followed by "head.w" [H], "head.b" [1]. Weights are drawn uniform in
//    [-1/sqrt(H), 1/sqrt(H)] per the seed, biases start at zero.
class Learner {
 public:
  explicit Learner(LearnerConfig cfg);

  const LearnerConfig& config() const { return cfg_; }

  ParamMap init_params() const;

  double predict(const ParamMap& params, std::span<const double> features) const;
  std::vector<double> predict_all(const ParamMap& params, const SampleSet& data) const;

  // Mean loss over the batch and its gradient; recurrent gradients via
  // backpropagation through time over the full window.
  LossGrad loss_and_grad(const ParamMap& params, const BatchView& batch, LossKind loss) const;

  double mean_loss(const ParamMap& params, const SampleSet& data, LossKind loss) const;

  // cfg.epochs passes of minibatch SGD from `start`; batches are sequential
  // chunks of a per-epoch seeded shuffle. Deterministic in (start, data,
  // seed). Throws on a non-finite batch loss.
  ParamMap local_train(const ParamMap& start, const SampleSet& data) const;
  ParamMap local_train(const ParamMap& start, const SampleSet& data, std::uint64_t seed) const;

 private:
  void check_params(const ParamMap& params) const;

  LearnerConfig cfg_;
  ParamMap skeleton_;  // shape reference for compatibility checks
};

}  // namespace fedda
