#include "fedda/learner.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedda/rng.hpp"

namespace fedda {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string lstm_name(int layer, const char* part) {
  return "lstm" + std::to_string(layer) + "." + part;
}

// Pointers into one LSTM layer's tensors, gate rows ordered i,f,g,o.
struct LstmLayerRef {
  const double* w_ih;  // [4H x in]
  const double* w_hh;  // [4H x H]
  const double* b_ih;  // [4H]
  const double* b_hh;  // [4H]
  int in = 0;
};

struct LstmRef {
  std::vector<LstmLayerRef> layer;
  const double* head_w;  // [H]
  double head_b;
};

LstmRef bind_lstm(const ParamMap& params, const LearnerConfig& cfg) {
  LstmRef r;
  for (int j = 0; j < cfg.layers; ++j) {
    LstmLayerRef l;
    l.in = j == 0 ? 1 : cfg.hidden;
    l.w_ih = params.at(lstm_name(j, "w_ih")).data.data();
    l.w_hh = params.at(lstm_name(j, "w_hh")).data.data();
    l.b_ih = params.at(lstm_name(j, "b_ih")).data.data();
    l.b_hh = params.at(lstm_name(j, "b_hh")).data.data();
    r.layer.push_back(l);
  }
  r.head_w = params.at("head.w").data.data();
  r.head_b = params.at("head.b")[0];
  return r;
}

// Per-step activations cached for backprop.
struct LstmTrace {
  // [T x J x H] each
  std::vector<double> h, c, tanh_c;
  // [T x J x 4H]
  std::vector<double> gates;  // post-nonlinearity i,f,g,o
};

double lstm_forward(const LstmRef& net, const LearnerConfig& cfg, std::span<const double> xs,
                    LstmTrace* trace) {
  const int h_n = cfg.hidden;
  const int j_n = cfg.layers;
  const std::size_t t_n = xs.size();

  std::vector<double> h(static_cast<std::size_t>(j_n) * h_n, 0.0);
  std::vector<double> c(static_cast<std::size_t>(j_n) * h_n, 0.0);
  std::vector<double> acts(4 * h_n);
  std::vector<double> input(h_n);

  if (trace) {
    trace->h.assign(t_n * j_n * h_n, 0.0);
    trace->c.assign(t_n * j_n * h_n, 0.0);
    trace->tanh_c.assign(t_n * j_n * h_n, 0.0);
    trace->gates.assign(t_n * j_n * 4 * h_n, 0.0);
  }

  for (std::size_t t = 0; t < t_n; ++t) {
    input[0] = xs[t];
    int in_len = 1;
    for (int j = 0; j < j_n; ++j) {
      const LstmLayerRef& l = net.layer[j];
      double* hj = h.data() + static_cast<std::size_t>(j) * h_n;
      double* cj = c.data() + static_cast<std::size_t>(j) * h_n;
      for (int r = 0; r < 4 * h_n; ++r) {
        double a = l.b_ih[r] + l.b_hh[r];
        const double* wi = l.w_ih + static_cast<std::size_t>(r) * l.in;
        for (int v = 0; v < in_len; ++v) a += wi[v] * input[v];
        const double* wh = l.w_hh + static_cast<std::size_t>(r) * h_n;
        for (int u = 0; u < h_n; ++u) a += wh[u] * hj[u];
        acts[r] = a;
      }
      for (int u = 0; u < h_n; ++u) {
        double gi = sigmoid(acts[u]);
        double gf = sigmoid(acts[h_n + u]);
        double gg = std::tanh(acts[2 * h_n + u]);
        double go = sigmoid(acts[3 * h_n + u]);
        double cu = gf * cj[u] + gi * gg;
        double tc = std::tanh(cu);
        cj[u] = cu;
        hj[u] = go * tc;
        if (trace) {
          std::size_t base = (t * j_n + j) * static_cast<std::size_t>(h_n);
          trace->h[base + u] = hj[u];
          trace->c[base + u] = cu;
          trace->tanh_c[base + u] = tc;
          std::size_t gbase = (t * j_n + j) * static_cast<std::size_t>(4 * h_n);
          trace->gates[gbase + u] = gi;
          trace->gates[gbase + h_n + u] = gf;
          trace->gates[gbase + 2 * h_n + u] = gg;
          trace->gates[gbase + 3 * h_n + u] = go;
        }
      }
      for (int u = 0; u < h_n; ++u) input[u] = hj[u];
      in_len = h_n;
    }
  }

  double y = net.head_b;
  const double* h_top = h.data() + static_cast<std::size_t>(j_n - 1) * h_n;
  for (int u = 0; u < h_n; ++u) y += net.head_w[u] * h_top[u];
  return y;
}

// Gradient buffers bound to a grad ParamMap, same layout as LstmRef.
struct LstmGradRef {
  std::vector<double*> w_ih, w_hh, b_ih, b_hh;
  double* head_w;
  double* head_b;
};

LstmGradRef bind_lstm_grad(ParamMap& grad, const LearnerConfig& cfg) {
  LstmGradRef g;
  for (int j = 0; j < cfg.layers; ++j) {
    g.w_ih.push_back(grad.at(lstm_name(j, "w_ih")).data.data());
    g.w_hh.push_back(grad.at(lstm_name(j, "w_hh")).data.data());
    g.b_ih.push_back(grad.at(lstm_name(j, "b_ih")).data.data());
    g.b_hh.push_back(grad.at(lstm_name(j, "b_hh")).data.data());
  }
  g.head_w = grad.at("head.w").data.data();
  g.head_b = grad.at("head.b").data.data();
  return g;
}

// Backprop through time for one sample. dy is dLoss/dPrediction; trace holds
// the forward activations.
void lstm_backward(const LstmRef& net, const LearnerConfig& cfg, std::span<const double> xs,
                   const LstmTrace& trace, double dy, LstmGradRef& g) {
  const int h_n = cfg.hidden;
  const int j_n = cfg.layers;
  const std::size_t t_n = xs.size();

  // Gradients carried across time for each layer's h and c.
  std::vector<double> dh_carry(static_cast<std::size_t>(j_n) * h_n, 0.0);
  std::vector<double> dc_carry(static_cast<std::size_t>(j_n) * h_n, 0.0);
  std::vector<double> da(4 * h_n);
  std::vector<double> dinput(h_n);

  {  // head
    std::size_t top = ((t_n - 1) * j_n + (j_n - 1)) * static_cast<std::size_t>(h_n);
    for (int u = 0; u < h_n; ++u) {
      g.head_w[u] += dy * trace.h[top + u];
      dh_carry[static_cast<std::size_t>(j_n - 1) * h_n + u] += dy * net.head_w[u];
    }
    *g.head_b += dy;
  }

  for (std::size_t t = t_n; t-- > 0;) {
    for (int j = j_n - 1; j >= 0; --j) {
      const LstmLayerRef& l = net.layer[j];
      std::size_t base = (t * j_n + j) * static_cast<std::size_t>(h_n);
      std::size_t gbase = (t * j_n + j) * static_cast<std::size_t>(4 * h_n);
      std::size_t prev_base = t > 0 ? ((t - 1) * j_n + j) * static_cast<std::size_t>(h_n) : 0;
      std::size_t below_base = j > 0 ? (t * j_n + j - 1) * static_cast<std::size_t>(h_n) : 0;
      double* dh = dh_carry.data() + static_cast<std::size_t>(j) * h_n;
      double* dc = dc_carry.data() + static_cast<std::size_t>(j) * h_n;

      for (int u = 0; u < h_n; ++u) {
        double dh_u = dh[u];
        if (j < j_n - 1) dh_u += dinput[u];  // from the layer above at this t
        double gi = trace.gates[gbase + u];
        double gf = trace.gates[gbase + h_n + u];
        double gg = trace.gates[gbase + 2 * h_n + u];
        double go = trace.gates[gbase + 3 * h_n + u];
        double tc = trace.tanh_c[base + u];
        double c_prev = t > 0 ? trace.c[prev_base + u] : 0.0;

        double dc_u = dh_u * go * (1.0 - tc * tc) + dc[u];
        da[u] = dc_u * gg * gi * (1.0 - gi);              // input gate
        da[h_n + u] = dc_u * c_prev * gf * (1.0 - gf);    // forget gate
        da[2 * h_n + u] = dc_u * gi * (1.0 - gg * gg);    // candidate
        da[3 * h_n + u] = dh_u * tc * go * (1.0 - go);    // output gate
        dc[u] = dc_u * gf;
      }

      // Parameter gradients and the gradients flowing to h_prev / input.
      double x0 = xs[t];
      for (int u = 0; u < h_n; ++u) dh[u] = 0.0;
      if (j > 0)
        for (int u = 0; u < h_n; ++u) dinput[u] = 0.0;
      for (int r = 0; r < 4 * h_n; ++r) {
        double dar = da[r];
        g.b_ih[j][r] += dar;
        g.b_hh[j][r] += dar;
        double* gw_ih = g.w_ih[j] + static_cast<std::size_t>(r) * l.in;
        const double* w_ih = l.w_ih + static_cast<std::size_t>(r) * l.in;
        if (j == 0) {
          gw_ih[0] += dar * x0;
        } else {
          const double* h_below = trace.h.data() + below_base;
          for (int v = 0; v < h_n; ++v) {
            gw_ih[v] += dar * h_below[v];
            dinput[v] += dar * w_ih[v];
          }
        }
        double* gw_hh = g.w_hh[j] + static_cast<std::size_t>(r) * h_n;
        const double* w_hh = l.w_hh + static_cast<std::size_t>(r) * h_n;
        if (t > 0) {
          const double* h_prev = trace.h.data() + prev_base;
          for (int u = 0; u < h_n; ++u) {
            gw_hh[u] += dar * h_prev[u];
            dh[u] += dar * w_hh[u];
          }
        } else {
          for (int u = 0; u < h_n; ++u) dh[u] += dar * w_hh[u];
        }
      }
    }
  }
}

ParamMap zeros_like(const ParamMap& p) {
  ParamMap out;
  for (const auto& [name, t] : p) out.emplace(name, Tensor(t.shape));
  return out;
}

}  // namespace

Learner::Learner(LearnerConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.input_len < 1) throw std::invalid_argument("Learner: input_len must be >= 1");
  if (cfg_.hidden < 1) throw std::invalid_argument("Learner: hidden must be >= 1");
  if (cfg_.layers < 1) throw std::invalid_argument("Learner: layers must be >= 1");
  if (!(cfg_.eta >= 0.0)) throw std::invalid_argument("Learner: eta must be >= 0");
  if (cfg_.batch < 1) throw std::invalid_argument("Learner: batch must be >= 1");
  if (cfg_.epochs < 1) throw std::invalid_argument("Learner: epochs must be >= 1");

  std::size_t h = static_cast<std::size_t>(cfg_.hidden);
  if (cfg_.kind == LearnerKind::Linear) {
    skeleton_.emplace("linear.w", Tensor({static_cast<std::size_t>(cfg_.input_len)}));
    skeleton_.emplace("linear.b", Tensor({1}));
  } else {
    for (int j = 0; j < cfg_.layers; ++j) {
      std::size_t in = j == 0 ? 1 : h;
      skeleton_.emplace(lstm_name(j, "w_ih"), Tensor({4 * h, in}));
      skeleton_.emplace(lstm_name(j, "w_hh"), Tensor({4 * h, h}));
      skeleton_.emplace(lstm_name(j, "b_ih"), Tensor({4 * h}));
      skeleton_.emplace(lstm_name(j, "b_hh"), Tensor({4 * h}));
    }
    skeleton_.emplace("head.w", Tensor({h}));
    skeleton_.emplace("head.b", Tensor({1}));
  }
}

void Learner::check_params(const ParamMap& params) const {
  check_compatible(skeleton_, params, "learner params");
}

ParamMap Learner::init_params() const {
  ParamMap p = skeleton_;
  if (cfg_.kind == LearnerKind::Linear) return p;  // zeros

  std::mt19937_64 gen(derive_seed(cfg_.seed, "init"));
  double bound = 1.0 / std::sqrt(static_cast<double>(cfg_.hidden));
  // Weight tensors are filled in layer order; biases stay zero.
  for (int j = 0; j < cfg_.layers; ++j) {
    for (const char* part : {"w_ih", "w_hh"}) {
      Tensor& t = p.at(lstm_name(j, part));
      for (double& v : t.data) v = uniform_in(gen, -bound, bound);
    }
  }
  for (double& v : p.at("head.w").data) v = uniform_in(gen, -bound, bound);
  return p;
}

double Learner::predict(const ParamMap& params, std::span<const double> features) const {
  if (features.size() != static_cast<std::size_t>(cfg_.input_len))
    throw std::invalid_argument("predict: feature length " + std::to_string(features.size()) +
                                " != input_len " + std::to_string(cfg_.input_len));
  check_params(params);
  if (cfg_.kind == LearnerKind::Linear) {
    const Tensor& w = params.at("linear.w");
    double y = params.at("linear.b")[0];
    for (std::size_t i = 0; i < features.size(); ++i) y += w[i] * features[i];
    return y;
  }
  LstmRef net = bind_lstm(params, cfg_);
  return lstm_forward(net, cfg_, features, nullptr);
}

std::vector<double> Learner::predict_all(const ParamMap& params, const SampleSet& data) const {
  check_params(params);
  std::vector<double> out;
  out.reserve(data.size());
  if (cfg_.kind == LearnerKind::Linear) {
    const Tensor& w = params.at("linear.w");
    double b = params.at("linear.b")[0];
    for (std::size_t i = 0; i < data.size(); ++i) {
      auto x = data.row(i);
      double y = b;
      for (std::size_t k = 0; k < x.size(); ++k) y += w[k] * x[k];
      out.push_back(y);
    }
    return out;
  }
  LstmRef net = bind_lstm(params, cfg_);
  for (std::size_t i = 0; i < data.size(); ++i)
    out.push_back(lstm_forward(net, cfg_, data.row(i), nullptr));
  return out;
}

LossGrad Learner::loss_and_grad(const ParamMap& params, const BatchView& batch,
                                LossKind loss) const {
  if (!batch.set || batch.indices.empty())
    throw std::invalid_argument("loss_and_grad: empty batch");
  if (batch.set->input_len != static_cast<std::size_t>(cfg_.input_len))
    throw std::invalid_argument("loss_and_grad: sample width mismatch");
  check_params(params);

  LossGrad out;
  out.grad = zeros_like(skeleton_);
  double inv = 1.0 / static_cast<double>(batch.indices.size());

  if (cfg_.kind == LearnerKind::Linear) {
    const Tensor& w = params.at("linear.w");
    double b = params.at("linear.b")[0];
    Tensor& gw = out.grad.at("linear.w");
    Tensor& gb = out.grad.at("linear.b");
    for (std::size_t idx : batch.indices) {
      auto x = batch.set->row(idx);
      double y = b;
      for (std::size_t k = 0; k < x.size(); ++k) y += w[k] * x[k];
      double err = y - batch.set->targets[idx];
      double dl;
      if (loss == LossKind::SquaredError) {
        out.loss += err * err * inv;
        dl = 2.0 * err * inv;
      } else {
        out.loss += std::abs(err) * inv;
        dl = (err > 0.0 ? 1.0 : (err < 0.0 ? -1.0 : 0.0)) * inv;
      }
      for (std::size_t k = 0; k < x.size(); ++k) gw[k] += dl * x[k];
      gb[0] += dl;
    }
    return out;
  }

  LstmRef net = bind_lstm(params, cfg_);
  LstmGradRef g = bind_lstm_grad(out.grad, cfg_);
  LstmTrace trace;
  for (std::size_t idx : batch.indices) {
    auto x = batch.set->row(idx);
    double y = lstm_forward(net, cfg_, x, &trace);
    double err = y - batch.set->targets[idx];
    double dl;
    if (loss == LossKind::SquaredError) {
      out.loss += err * err * inv;
      dl = 2.0 * err * inv;
    } else {
      out.loss += std::abs(err) * inv;
      dl = (err > 0.0 ? 1.0 : (err < 0.0 ? -1.0 : 0.0)) * inv;
    }
    lstm_backward(net, cfg_, x, trace, dl, g);
  }
  return out;
}

double Learner::mean_loss(const ParamMap& params, const SampleSet& data, LossKind loss) const {
  std::vector<double> pred = predict_all(params, data);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double err = pred[i] - data.targets[i];
    s += loss == LossKind::SquaredError ? err * err : std::abs(err);
  }
  return s / static_cast<double>(pred.size());
}

ParamMap Learner::local_train(const ParamMap& start, const SampleSet& data) const {
  return local_train(start, data, cfg_.seed);
}

ParamMap Learner::local_train(const ParamMap& start, const SampleSet& data,
                              std::uint64_t seed) const {
  if (data.size() == 0) throw std::invalid_argument("local_train: empty data");
  check_params(start);

  ParamMap params = start;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t bsz = static_cast<std::size_t>(cfg_.batch);

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    std::mt19937_64 gen(derive_seed(seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    shuffle_indices(order, gen);
    for (std::size_t off = 0; off < order.size(); off += bsz) {
      std::size_t len = std::min(bsz, order.size() - off);
      BatchView batch{&data, {order.data() + off, len}};
      LossGrad lg = loss_and_grad(params, batch, LossKind::SquaredError);
      if (!std::isfinite(lg.loss))
        throw std::runtime_error("local_train: non-finite loss in epoch " +
                                 std::to_string(epoch) + ", batch at offset " +
                                 std::to_string(off));
      for (auto& [name, t] : params) {
        const Tensor& gt = lg.grad.at(name);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] -= cfg_.eta * gt[i];
      }
    }
  }
  return params;
}

}  // namespace fedda
