#include "fedda/federation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedda/metrics.hpp"
#include "fedda/rng.hpp"

namespace fedda {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::FedAvg: return "fedavg";
    case Strategy::FedAtt: return "fedatt";
    case Strategy::FedDA: return "fedda";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "fedavg" || s == "FedAvg") return Strategy::FedAvg;
  if (s == "fedatt" || s == "FedAtt") return Strategy::FedAtt;
  if (s == "fedda" || s == "FedDA") return Strategy::FedDA;
  throw std::invalid_argument("unknown strategy '" + s + "'");
}

std::vector<ClientData> prepare_clients(const std::vector<TrafficSeries>& series,
                                        const WindowSpec& window, int test_weeks) {
  if (series.empty()) throw std::invalid_argument("prepare_clients: no series");
  if (test_weeks < 1) throw std::invalid_argument("prepare_clients: test_weeks must be >= 1");

  std::vector<ClientData> out;
  for (const TrafficSeries& s : series) {
    if (s.step != kSecondsPerHour)
      throw std::invalid_argument("prepare_clients: series must be hourly (station " +
                                  std::to_string(s.station_id) + ")");
    std::size_t test_len = static_cast<std::size_t>(test_weeks) * kHoursPerWeek;
    if (s.values.size() < test_len + kHoursPerWeek)
      throw std::invalid_argument(
          "prepare_clients: station " + std::to_string(s.station_id) + " has " +
          std::to_string(s.values.size()) + " slots; needs at least " +
          std::to_string(test_len + kHoursPerWeek) + " (test weeks + one training week)");
    std::size_t split = s.values.size() - test_len;

    ClientData c;
    c.station_id = s.station_id;
    c.location = s.location;

    // Standardize the whole series with training-split statistics.
    Standardized st = standardize({s.values.data(), split});
    c.train_mean = st.mean;
    c.train_std = st.std_dev;
    TrafficSeries z = s;
    double denom = st.std_dev < 1e-8 ? 1.0 : st.std_dev;
    for (double& v : z.values) v = (v - st.mean) / denom;

    SampleSet all = make_windows(z, window);
    std::size_t n_train = 0;
    while (n_train < all.size() && all.index_map[n_train] <= split) ++n_train;
    auto take = [&](std::size_t lo, std::size_t hi) {
      SampleSet part;
      part.input_len = all.input_len;
      part.features.assign(all.features.begin() + lo * all.input_len,
                           all.features.begin() + hi * all.input_len);
      part.targets.assign(all.targets.begin() + lo, all.targets.begin() + hi);
      part.index_map.assign(all.index_map.begin() + lo, all.index_map.begin() + hi);
      return part;
    };
    c.train_windows = take(0, n_train);
    c.test_windows = take(n_train, all.size());
    if (c.train_windows.size() == 0)
      throw std::invalid_argument("prepare_clients: station " + std::to_string(s.station_id) +
                                  " has no training windows");

    TrafficSeries train_part = s;
    train_part.values.resize(split);
    c.augmented = augment_weekly(train_part);
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(),
            [](const ClientData& a, const ClientData& b) { return a.station_id < b.station_id; });
  return out;
}

std::size_t shared_slot_count(std::size_t week_len, double share_percent) {
  if (!(share_percent > 0.0) || share_percent > 100.0)
    throw std::invalid_argument("share_percent must be in (0, 100]");
  auto raw = static_cast<std::size_t>(
      std::ceil(static_cast<double>(week_len) * share_percent / 100.0));
  return std::min(std::max<std::size_t>(raw, 1), week_len);
}

ParamMap build_quasi_global(const std::vector<SampleSet>& augmented_shares,
                            const FederationConfig& cfg) {
  SampleSet pool;
  pool.input_len = static_cast<std::size_t>(cfg.window.input_len());
  for (const SampleSet& s : augmented_shares) {
    if (s.size() == 0) continue;
    if (s.input_len != pool.input_len)
      throw std::invalid_argument("build_quasi_global: share width mismatch");
    pool.features.insert(pool.features.end(), s.features.begin(), s.features.end());
    pool.targets.insert(pool.targets.end(), s.targets.begin(), s.targets.end());
    pool.index_map.insert(pool.index_map.end(), s.index_map.begin(), s.index_map.end());
  }
  if (pool.size() == 0)
    throw std::runtime_error(
        "build_quasi_global: pooled share set is empty (share too small for the window spec)");

  LearnerConfig lc = cfg.learner;
  lc.epochs = cfg.quasi_epochs;
  lc.seed = derive_seed(cfg.seed, "quasi-init");
  Learner learner(lc);
  return learner.local_train(learner.init_params(), pool, derive_seed(cfg.seed, "quasi-train"));
}

std::vector<int> sample_clients(int k, double delta, int round, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("sample_clients: need at least one client");
  if (!(delta > 0.0) || delta > 1.0)
    throw std::invalid_argument("sample_clients: delta must be in (0, 1]");
  int m = std::max(static_cast<int>(std::floor(k * delta)), 1);

  std::vector<int> ids(k);
  std::iota(ids.begin(), ids.end(), 0);
  std::mt19937_64 gen(derive_seed(seed, "sample", static_cast<std::uint64_t>(round)));
  for (int i = 0; i < m; ++i) {
    int j = i + static_cast<int>(gen() % static_cast<std::uint64_t>(k - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(m);
  std::sort(ids.begin(), ids.end());
  return ids;
}

FederationState run_round(const FederationState& state, const std::vector<ClientData>& clients,
                          const FederationConfig& cfg, RoundStats* stats) {
  FederationState next = state;
  const int k = static_cast<int>(clients.size());
  std::vector<int> sampled = sample_clients(k, cfg.delta, state.round, cfg.seed);

  LearnerConfig lc = cfg.learner;
  Learner learner(lc);

  // Local training, ascending client id so any parallel schedule reduces
  // identically.
  std::vector<ParamMap> locals;
  locals.reserve(sampled.size());
  double loss_sum = 0.0;
  for (int id : sampled) {
    const ClientData& client = clients[id];
    const ParamMap* start = &state.global_model;
    if (cfg.disseminate_cluster && cfg.strategy == Strategy::FedDA) {
      auto it = state.cluster_models.find(state.assignment.labels[id]);
      if (it != state.cluster_models.end()) start = &it->second;
    }
    std::uint64_t local_seed =
        derive_seed(cfg.seed, "local", static_cast<std::uint64_t>(state.round),
                    static_cast<std::uint64_t>(id));
    ParamMap trained = learner.local_train(*start, client.train_windows, local_seed);
    loss_sum += learner.mean_loss(trained, client.train_windows, LossKind::SquaredError);
    locals.push_back(std::move(trained));
  }
  if (stats) {
    stats->sampled = sampled;
    stats->train_loss = loss_sum / static_cast<double>(sampled.size());
  }

  switch (cfg.strategy) {
    case Strategy::FedAvg:
      next.global_model = fedavg(locals);
      break;
    case Strategy::FedAtt:
      next.global_model = fedatt(state.global_model, locals, cfg.agg.gamma);
      break;
    case Strategy::FedDA: {
      // Intra-cluster aggregation for clusters with sampled members;
      // untouched clusters keep their previous model.
      for (auto& [cid, model] : next.cluster_models) {
        std::vector<ParamMap> members;
        for (std::size_t i = 0; i < sampled.size(); ++i)
          if (state.assignment.labels[sampled[i]] == cid) members.push_back(locals[i]);
        if (!members.empty())
          model = fedda_update(model, members, state.quasi_model, cfg.agg);
      }
      // Inter-cluster aggregation into the global model.
      std::vector<ParamMap> cluster_inputs;
      cluster_inputs.reserve(next.cluster_models.size());
      for (const auto& [cid, model] : next.cluster_models) cluster_inputs.push_back(model);
      next.global_model =
          fedda_update(state.global_model, cluster_inputs, state.quasi_model, cfg.agg);
      break;
    }
  }
  next.round = state.round + 1;
  return next;
}

SampleSet window_shared_prefix(const AugmentedSeries& aug, const WindowSpec& window,
                               double share_percent) {
  std::size_t shared = shared_slot_count(aug.values.size(), share_percent);
  SampleSet empty;
  empty.input_len = static_cast<std::size_t>(window.input_len());
  if (shared <= static_cast<std::size_t>(window.min_history())) return empty;
  TrafficSeries s;
  s.station_id = aug.station_id;
  s.step = kSecondsPerHour;
  s.values.assign(aug.values.begin(), aug.values.begin() + shared);
  return make_windows(s, window);
}

ExperimentResult run_experiment_full(const std::vector<TrafficSeries>& series,
                                     const FederationConfig& cfg) {
  if (cfg.rounds < 0) throw std::invalid_argument("run_experiment: rounds must be >= 0");
  std::vector<ClientData> clients = prepare_clients(series, cfg.window, cfg.test_weeks);
  const int k = static_cast<int>(clients.size());

  LearnerConfig lc = cfg.learner;
  lc.input_len = cfg.window.input_len();
  FederationConfig fcfg = cfg;
  fcfg.learner = lc;

  ExperimentResult out;
  FederationState state;

  LearnerConfig init_cfg = lc;
  init_cfg.seed = derive_seed(cfg.seed, "model-init");
  state.global_model = Learner(init_cfg).init_params();

  if (cfg.strategy == Strategy::FedDA) {
    std::vector<SampleSet> shares;
    shares.reserve(clients.size());
    for (const ClientData& c : clients) {
      AugmentedSeries aug = c.augmented;
      aug.share_percent = cfg.share_percent;
      shares.push_back(window_shared_prefix(aug, fcfg.window, cfg.share_percent));
    }
    state.quasi_model = build_quasi_global(shares, fcfg);

    std::vector<AugmentedSeries> augmented;
    std::vector<GeoPoint> locations;
    for (const ClientData& c : clients) {
      augmented.push_back(c.augmented);
      locations.push_back(c.location);
    }
    ClusteringConfig ccfg = cfg.clustering;
    ccfg.c = std::min(ccfg.c, k);
    ccfg.seed = derive_seed(cfg.seed, "cluster");
    state.assignment = dual_cluster(augmented, locations, ccfg);
    for (int c = 0; c < state.assignment.effective_c; ++c)
      state.cluster_models[c] = state.global_model;
  }

  // Pooled test targets, ascending station id.
  std::vector<double> truth;
  for (const ClientData& c : clients)
    truth.insert(truth.end(), c.test_windows.targets.begin(), c.test_windows.targets.end());

  Learner learner(lc);
  auto evaluate = [&](const ParamMap& model, std::vector<double>* abs_errors) {
    std::vector<double> pred;
    pred.reserve(truth.size());
    for (const ClientData& c : clients) {
      std::vector<double> p = learner.predict_all(model, c.test_windows);
      pred.insert(pred.end(), p.begin(), p.end());
    }
    if (abs_errors) {
      abs_errors->clear();
      for (std::size_t i = 0; i < pred.size(); ++i)
        abs_errors->push_back(std::abs(pred[i] - truth[i]));
    }
    struct { double mse, mae, r2; } m{};
    m.mse = mse(pred, truth);
    m.mae = mae(pred, truth);
    m.r2 = r2(pred, truth);
    return m;
  };

  std::string service_name = series.empty() ? "" : to_string(series.front().service);
  for (int round = 0; round < cfg.rounds; ++round) {
    RoundStats stats;
    state = run_round(state, clients, fcfg, &stats);
    auto m = evaluate(state.global_model, round + 1 == cfg.rounds ? &out.final_abs_errors
                                                                  : nullptr);
    RoundReport r;
    r.round = state.round;
    r.strategy = to_string(cfg.strategy);
    r.service = service_name;
    r.train_loss = stats.train_loss;
    r.test_mse = m.mse;
    r.test_mae = m.mae;
    r.test_r2 = m.r2;
    out.reports.push_back(std::move(r));
  }
  out.final_state = std::move(state);
  return out;
}

std::vector<RoundReport> run_experiment(const std::vector<TrafficSeries>& series,
                                        const FederationConfig& cfg) {
  return run_experiment_full(series, cfg).reports;
}

}  // namespace fedda
