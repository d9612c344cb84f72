#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedda/clustering.hpp"
#include "fedda/data.hpp"
#include "fedda/learner.hpp"
#include "fedda/params.hpp"
#include "fedda/report.hpp"

namespace fedda {

enum class Strategy { FedAvg, FedAtt, FedDA };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct FederationConfig {
  int rounds = 100;
  double delta = 0.1;  // client fraction per round
  Strategy strategy = Strategy::FedDA;
  AggregationConfig agg;
  double share_percent = 100.0;  // portion of the augmented week shared
  ClusteringConfig clustering;
  LearnerConfig learner;
  WindowSpec window;
  int quasi_epochs = 100;
  bool disseminate_cluster = false;  // send cluster model instead of global
  int test_weeks = 1;                // held-out suffix, in weeks
  std::uint64_t seed = 0;
};

// One participating station after preprocessing: standardized with stats
// from its training split, windowed, and augmented from the training weeks.
struct ClientData {
  int station_id = 0;
  GeoPoint location;
  double train_mean = 0.0;
  double train_std = 0.0;
  SampleSet train_windows;
  SampleSet test_windows;  // targets past the split; lags may reach back
  AugmentedSeries augmented;
};

struct FederationState {
  ParamMap global_model;
  std::map<int, ParamMap> cluster_models;
  ParamMap quasi_model;
  ClusterAssignment assignment;
  int round = 0;
};

// Splits each hourly series into train weeks + the trailing test weeks,
// standardizes with train-only statistics, windows, and augments.
std::vector<ClientData> prepare_clients(const std::vector<TrafficSeries>& series,
                                        const WindowSpec& window, int test_weeks);

// Number of leading augmented-week slots a client shares: ceil of the
// percentage, at least 1, at most the whole week.
std::size_t shared_slot_count(std::size_t week_len, double share_percent);

// Windows the shared prefix of an augmented week. A share too short for the
// window spec yields an empty set (the client just contributes nothing).
SampleSet window_shared_prefix(const AugmentedSeries& aug, const WindowSpec& window,
                               double share_percent);

// Pools the clients' shared windowed samples and trains a fresh model on
// them. Throws when the pooled set is empty.
ParamMap build_quasi_global(const std::vector<SampleSet>& augmented_shares,
                            const FederationConfig& cfg);

// max(floor(K*delta), 1) distinct ids, ascending; deterministic in
// (seed, round).
std::vector<int> sample_clients(int k, double delta, int round, std::uint64_t seed);

struct RoundStats {
  std::vector<int> sampled;
  double train_loss = 0.0;  // mean post-update local loss of sampled clients
};

FederationState run_round(const FederationState& state, const std::vector<ClientData>& clients,
                          const FederationConfig& cfg, RoundStats* stats = nullptr);

struct ExperimentResult {
  std::vector<RoundReport> reports;
  FederationState final_state;
  std::vector<double> final_abs_errors;  // |pred - truth| on pooled test set
};

// Full pipeline on one service's hourly series: prepare -> augment/share ->
// quasi-global -> dual clustering -> rounds of train/aggregate/evaluate.
ExperimentResult run_experiment_full(const std::vector<TrafficSeries>& series,
                                     const FederationConfig& cfg);

std::vector<RoundReport> run_experiment(const std::vector<TrafficSeries>& series,
                                        const FederationConfig& cfg);

}  // namespace fedda
