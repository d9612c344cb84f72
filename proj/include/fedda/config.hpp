#pragma once

#include <string>
#include <vector>

#include "fedda/data.hpp"
#include "fedda/federation.hpp"

namespace fedda {

// Grid-search lists; empty lists fall back to the single configured value.
struct SweepSpec {
  std::vector<double> rho;
  std::vector<int> c;
  std::vector<double> share_percent;
};

enum class DataSourceKind { Synthetic, Csv };

struct DataSource {
  DataSourceKind kind = DataSourceKind::Synthetic;
  SyntheticSpec synthetic;
  std::string traffic_csv;
  std::string geometry_csv;
  std::int64_t csv_step = 0;  // 0 = infer
};

struct ExperimentConfig {
  FederationConfig fed;
  DataSource data;
  Service service = Service::SMS;
  std::string out_dir = "results";
  SweepSpec sweep;
};

// Paper-style defaults: p=q=3 window with daily period, two recurrent layers
// of 64 units, eta 0.01, batch 20, 1 local epoch, 100 rounds, delta 0.1,
// C=16, rho grid -0.3..0.3 for sweeps.
ExperimentConfig default_config();

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text, const std::string& origin);

// Loads or generates the configured data source, hourly, one entry per
// (station, service).
std::vector<TrafficSeries> load_series(const DataSource& source);

// The configured service's series only.
std::vector<TrafficSeries> select_service(const std::vector<TrafficSeries>& all, Service service);

}  // namespace fedda
