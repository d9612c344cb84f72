#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedda {

enum class Service { SMS, Call, Internet };

const char* to_string(Service s);
Service service_from_string(const std::string& s);

constexpr std::int64_t kSecondsPerHour = 3600;
constexpr std::int64_t kHoursPerWeek = 168;

struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;
};

// One base station's traffic volumes for one service type at a fixed step.
struct TrafficSeries {
  int station_id = 0;
  GeoPoint location;
  Service service = Service::SMS;
  std::int64_t start_time = 0;  // epoch seconds, UTC
  std::int64_t step = kSecondsPerHour;
  std::vector<double> values;
};

struct WindowSpec {
  int p = 3;        // closeness lags
  int q = 3;        // periodic lags
  int period = 24;  // periodic lag spacing, in time steps

  int input_len() const { return p + q; }
  // Largest lag any sample reaches back; targets start one past it.
  int min_history() const { return std::max(p, period * q); }
};

// Supervised (feature row, target) pairs from the sliding window.
// index_map[i] is the 1-based source index z of targets[i]; feature row i is
// {d_{z-1},...,d_{z-p}, d_{z-period},...,d_{z-period*q}}.
struct SampleSet {
  std::size_t input_len = 0;
  std::vector<double> features;  // n x input_len, row-major
  std::vector<double> targets;
  std::vector<std::size_t> index_map;

  std::size_t size() const { return targets.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * input_len, input_len};
  }
};

// Standardized weekly-average traffic profile of one station.
struct AugmentedSeries {
  int station_id = 0;
  std::vector<double> values;    // one week of steps, z-scored
  double share_percent = 100.0;  // portion a client actually shares
};

struct SyntheticSpec {
  int stations = 20;
  int archetypes = 4;
  int weeks = 8;
  double noise = 0.1;      // Gaussian noise std, in pattern units
  double scale_min = 0.5;  // per-station volume scale range
  double scale_max = 1.5;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  std::vector<TrafficSeries> series;          // stations x {SMS, Call, Internet}
  std::vector<int> archetype_labels;          // ground truth, one per station
  std::vector<std::vector<double>> patterns;  // archetype weekly patterns, 168 slots
};

struct IngestSchema {
  std::string geometry_path;  // CSV: station_id,lon,lat
  std::int64_t step = 0;      // row spacing in seconds; 0 = infer from data
};

// Reads the traffic CSV (station_id,timestamp,sms,call,internet) into one
// series per (station, service). Duplicate (station, timestamp) rows are
// summed, absent time slots are zero-filled over the file's full time range.
std::vector<TrafficSeries> ingest_csv(const std::string& path, const IngestSchema& schema);

// Sums sub-hourly slots into hourly ones. The step must divide one hour.
TrafficSeries resample_hourly(const TrafficSeries& series);

struct Standardized {
  std::vector<double> values;
  double mean = 0.0;
  double std_dev = 0.0;  // population standard deviation
};

// (values - mean) / max(std, 1e-8); the epsilon guard maps constant input
// to all zeros.
Standardized standardize(std::span<const double> values);

SampleSet make_windows(const TrafficSeries& series, const WindowSpec& spec);

// Per-slot mean over complete weeks (trailing partial week dropped), then
// standardized. Weeks are aligned to the series start.
AugmentedSeries augment_weekly(const TrafficSeries& series);

// Pearson r; returns 0 when either input is constant.
double pearson(std::span<const double> a, std::span<const double> b);

SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace fedda
