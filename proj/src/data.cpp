#include "fedda/data.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fedda/rng.hpp"

namespace fedda {

const char* to_string(Service s) {
  switch (s) {
    case Service::SMS: return "sms";
    case Service::Call: return "call";
    case Service::Internet: return "internet";
  }
  return "?";
}

Service service_from_string(const std::string& s) {
  if (s == "sms" || s == "SMS") return Service::SMS;
  if (s == "call" || s == "Call") return Service::Call;
  if (s == "internet" || s == "Internet") return Service::Internet;
  throw std::invalid_argument("unknown service '" + s + "'");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void row_error(const std::string& path, std::size_t line_no, const std::string& msg) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + msg);
}

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  std::int64_t yoe = y - era * 400;
  std::int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

// Accepts ISO-8601 UTC (2013-11-01T00:00:00, 'T' or space, optional Z) or
// integer epoch milliseconds. Returns epoch seconds.
std::int64_t parse_timestamp(const std::string& raw) {
  if (raw.empty()) throw std::runtime_error("empty timestamp");
  bool digits_only = raw.find_first_not_of("0123456789-") == std::string::npos &&
                     raw.find('-', 1) == std::string::npos;
  if (digits_only) {
    std::int64_t ms = std::stoll(raw);
    if (ms % 1000 != 0) throw std::runtime_error("timestamp not on a whole second: " + raw);
    return ms / 1000;
  }
  int y, mo, d, h = 0, mi = 0;
  double sec = 0.0;
  char sep;
  std::istringstream ss(raw);
  ss >> y >> sep >> mo >> sep >> d;
  if (!ss) throw std::runtime_error("bad timestamp '" + raw + "'");
  if (ss.peek() == 'T' || ss.peek() == ' ') {
    ss.get();
    ss >> h >> sep >> mi;
    if (ss.peek() == ':') {
      ss.get();
      ss >> sec;
    }
  }
  return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + static_cast<std::int64_t>(sec);
}

double parse_activity(const std::string& field, const std::string& path, std::size_t line_no) {
  if (field.empty()) return 0.0;  // missing = no recorded activity
  char* end = nullptr;
  double v = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || *end != '\0') row_error(path, line_no, "bad numeric field '" + field + "'");
  if (!(v >= 0.0)) row_error(path, line_no, "negative traffic value " + field);
  return v;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<TrafficSeries> ingest_csv(const std::string& path, const IngestSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open traffic file '" + path + "'");

  std::map<int, GeoPoint> geo;
  {
    std::ifstream gin(schema.geometry_path);
    if (!gin) throw std::runtime_error("cannot open geometry file '" + schema.geometry_path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(gin, line)) {
      ++line_no;
      line = trim(line);
      if (line.empty() || (line_no == 1 && line.find("station_id") != std::string::npos)) continue;
      auto f = split_csv_line(line);
      if (f.size() != 3) row_error(schema.geometry_path, line_no, "expected station_id,lon,lat");
      try {
        geo[std::stoi(f[0])] = {std::stod(f[1]), std::stod(f[2])};
      } catch (const std::exception&) {
        row_error(schema.geometry_path, line_no, "bad geometry row");
      }
    }
  }

  // (station, timestamp) -> summed per-service activity
  std::map<std::pair<int, std::int64_t>, std::array<double, 3>> cells;
  std::set<std::int64_t> stamps;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (line_no == 1 && line.find("station_id") != std::string::npos) continue;
    auto f = split_csv_line(line);
    if (f.size() != 5) row_error(path, line_no, "expected station_id,timestamp,sms,call,internet");
    int station;
    std::int64_t ts;
    try {
      station = std::stoi(f[0]);
      ts = parse_timestamp(f[1]);
    } catch (const std::exception& e) {
      row_error(path, line_no, e.what());
    }
    auto& cell = cells[{station, ts}];
    cell[0] += parse_activity(f[2], path, line_no);
    cell[1] += parse_activity(f[3], path, line_no);
    cell[2] += parse_activity(f[4], path, line_no);
    stamps.insert(ts);
  }
  if (cells.empty()) throw std::runtime_error(path + ": no traffic rows");

  std::int64_t t0 = *stamps.begin();
  std::int64_t t1 = *stamps.rbegin();
  std::int64_t step = schema.step;
  if (step == 0) {
    std::int64_t prev = t0;
    for (std::int64_t t : stamps) {
      if (t != prev && (step == 0 || t - prev < step)) step = t - prev;
      prev = t;
    }
    if (step == 0) step = kSecondsPerHour;  // single distinct timestamp
  }
  for (std::int64_t t : stamps)
    if ((t - t0) % step != 0)
      throw std::runtime_error(path + ": timestamp " + std::to_string(t) +
                               " not aligned to step " + std::to_string(step));

  std::size_t z = static_cast<std::size_t>((t1 - t0) / step) + 1;
  std::set<int> station_ids;
  for (const auto& [key, _] : cells) station_ids.insert(key.first);

  std::vector<TrafficSeries> out;
  for (int sid : station_ids) {
    auto git = geo.find(sid);
    if (git == geo.end())
      throw std::runtime_error("station " + std::to_string(sid) + " missing from geometry file '" +
                               schema.geometry_path + "'");
    for (int svc = 0; svc < 3; ++svc) {
      TrafficSeries s;
      s.station_id = sid;
      s.location = git->second;
      s.service = static_cast<Service>(svc);
      s.start_time = t0;
      s.step = step;
      s.values.assign(z, 0.0);
      out.push_back(std::move(s));
    }
  }
  std::map<int, std::size_t> station_base;
  std::size_t idx = 0;
  for (int sid : station_ids) station_base[sid] = 3 * idx++;
  for (const auto& [key, acts] : cells) {
    std::size_t slot = static_cast<std::size_t>((key.second - t0) / step);
    for (int svc = 0; svc < 3; ++svc) out[station_base[key.first] + svc].values[slot] += acts[svc];
  }
  return out;
}

TrafficSeries resample_hourly(const TrafficSeries& series) {
  if (series.step <= 0 || kSecondsPerHour % series.step != 0)
    throw std::invalid_argument("resample_hourly: step " + std::to_string(series.step) +
                                "s does not divide one hour");
  std::size_t ratio = static_cast<std::size_t>(kSecondsPerHour / series.step);
  if (ratio == 1) return series;

  TrafficSeries out = series;
  out.step = kSecondsPerHour;
  out.values.clear();
  out.values.reserve((series.values.size() + ratio - 1) / ratio);
  for (std::size_t i = 0; i < series.values.size(); i += ratio) {
    double sum = 0.0;
    for (std::size_t j = i; j < std::min(i + ratio, series.values.size()); ++j)
      sum += series.values[j];
    out.values.push_back(sum);
  }
  return out;
}

Standardized standardize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("standardize: empty input");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  Standardized out;
  out.mean = mean;
  out.std_dev = std::sqrt(var);
  out.values.reserve(values.size());
  if (out.std_dev < 1e-8) {
    // epsilon guard: a (near-)constant series maps to exact zeros
    out.values.assign(values.size(), 0.0);
  } else {
    for (double v : values) out.values.push_back((v - mean) / out.std_dev);
  }
  return out;
}

SampleSet make_windows(const TrafficSeries& series, const WindowSpec& spec) {
  if (spec.p < 1) throw std::invalid_argument("make_windows: p must be >= 1");
  if (spec.q < 0) throw std::invalid_argument("make_windows: q must be >= 0");
  if (spec.q > 0 && spec.period < 1)
    throw std::invalid_argument("make_windows: period must be >= 1 when q > 0");

  std::size_t z = series.values.size();
  std::size_t hist = static_cast<std::size_t>(spec.min_history());
  if (z <= hist)
    throw std::invalid_argument("make_windows: series too short, need length > " +
                                std::to_string(hist) + " got " + std::to_string(z));

  SampleSet out;
  out.input_len = static_cast<std::size_t>(spec.input_len());
  std::size_t n = z - hist;
  out.features.reserve(n * out.input_len);
  out.targets.reserve(n);
  out.index_map.reserve(n);
  // target indices are 1-based; values[t-1] holds d_t
  for (std::size_t t = hist + 1; t <= z; ++t) {
    for (int j = 1; j <= spec.p; ++j) out.features.push_back(series.values[t - 1 - j]);
    for (int j = 1; j <= spec.q; ++j)
      out.features.push_back(series.values[t - 1 - static_cast<std::size_t>(spec.period) * j]);
    out.targets.push_back(series.values[t - 1]);
    out.index_map.push_back(t);
  }
  return out;
}

AugmentedSeries augment_weekly(const TrafficSeries& series) {
  constexpr std::int64_t week_seconds = 7 * 24 * kSecondsPerHour;
  if (series.step <= 0 || week_seconds % series.step != 0)
    throw std::invalid_argument("augment_weekly: step does not divide one week");
  std::size_t w = static_cast<std::size_t>(week_seconds / series.step);
  std::size_t weeks = series.values.size() / w;
  if (weeks == 0)
    throw std::invalid_argument("augment_weekly: need at least one complete week (" +
                                std::to_string(w) + " slots), got " +
                                std::to_string(series.values.size()));

  std::vector<double> avg(w, 0.0);
  for (std::size_t wk = 0; wk < weeks; ++wk)
    for (std::size_t j = 0; j < w; ++j) avg[j] += series.values[wk * w + j];
  for (double& v : avg) v /= static_cast<double>(weeks);

  AugmentedSeries out;
  out.station_id = series.station_id;
  out.values = standardize(avg).values;
  return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("pearson: length mismatch (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  if (a.size() < 2) throw std::invalid_argument("pearson: need at least 2 points");
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(a.size());
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double da = a[i] - ma, db = b[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.stations < 1) throw std::invalid_argument("generate_synthetic: stations must be >= 1");
  if (spec.archetypes < 1 || spec.archetypes > spec.stations)
    throw std::invalid_argument("generate_synthetic: archetypes must be in [1, stations]");
  if (spec.weeks < 1) throw std::invalid_argument("generate_synthetic: weeks must be >= 1");
  if (!(spec.noise >= 0.0)) throw std::invalid_argument("generate_synthetic: noise must be >= 0");
  if (!(spec.scale_min > 0.0) || spec.scale_max < spec.scale_min)
    throw std::invalid_argument("generate_synthetic: bad scale range");

  constexpr double two_pi = 2.0 * 3.14159265358979323846;
  constexpr std::int64_t start_time = 1383264000;  // 2013-11-01T00:00:00Z
  std::size_t z = static_cast<std::size_t>(spec.weeks) * kHoursPerWeek;

  SyntheticData out;
  // Distinct daily/weekly sinusoid mixtures with archetype-specific phase.
  // The constant offset keeps noise-free traffic strictly positive.
  auto pattern_at = [&](int a, std::size_t t) {
    double phase = two_pi * a / spec.archetypes;
    double daily_amp = 1.0 + 0.6 * std::fmod(0.37 * (a + 1), 1.0);
    double weekly_amp = 0.4 + 0.5 * std::fmod(0.61 * (a + 1), 1.0);
    return 3.0 + daily_amp * std::sin(two_pi * t / 24.0 + phase) +
           weekly_amp * std::sin(two_pi * t / 168.0 + 0.5 * phase);
  };
  out.patterns.resize(spec.archetypes);
  for (int a = 0; a < spec.archetypes; ++a) {
    out.patterns[a].resize(kHoursPerWeek);
    for (std::size_t t = 0; t < kHoursPerWeek; ++t) out.patterns[a][t] = pattern_at(a, t);
  }

  int grid = 1;
  while (grid * grid < spec.archetypes) ++grid;

  for (int k = 0; k < spec.stations; ++k) {
    int a = static_cast<int>(static_cast<std::int64_t>(k) * spec.archetypes / spec.stations);
    out.archetype_labels.push_back(a);

    std::mt19937_64 geo_gen(derive_seed(spec.seed, "geo", k));
    GeoPoint loc{(a % grid) * 1.0 + uniform_in(geo_gen, -0.05, 0.05),
                 (a / grid) * 1.0 + uniform_in(geo_gen, -0.05, 0.05)};
    std::mt19937_64 scale_gen(derive_seed(spec.seed, "scale", k));
    double scale = uniform_in(scale_gen, spec.scale_min, spec.scale_max);

    for (int svc = 0; svc < 3; ++svc) {
      static constexpr double svc_mult[3] = {1.0, 0.6, 1.8};
      TrafficSeries s;
      s.station_id = k;
      s.location = loc;
      s.service = static_cast<Service>(svc);
      s.start_time = start_time;
      s.step = kSecondsPerHour;
      s.values.reserve(z);
      std::mt19937_64 noise_gen(derive_seed(spec.seed, "noise", k, svc));
      for (std::size_t t = 0; t < z; ++t) {
        double v = pattern_at(a, t) * scale * svc_mult[svc];
        if (spec.noise > 0.0) v += spec.noise * normal01(noise_gen);
        s.values.push_back(std::max(0.0, v));
      }
      out.series.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace fedda
