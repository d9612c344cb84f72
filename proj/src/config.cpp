#include "fedda/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fedda/rng.hpp"

namespace fedda {

namespace {

using nlohmann::json;

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void check_known_keys(const json& j, std::initializer_list<const char*> known,
                      const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok) throw std::invalid_argument(where + ": unknown key '" + key + "'");
  }
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.fed.rounds = 100;
  cfg.fed.delta = 0.1;
  cfg.fed.strategy = Strategy::FedDA;
  cfg.fed.agg.rho = 0.1;
  cfg.fed.agg.gamma = 1.0;
  cfg.fed.agg.include_quasi = true;
  cfg.fed.share_percent = 100.0;
  cfg.fed.clustering = ClusteringConfig{};  // C=16, J=20
  cfg.fed.learner = LearnerConfig{};        // recurrent, 2x64, eta 0.01, batch 20
  cfg.fed.window = WindowSpec{};            // p=q=3, period 24
  cfg.fed.quasi_epochs = 100;
  cfg.sweep.rho = {-0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3};
  return cfg;
}

ExperimentConfig parse_config(const std::string& json_text, const std::string& origin) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  }

  ExperimentConfig cfg = default_config();
  check_known_keys(j, {"seed", "out", "service", "window", "learner", "clustering", "federation",
                       "data", "sweep"},
                   origin);

  std::uint64_t seed = 0;
  read(j, "seed", seed);
  read(j, "out", cfg.out_dir);
  if (j.contains("service")) cfg.service = service_from_string(j.at("service").get<std::string>());

  if (j.contains("window")) {
    const json& w = j.at("window");
    check_known_keys(w, {"p", "q", "period"}, origin + ".window");
    read(w, "p", cfg.fed.window.p);
    read(w, "q", cfg.fed.window.q);
    read(w, "period", cfg.fed.window.period);
  }

  if (j.contains("learner")) {
    const json& l = j.at("learner");
    check_known_keys(l, {"kind", "hidden", "layers", "eta", "batch", "epochs"},
                     origin + ".learner");
    if (l.contains("kind")) {
      std::string kind = l.at("kind").get<std::string>();
      if (kind == "linear")
        cfg.fed.learner.kind = LearnerKind::Linear;
      else if (kind == "recurrent")
        cfg.fed.learner.kind = LearnerKind::Recurrent;
      else
        throw std::invalid_argument(origin + ": unknown learner kind '" + kind + "'");
    }
    read(l, "hidden", cfg.fed.learner.hidden);
    read(l, "layers", cfg.fed.learner.layers);
    read(l, "eta", cfg.fed.learner.eta);
    read(l, "batch", cfg.fed.learner.batch);
    read(l, "epochs", cfg.fed.learner.epochs);
  }

  if (j.contains("clustering")) {
    const json& c = j.at("clustering");
    check_known_keys(c, {"c", "max_iter_kmeans", "j_max"}, origin + ".clustering");
    read(c, "c", cfg.fed.clustering.c);
    read(c, "max_iter_kmeans", cfg.fed.clustering.max_iter_kmeans);
    read(c, "j_max", cfg.fed.clustering.j_max);
  }

  if (j.contains("federation")) {
    const json& f = j.at("federation");
    check_known_keys(f,
                     {"rounds", "delta", "strategy", "rho", "gamma", "include_quasi",
                      "share_percent", "quasi_epochs", "disseminate_cluster", "test_weeks"},
                     origin + ".federation");
    read(f, "rounds", cfg.fed.rounds);
    read(f, "delta", cfg.fed.delta);
    if (f.contains("strategy"))
      cfg.fed.strategy = strategy_from_string(f.at("strategy").get<std::string>());
    read(f, "rho", cfg.fed.agg.rho);
    read(f, "gamma", cfg.fed.agg.gamma);
    read(f, "include_quasi", cfg.fed.agg.include_quasi);
    read(f, "share_percent", cfg.fed.share_percent);
    read(f, "quasi_epochs", cfg.fed.quasi_epochs);
    read(f, "disseminate_cluster", cfg.fed.disseminate_cluster);
    read(f, "test_weeks", cfg.fed.test_weeks);
  }

  if (j.contains("data")) {
    const json& d = j.at("data");
    check_known_keys(d, {"synthetic", "traffic_csv", "geometry_csv", "step"}, origin + ".data");
    bool has_synth = d.contains("synthetic");
    bool has_csv = d.contains("traffic_csv") || d.contains("geometry_csv");
    if (has_synth && has_csv)
      throw std::invalid_argument(origin + ": config must name exactly one data source");
    if (has_csv) {
      if (!d.contains("traffic_csv") || !d.contains("geometry_csv"))
        throw std::invalid_argument(origin + ": CSV source needs traffic_csv and geometry_csv");
      cfg.data.kind = DataSourceKind::Csv;
      cfg.data.traffic_csv = d.at("traffic_csv").get<std::string>();
      cfg.data.geometry_csv = d.at("geometry_csv").get<std::string>();
      read(d, "step", cfg.data.csv_step);
    } else if (has_synth) {
      const json& s = d.at("synthetic");
      check_known_keys(s, {"stations", "archetypes", "weeks", "noise", "scale_min", "scale_max"},
                       origin + ".data.synthetic");
      cfg.data.kind = DataSourceKind::Synthetic;
      read(s, "stations", cfg.data.synthetic.stations);
      read(s, "archetypes", cfg.data.synthetic.archetypes);
      read(s, "weeks", cfg.data.synthetic.weeks);
      read(s, "noise", cfg.data.synthetic.noise);
      read(s, "scale_min", cfg.data.synthetic.scale_min);
      read(s, "scale_max", cfg.data.synthetic.scale_max);
    }
  }

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    check_known_keys(s, {"rho", "c", "share_percent"}, origin + ".sweep");
    if (s.contains("rho")) cfg.sweep.rho = s.at("rho").get<std::vector<double>>();
    if (s.contains("c")) cfg.sweep.c = s.at("c").get<std::vector<int>>();
    if (s.contains("share_percent"))
      cfg.sweep.share_percent = s.at("share_percent").get<std::vector<double>>();
  }

  cfg.fed.seed = seed;
  cfg.data.synthetic.seed = derive_seed(seed, "synthetic");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::vector<TrafficSeries> load_series(const DataSource& source) {
  if (source.kind == DataSourceKind::Synthetic) return generate_synthetic(source.synthetic).series;
  IngestSchema schema;
  schema.geometry_path = source.geometry_csv;
  schema.step = source.csv_step;
  std::vector<TrafficSeries> raw = ingest_csv(source.traffic_csv, schema);
  std::vector<TrafficSeries> hourly;
  hourly.reserve(raw.size());
  for (const TrafficSeries& s : raw) hourly.push_back(resample_hourly(s));
  return hourly;
}

std::vector<TrafficSeries> select_service(const std::vector<TrafficSeries>& all, Service service) {
  std::vector<TrafficSeries> out;
  for (const TrafficSeries& s : all)
    if (s.service == service) out.push_back(s);
  return out;
}

}  // namespace fedda
