#include "fedda/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "fedda/config.hpp"
#include "fedda/federation.hpp"
#include "fedda/report.hpp"
#include "fedda/rng.hpp"

namespace fedda {

namespace {

namespace fs = std::filesystem;

// Shortest representation that parses back to the same double.
std::string fmt_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

struct CliOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> strategy;
  std::optional<std::string> service;
};

ExperimentConfig resolve_config(const CliOverrides& o) {
  ExperimentConfig cfg = o.config_path.empty() ? default_config() : load_config(o.config_path);
  if (o.seed) {
    cfg.fed.seed = *o.seed;
    cfg.data.synthetic.seed = derive_seed(*o.seed, "synthetic");
  }
  if (o.out) cfg.out_dir = *o.out;
  if (o.strategy) cfg.fed.strategy = strategy_from_string(*o.strategy);
  if (o.service) cfg.service = service_from_string(*o.service);
  return cfg;
}

void write_assignment(const fs::path& path, const std::vector<ClientData>& clients,
                      const ClusterAssignment& assignment) {
  auto out = open_out(path);
  out << "station_id,cluster\n";
  for (std::size_t i = 0; i < clients.size(); ++i)
    out << clients[i].station_id << "," << assignment.labels[i] << "\n";
}

void write_errors(const fs::path& path,
                  const std::vector<std::pair<std::string, std::vector<double>>>& by_strategy) {
  auto out = open_out(path);
  out << "strategy,abs_error\n";
  for (const auto& [strategy, errors] : by_strategy)
    for (double e : errors) out << strategy << "," << fmt_double(e) << "\n";
}

int cmd_generate(const ExperimentConfig& cfg) {
  if (cfg.data.kind != DataSourceKind::Synthetic)
    throw std::invalid_argument("generate requires a synthetic data source");
  SyntheticData data = generate_synthetic(cfg.data.synthetic);
  fs::create_directories(cfg.out_dir);

  auto traffic = open_out(fs::path(cfg.out_dir) / "traffic.csv");
  traffic << "station_id,timestamp,sms,call,internet\n";
  int stations = cfg.data.synthetic.stations;
  for (int k = 0; k < stations; ++k) {
    const TrafficSeries& sms = data.series[3 * k];
    const TrafficSeries& call = data.series[3 * k + 1];
    const TrafficSeries& internet = data.series[3 * k + 2];
    for (std::size_t t = 0; t < sms.values.size(); ++t) {
      std::int64_t ts_ms = (sms.start_time + static_cast<std::int64_t>(t) * sms.step) * 1000;
      traffic << sms.station_id << "," << ts_ms << "," << fmt_double(sms.values[t]) << ","
              << fmt_double(call.values[t]) << "," << fmt_double(internet.values[t]) << "\n";
    }
  }

  auto geometry = open_out(fs::path(cfg.out_dir) / "geometry.csv");
  geometry << "station_id,lon,lat\n";
  for (int k = 0; k < stations; ++k) {
    const TrafficSeries& s = data.series[3 * k];
    geometry << s.station_id << "," << fmt_double(s.location.lon) << ","
             << fmt_double(s.location.lat) << "\n";
  }

  auto labels = open_out(fs::path(cfg.out_dir) / "archetypes.csv");
  labels << "station_id,archetype\n";
  for (int k = 0; k < stations; ++k) labels << k << "," << data.archetype_labels[k] << "\n";

  std::cout << "wrote " << stations << " stations x " << cfg.data.synthetic.weeks << " weeks to "
            << cfg.out_dir << "\n";
  return 0;
}

int cmd_cluster(const ExperimentConfig& cfg) {
  std::vector<TrafficSeries> series = select_service(load_series(cfg.data), cfg.service);
  std::vector<ClientData> clients = prepare_clients(series, cfg.fed.window, cfg.fed.test_weeks);

  std::vector<AugmentedSeries> augmented;
  std::vector<GeoPoint> locations;
  for (const ClientData& c : clients) {
    augmented.push_back(c.augmented);
    locations.push_back(c.location);
  }
  ClusteringConfig ccfg = cfg.fed.clustering;
  ccfg.c = std::min<int>(ccfg.c, static_cast<int>(clients.size()));
  ccfg.seed = derive_seed(cfg.fed.seed, "cluster");
  ClusterAssignment assignment = dual_cluster(augmented, locations, ccfg);

  fs::create_directories(cfg.out_dir);
  write_assignment(fs::path(cfg.out_dir) / "assignment.csv", clients, assignment);
  std::cout << "clustered " << clients.size() << " stations into " << assignment.effective_c
            << (assignment.converged ? " clusters (converged)\n" : " clusters (not converged)\n");
  return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
  std::vector<TrafficSeries> series = select_service(load_series(cfg.data), cfg.service);
  ExperimentResult result = run_experiment_full(series, cfg.fed);

  fs::create_directories(cfg.out_dir);
  persist_report((fs::path(cfg.out_dir) / "rounds.jsonl").string(), result.reports);
  write_errors(fs::path(cfg.out_dir) / "errors.csv",
               {{to_string(cfg.fed.strategy), result.final_abs_errors}});
  if (cfg.fed.strategy == Strategy::FedDA) {
    std::vector<ClientData> clients = prepare_clients(series, cfg.fed.window, cfg.fed.test_weeks);
    write_assignment(fs::path(cfg.out_dir) / "assignment.csv", clients,
                     result.final_state.assignment);
  }
  if (!result.reports.empty()) {
    const RoundReport& last = result.reports.back();
    std::cout << to_string(cfg.fed.strategy) << " round " << last.round
              << ": mse=" << fmt_double(last.test_mse) << " mae=" << fmt_double(last.test_mae)
              << " r2=" << fmt_double(last.test_r2) << "\n";
  }
  return 0;
}

int cmd_compare(const ExperimentConfig& cfg) {
  std::vector<TrafficSeries> series = select_service(load_series(cfg.data), cfg.service);

  std::vector<RoundReport> merged;
  std::vector<std::pair<std::string, std::vector<double>>> errors;
  std::optional<ExperimentResult> fedda_result;
  for (Strategy s : {Strategy::FedAvg, Strategy::FedAtt, Strategy::FedDA}) {
    FederationConfig fcfg = cfg.fed;
    fcfg.strategy = s;
    ExperimentResult r = run_experiment_full(series, fcfg);
    merged.insert(merged.end(), r.reports.begin(), r.reports.end());
    errors.emplace_back(to_string(s), r.final_abs_errors);
    if (s == Strategy::FedDA) fedda_result = std::move(r);
  }

  fs::create_directories(cfg.out_dir);
  persist_report((fs::path(cfg.out_dir) / "rounds.jsonl").string(), merged);
  write_errors(fs::path(cfg.out_dir) / "errors.csv", errors);
  if (fedda_result) {
    std::vector<ClientData> clients = prepare_clients(series, cfg.fed.window, cfg.fed.test_weeks);
    write_assignment(fs::path(cfg.out_dir) / "assignment.csv", clients,
                     fedda_result->final_state.assignment);
  }
  std::cout << "compared 3 strategies over " << cfg.fed.rounds << " rounds -> " << cfg.out_dir
            << "\n";
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg) {
  std::vector<TrafficSeries> series = select_service(load_series(cfg.data), cfg.service);

  std::vector<double> rhos = cfg.sweep.rho.empty() ? std::vector<double>{cfg.fed.agg.rho}
                                                   : cfg.sweep.rho;
  std::vector<int> cs = cfg.sweep.c.empty() ? std::vector<int>{cfg.fed.clustering.c} : cfg.sweep.c;
  std::vector<double> shares = cfg.sweep.share_percent.empty()
                                   ? std::vector<double>{cfg.fed.share_percent}
                                   : cfg.sweep.share_percent;

  fs::create_directories(cfg.out_dir);
  auto out = open_out(fs::path(cfg.out_dir) / "sweep.csv");
  out << "rho,c,share_percent,service,test_mse,test_mae,test_r2\n";
  for (double rho : rhos)
    for (int c : cs)
      for (double share : shares) {
        FederationConfig fcfg = cfg.fed;
        fcfg.strategy = Strategy::FedDA;
        fcfg.agg.rho = rho;
        fcfg.clustering.c = c;
        fcfg.share_percent = share;
        std::vector<RoundReport> reports = run_experiment(series, fcfg);
        if (reports.empty()) throw std::runtime_error("sweep: zero-round experiment");
        const RoundReport& last = reports.back();
        out << fmt_double(rho) << "," << c << "," << fmt_double(share) << "," << last.service
            << "," << fmt_double(last.test_mse) << "," << fmt_double(last.test_mae) << ","
            << fmt_double(last.test_r2) << "\n";
      }
  std::cout << "swept " << rhos.size() * cs.size() * shares.size() << " configurations -> "
            << cfg.out_dir << "/sweep.csv\n";
  return 0;
}

int cmd_export_plots(const ExperimentConfig& cfg) {
  fs::path dir(cfg.out_dir);
  std::vector<RoundReport> reports = load_report((dir / "rounds.jsonl").string());

  auto acc = open_out(dir / "accuracy.csv");
  acc << "round,strategy,r2\n";
  for (const RoundReport& r : reports)
    acc << r.round << "," << r.strategy << "," << fmt_double(r.test_r2) << "\n";

  // CDF of the configured strategy's final-model errors.
  std::ifstream err(dir / "errors.csv");
  if (!err) throw std::runtime_error("cannot read '" + (dir / "errors.csv").string() + "'");
  std::string wanted = to_string(cfg.fed.strategy);
  std::vector<double> abs_errors;
  std::string line;
  std::getline(err, line);  // header
  while (std::getline(err, line)) {
    auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    if (line.substr(0, comma) != wanted) continue;
    abs_errors.push_back(std::stod(line.substr(comma + 1)));
  }
  if (abs_errors.empty())
    throw std::runtime_error("no '" + wanted + "' errors in errors.csv; pass --strategy");

  auto cdf = open_out(dir / "cdf.csv");
  cdf << "threshold,fraction\n";
  for (int i = 0; i <= 30; ++i) {
    double thr = 0.1 * i;
    std::size_t hits = 0;
    for (double e : abs_errors)
      if (e <= thr) ++hits;
    cdf << fmt_double(thr) << "," << fmt_double(static_cast<double>(hits) / abs_errors.size())
        << "\n";
  }
  std::cout << "wrote accuracy.csv and cdf.csv to " << cfg.out_dir << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Federated wireless traffic prediction simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  CliOverrides o;
  app.add_option("--config", o.config_path, "JSON experiment config");
  app.add_option("--seed", o.seed, "root seed override");
  app.add_option("--out", o.out, "output directory override");
  app.add_option("--strategy", o.strategy, "fedavg | fedatt | fedda");
  app.add_option("--service", o.service, "sms | call | internet");

  auto* generate = app.add_subcommand("generate", "write synthetic traffic/geometry CSVs");
  auto* cluster = app.add_subcommand("cluster", "run dual clustering, write assignment.csv");
  auto* train = app.add_subcommand("train", "run one strategy, write round reports");
  auto* compare = app.add_subcommand("compare", "run all strategies on identical seeds");
  auto* sweep = app.add_subcommand("sweep", "grid search over rho / C / share percent");
  auto* export_plots = app.add_subcommand("export-plots", "derive accuracy.csv and cdf.csv");

  std::vector<const char*> argv;
  argv.push_back("fedda");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    ExperimentConfig cfg = resolve_config(o);
    if (generate->parsed()) return cmd_generate(cfg);
    if (cluster->parsed()) return cmd_cluster(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (compare->parsed()) return cmd_compare(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg);
    if (export_plots->parsed()) return cmd_export_plots(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace fedda
