#include "fedda/report.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fedda {

void persist_report(const std::string& path, const std::vector<RoundReport>& reports) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report file '" + path + "'");
  for (const RoundReport& r : reports) {
    nlohmann::ordered_json j;
    j["round"] = r.round;
    j["strategy"] = r.strategy;
    j["service"] = r.service;
    j["train_loss"] = r.train_loss;
    j["test_mse"] = r.test_mse;
    j["test_mae"] = r.test_mae;
    j["test_r2"] = r.test_r2;
    out << j.dump() << '\n';
  }
}

std::vector<RoundReport> load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read report file '" + path + "'");
  std::vector<RoundReport> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      RoundReport r;
      r.round = j.at("round").get<int>();
      r.strategy = j.at("strategy").get<std::string>();
      r.service = j.at("service").get<std::string>();
      r.train_loss = j.at("train_loss").get<double>();
      r.test_mse = j.at("test_mse").get<double>();
      r.test_mae = j.at("test_mae").get<double>();
      r.test_r2 = j.at("test_r2").get<double>();
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed report line: " +
                               e.what());
    }
  }
  return out;
}

}  // namespace fedda
