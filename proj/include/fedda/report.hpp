#pragma once

#include <string>
#include <vector>

namespace fedda {

// One communication round's evaluation record.
struct RoundReport {
  int round = 0;
  std::string strategy;
  std::string service;
  double train_loss = 0.0;
  double test_mse = 0.0;
  double test_mae = 0.0;
  double test_r2 = 0.0;

  bool operator==(const RoundReport&) const = default;
};

// Line-delimited JSON with stable field order; doubles round-trip exactly.
void persist_report(const std::string& path, const std::vector<RoundReport>& reports);
std::vector<RoundReport> load_report(const std::string& path);

}  // namespace fedda
