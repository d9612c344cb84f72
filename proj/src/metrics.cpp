#include "fedda/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fedda {

namespace {

void check_lengths(std::span<const double> pred, std::span<const double> truth, const char* op) {
  if (pred.size() != truth.size())
    throw std::invalid_argument(std::string(op) + ": length mismatch (" +
                                std::to_string(pred.size()) + " vs " +
                                std::to_string(truth.size()) + ")");
  if (pred.empty()) throw std::invalid_argument(std::string(op) + ": empty input");
}

}  // namespace

double mse(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double e = pred[i] - truth[i];
    s += e * e;
  }
  return s / static_cast<double>(pred.size());
}

double mae(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

double r2(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth, "r2");
  double mean = 0.0;
  for (double t : truth) mean += t;
  mean /= static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ss_res += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot == 0.0) throw std::invalid_argument("r2: constant truth");
  return 1.0 - ss_res / ss_tot;
}

std::vector<double> error_cdf(std::span<const double> pred, std::span<const double> truth,
                              std::span<const double> thresholds) {
  check_lengths(pred, truth, "error_cdf");
  std::vector<double> out;
  out.reserve(thresholds.size());
  for (double thr : thresholds) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
      if (std::abs(pred[i] - truth[i]) <= thr) ++hits;
    out.push_back(static_cast<double>(hits) / static_cast<double>(pred.size()));
  }
  return out;
}

}  // namespace fedda
