#pragma once

#include <span>
#include <vector>

namespace fedda {

double mse(std::span<const double> pred, std::span<const double> truth);
double mae(std::span<const double> pred, std::span<const double> truth);

// 1 - SS_res / SS_tot. Throws on constant truth.
double r2(std::span<const double> pred, std::span<const double> truth);

// Fraction of |pred - truth| <= threshold, per threshold.
std::vector<double> error_cdf(std::span<const double> pred, std::span<const double> truth,
                              std::span<const double> thresholds);

}  // namespace fedda
