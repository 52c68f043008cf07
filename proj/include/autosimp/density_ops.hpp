#pragma once

#include <span>
#include <vector>

#include "autosimp/mesh.hpp"

namespace autosimp {

/// Cone-weighted density filter, w_ej = max(0, r_min - d_ej) with d_ej the centroid
/// distance in element units. Neighborhoods are built once per instance.
class DensityFilter {
public:
  DensityFilter(const Mesh& mesh, double r_min);

  std::vector<double> apply(std::span<const double> rho) const;
  /// Chain rule through the filter: returns d/d(rho_j) given d/d(filtered_e).
  std::vector<double> backprop(std::span<const double> grad_filtered) const;

  double radius() const { return r_min_; }
  std::size_t num_weights() const { return cols_.size(); }

private:
  double r_min_;
  std::vector<int> row_start_;
  std::vector<int> cols_;
  std::vector<double> weights_;
  std::vector<double> row_sum_;
};

inline constexpr double kHeavisideThreshold = 0.5;

/// Smoothed Heaviside with threshold 0.5, normalized so that H(0) = 0 and H(1) = 1.
double heaviside(double x, double beta);
double heaviside_derivative(double x, double beta);
std::vector<double> heaviside(std::span<const double> x, double beta);

/// 4 * mean(rho * (1 - rho)); 0 for binary fields, 1 for a uniform 0.5 field.
double grayness(std::span<const double> rho);
double mean(std::span<const double> values);

} // namespace autosimp
