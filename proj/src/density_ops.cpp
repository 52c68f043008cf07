#include "autosimp/density_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "autosimp/errors.hpp"

namespace autosimp {

DensityFilter::DensityFilter(const Mesh& mesh, double r_min) : r_min_(r_min) {
  if (!(r_min > 0.0)) throw Error(ErrorCode::invalid_argument, "filter radius must be positive");
  const int reach = std::max(0, static_cast<int>(std::ceil(r_min)) - 1);
  const int reach_z = mesh.solid ? reach : 0;
  const int n = mesh.num_elements();
  row_start_.reserve(static_cast<std::size_t>(n) + 1);
  row_start_.push_back(0);
  for (int e = 0; e < n; ++e) {
    const auto [ix, iy, iz] = mesh.element_coords(e);
    double sum = 0.0;
    for (int kz = std::max(0, iz - reach_z); kz <= std::min(mesh.nz - 1, iz + reach_z); ++kz)
      for (int ky = std::max(0, iy - reach); ky <= std::min(mesh.ny - 1, iy + reach); ++ky)
        for (int kx = std::max(0, ix - reach); kx <= std::min(mesh.nx - 1, ix + reach); ++kx) {
          const double dx = kx - ix, dy = ky - iy, dz = kz - iz;
          const double w = r_min - std::sqrt(dx * dx + dy * dy + dz * dz);
          if (w <= 0.0) continue;
          cols_.push_back(mesh.element_index(kx, ky, kz));
          weights_.push_back(w);
          sum += w;
        }
    row_sum_.push_back(sum);
    row_start_.push_back(static_cast<int>(cols_.size()));
  }
}

std::vector<double> DensityFilter::apply(std::span<const double> rho) const {
  std::vector<double> out(row_sum_.size());
  for (std::size_t e = 0; e < out.size(); ++e) {
    double acc = 0.0;
    for (int k = row_start_[e]; k < row_start_[e + 1]; ++k) acc += weights_[k] * rho[cols_[k]];
    out[e] = acc / row_sum_[e];
  }
  return out;
}

std::vector<double> DensityFilter::backprop(std::span<const double> grad) const {
  std::vector<double> out(row_sum_.size(), 0.0);
  for (std::size_t e = 0; e < out.size(); ++e) {
    const double g = grad[e] / row_sum_[e];
    for (int k = row_start_[e]; k < row_start_[e + 1]; ++k) out[cols_[k]] += weights_[k] * g;
  }
  return out;
}

double heaviside(double x, double beta) {
  const double eta = kHeavisideThreshold;
  const double a = std::tanh(beta * eta);
  return (a + std::tanh(beta * (x - eta))) / (a + std::tanh(beta * (1.0 - eta)));
}

double heaviside_derivative(double x, double beta) {
  const double eta = kHeavisideThreshold;
  const double t = std::tanh(beta * (x - eta));
  return beta * (1.0 - t * t) / (std::tanh(beta * eta) + std::tanh(beta * (1.0 - eta)));
}

std::vector<double> heaviside(std::span<const double> x, double beta) {
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [beta](double v) { return heaviside(v, beta); });
  return out;
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double grayness(std::span<const double> rho) {
  if (rho.empty()) return 0.0;
  double acc = 0.0;
  for (double r : rho) acc += r * (1.0 - r);
  return 4.0 * acc / static_cast<double>(rho.size());
}

} // namespace autosimp
