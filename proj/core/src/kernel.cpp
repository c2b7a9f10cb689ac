#include "tlsr/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "tlsr/errors.hpp"

namespace tlsr::degradation {

std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::IsotropicGaussian: return "isotropic-gaussian";
    case KernelFamily::AnisotropicGaussian: return "anisotropic-gaussian";
    case KernelFamily::Delta: return "delta";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(const std::string& s) {
  if (s == "isotropic-gaussian") return KernelFamily::IsotropicGaussian;
  if (s == "anisotropic-gaussian") return KernelFamily::AnisotropicGaussian;
  if (s == "delta") return KernelFamily::Delta;
  throw std::invalid_argument("unknown kernel family '" + s + "'");
}

namespace {

void check_size(int size) {
  if (size < 1 || size % 2 == 0) throw std::invalid_argument("kernel size must be odd and >= 1, got " + std::to_string(size));
}

// exp(log_values - max), normalised.
std::vector<double> normalise_log(std::vector<double> logv) {
  const double peak = *std::max_element(logv.begin(), logv.end());
  double sum = 0.0;
  for (auto& v : logv) {
    v = std::exp(v - peak);
    sum += v;
  }
  for (auto& v : logv) v /= sum;
  return logv;
}

}  // namespace

Kernel delta_kernel(int size) {
  check_size(size);
  Kernel k;
  k.size = size;
  k.family = KernelFamily::Delta;
  k.values.assign(static_cast<std::size_t>(size) * size, 0.0);
  k.values[static_cast<std::size_t>(size / 2) * size + size / 2] = 1.0;
  return k;
}

Kernel gaussian_kernel(double sigma, int size) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_kernel: sigma must be positive");
  check_size(size);
  const int r = size / 2;
  std::vector<double> logv;
  logv.reserve(static_cast<std::size_t>(size) * size);
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j) logv.push_back(-static_cast<double>(i * i + j * j) / (2.0 * sigma * sigma));
  Kernel k;
  k.size = size;
  k.family = KernelFamily::IsotropicGaussian;
  k.params = {sigma};
  k.values = normalise_log(std::move(logv));
  return k;
}

Kernel anisotropic_kernel(double sigma_u, double sigma_v, double theta, int size) {
  if (!(sigma_u > 0.0) || !(sigma_v > 0.0)) throw std::invalid_argument("anisotropic_kernel: sigmas must be positive");
  check_size(size);
  const int r = size / 2;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  std::vector<double> logv;
  logv.reserve(static_cast<std::size_t>(size) * size);
  // p = (x, y) = (column offset, row offset); R^T p gives the principal-axis coordinates.
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j) {
      const double u = c * j + s * i;
      const double v = -s * j + c * i;
      logv.push_back(-0.5 * (u * u / (sigma_u * sigma_u) + v * v / (sigma_v * sigma_v)));
    }
  Kernel k;
  k.size = size;
  k.family = KernelFamily::AnisotropicGaussian;
  k.params = {sigma_u, sigma_v, theta};
  k.values = normalise_log(std::move(logv));
  return k;
}

Kernel transition_kernel(double sigma0, double sigma1, double tau, int size) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("transition_kernel: tau must lie in [0, 1]");
  if (!(sigma0 >= 0.0) || !(sigma1 > sigma0)) throw std::invalid_argument("transition_kernel: need sigma1 > sigma0 >= 0");
  check_size(size);
  const double s0 = sigma0 == 0.0 ? kBlurFreeSigma : sigma0;
  const double s1 = sigma1;
  const double st = (1.0 - tau) * s0 + tau * s1;
  const double e0 = s0 * s0 / (2.0 * st * st);
  const double e1 = s1 * s1 / (2.0 * st * st);

  // log of the continuous 2-D densities; their constants fold into the normaliser.
  auto log_pdf = [](double sigma, double r2) {
    return -std::log(2.0 * std::numbers::pi * sigma * sigma) - r2 / (2.0 * sigma * sigma);
  };
  const int r = size / 2;
  std::vector<double> logv;
  logv.reserve(static_cast<std::size_t>(size) * size);
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j) {
      const double r2 = static_cast<double>(i * i + j * j);
      logv.push_back(e0 * log_pdf(s0, r2) + e1 * log_pdf(s1, r2));
    }
  Kernel k;
  k.size = size;
  k.family = KernelFamily::IsotropicGaussian;
  k.params = {st};
  k.values = normalise_log(std::move(logv));
  return k;
}

double second_moment(const Kernel& k) {
  const int r = k.radius();
  double m = 0.0;
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j) m += static_cast<double>(i * i + j * j) * k.at(i, j);
  return m;
}

double max_abs_diff(const Kernel& a, const Kernel& b) {
  if (a.size != b.size) throw std::invalid_argument("max_abs_diff: kernel size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

void write_kernel_text(std::ostream& os, const Kernel& k) {
  os << k.size << ' ' << to_string(k.family);
  os << std::setprecision(17);
  for (double p : k.params) os << ' ' << p;
  os << '\n';
  for (int i = 0; i < k.size; ++i) {
    for (int j = 0; j < k.size; ++j) {
      if (j) os << ' ';
      os << k.values[static_cast<std::size_t>(i) * k.size + j];
    }
    os << '\n';
  }
}

Kernel read_kernel_text(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw DataError("kernel text: missing header");
  std::istringstream hs(header);
  Kernel k;
  std::string family;
  if (!(hs >> k.size >> family)) throw DataError("kernel text: malformed header '" + header + "'");
  if (k.size < 1 || k.size % 2 == 0) throw DataError("kernel text: size must be odd");
  k.family = parse_kernel_family(family);
  double p;
  while (hs >> p) k.params.push_back(p);
  k.values.resize(static_cast<std::size_t>(k.size) * k.size);
  for (auto& v : k.values)
    if (!(is >> v)) throw DataError("kernel text: truncated values");
  return k;
}

}  // namespace tlsr::degradation
