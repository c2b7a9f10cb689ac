#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "tlsr/kernel.hpp"

using namespace tlsr::degradation;

namespace {

// exp(-r^2 / 2 s^2) sampled on the integer grid, normalised.
std::vector<double> direct_gaussian(double sigma, int size) {
  const int r = size / 2;
  std::vector<double> v;
  double sum = 0.0;
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j) {
      v.push_back(std::exp(-(i * i + j * j) / (2.0 * sigma * sigma)));
      sum += v.back();
    }
  for (auto& x : v) x /= sum;
  return v;
}

double sum_of(const Kernel& k) {
  double s = 0.0;
  for (double v : k.values) s += v;
  return s;
}

}  // namespace

TEST(TransitionKernel, MatchesDirectGaussianOnGrid) {
  for (auto [s0, s1] : {std::pair{0.2, 2.0}, {0.5, 4.0}, {1.0, 3.0}})
    for (int t = 0; t <= 10; ++t) {
      const double tau = t / 10.0;
      const Kernel k = transition_kernel(s0, s1, tau, 21);
      const auto ref = direct_gaussian((1.0 - tau) * s0 + tau * s1, 21);
      double dev = 0.0;
      for (std::size_t i = 0; i < ref.size(); ++i) dev = std::max(dev, std::abs(k.values[i] - ref[i]));
      EXPECT_LT(dev, 1e-6) << s0 << "," << s1 << " tau " << tau;
      EXPECT_NEAR(sum_of(k), 1.0, 1e-12);
    }
}

TEST(TransitionKernel, BlurFreePrimaryEndpointIsDelta) {
  const Kernel k = transition_kernel(0.0, 2.0, 0.0, 21);
  EXPECT_NEAR(k.at(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(k.at(0, 1), 0.0, 1e-12);
  const Kernel mid = transition_kernel(0.0, 2.0, 0.5, 21);
  const auto ref = direct_gaussian(1.0, 21);
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(mid.values[i], ref[i], 1e-6);
  EXPECT_THROW(transition_kernel(0.5, 1.0, 1.5, 21), std::invalid_argument);
}

TEST(GaussianKernel, NormalisedSymmetricAndWidening) {
  const Kernel a = gaussian_kernel(0.8, 21);
  const Kernel b = gaussian_kernel(2.0, 21);
  EXPECT_NEAR(sum_of(a), 1.0, 1e-12);
  EXPECT_EQ(a.at(3, -2), a.at(-2, 3));
  EXPECT_EQ(a.at(3, -2), a.at(-3, 2));
  EXPECT_LT(second_moment(a), second_moment(b));
  // E[r^2] of a well-contained 2-D Gaussian is 2 s^2.
  EXPECT_NEAR(second_moment(b), 2.0 * 4.0, 1e-3);
  EXPECT_THROW(gaussian_kernel(1.0, 20), std::invalid_argument);
  EXPECT_THROW(gaussian_kernel(-1.0, 21), std::invalid_argument);
}

TEST(AnisotropicKernel, RotatesWithTheta) {
  const Kernel k0 = anisotropic_kernel(1.3, 3.25, 0.0, 21);
  const Kernel k90 = anisotropic_kernel(1.3, 3.25, std::numbers::pi / 2.0, 21);
  EXPECT_NEAR(sum_of(k0), 1.0, 1e-12);
  for (int i = -10; i <= 10; ++i)
    for (int j = -10; j <= 10; ++j) EXPECT_NEAR(k0.at(i, j), k90.at(j, i), 1e-15);
  // Equal sigmas collapse to the isotropic kernel at any angle.
  const Kernel iso = anisotropic_kernel(1.5, 1.5, 0.7, 21);
  EXPECT_LT(max_abs_diff(iso, gaussian_kernel(1.5, 21)), 1e-15);
}

TEST(DeltaKernel, SingleUnitTap) {
  const Kernel d = delta_kernel(5);
  EXPECT_EQ(sum_of(d), 1.0);
  EXPECT_EQ(d.at(0, 0), 1.0);
  EXPECT_EQ(d.family, KernelFamily::Delta);
}

TEST(KernelText, RoundTripIsExact) {
  for (const Kernel& k : {gaussian_kernel(1.7, 21), anisotropic_kernel(1.3, 3.25, 0.4, 15), delta_kernel(3)}) {
    std::stringstream ss;
    write_kernel_text(ss, k);
    const Kernel back = read_kernel_text(ss);
    EXPECT_EQ(back.size, k.size);
    EXPECT_EQ(back.family, k.family);
    EXPECT_EQ(back.params, k.params);
    EXPECT_EQ(back.values, k.values);
  }
}

TEST(KernelText, MalformedInputIsRejected) {
  std::stringstream truncated("3 delta\n0 0 0\n0 1 0\n");
  EXPECT_THROW(read_kernel_text(truncated), std::exception);
  std::stringstream bad_family("3 box\n0 0 0\n0 1 0\n0 0 0\n");
  EXPECT_THROW(read_kernel_text(bad_family), std::exception);
}
