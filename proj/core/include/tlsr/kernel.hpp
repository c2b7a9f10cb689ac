#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tlsr::degradation {

enum class KernelFamily { IsotropicGaussian, AnisotropicGaussian, Delta };

std::string to_string(KernelFamily f);
KernelFamily parse_kernel_family(const std::string& s);

inline constexpr int kDefaultKernelSize = 21;
// Stand-in for sigma = 0 (the blur-free primary).
inline constexpr double kBlurFreeSigma = 1e-6;

/// Normalised w x w blur kernel (w odd), row-major, centre at (w/2, w/2).
///
/// `params` holds {sigma} for isotropic kernels, {sigma_u, sigma_v, theta}
/// for anisotropic ones and is empty for the delta kernel.
struct Kernel {
  int size = 1;
  KernelFamily family = KernelFamily::Delta;
  std::vector<double> params;
  std::vector<double> values;

  int radius() const { return size / 2; }
  // Offsets (di, dj) from the centre, each in [-radius, radius].
  double at(int di, int dj) const { return values[static_cast<std::size_t>(di + radius()) * size + dj + radius()]; }
};

Kernel delta_kernel(int size = kDefaultKernelSize);
Kernel gaussian_kernel(double sigma, int size = kDefaultKernelSize);
Kernel anisotropic_kernel(double sigma_u, double sigma_v, double theta, int size = kDefaultKernelSize);

/// Transition state between two isotropic primaries.
///
/// Combines the primaries elementwise as
///   B0^(s0^2 / 2 st^2) * B1^(s1^2 / 2 st^2),   st = (1 - tau) s0 + tau s1,
/// evaluated on the log-density so tiny sigmas do not underflow, then
/// normalised. sigma0 == 0 is the blur-free primary (kBlurFreeSigma).
Kernel transition_kernel(double sigma0, double sigma1, double tau, int size = kDefaultKernelSize);

/// E[r^2] of the kernel viewed as a distribution over grid offsets.
double second_moment(const Kernel& k);
double max_abs_diff(const Kernel& a, const Kernel& b);

/// Plain-text form: header "w family params..." then w rows of w values.
void write_kernel_text(std::ostream& os, const Kernel& k);
Kernel read_kernel_text(std::istream& is);

}  // namespace tlsr::degradation
