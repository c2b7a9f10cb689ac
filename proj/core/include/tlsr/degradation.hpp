#pragma once

#include <map>
#include <optional>
#include <string>

#include "tlsr/image.hpp"
#include "tlsr/kernel.hpp"
#include "tlsr/rng.hpp"

namespace tlsr::degradation {

using imaging::Image;

/// Degree of transitionality, always in [0, 1].
class DoT {
 public:
  constexpr DoT() = default;
  explicit DoT(double value);
  constexpr double value() const { return value_; }

 private:
  double value_ = 0.0;
};

/// Which single degradation parameter varies (the transitional family).
enum class Family { Additive, Convolutive, AnisotropicAngle };

/// CLI names: noise | blur | angle.
std::string to_string(Family f);
Family parse_family(const std::string& s);

struct FamilyBounds {
  double min = 0.0;
  double max = 0.0;
};

/// Additive white Gaussian noise; `level` is the std-dev in 8-bit units.
struct NoiseField {
  int height = 0;
  int width = 0;
  int channels = 0;
  double level = 0.0;
  std::vector<double> values;  // HWC, already divided by 255
};

/// x = (y conv kernel) downsampled by `scale` + noise.
///
/// Exactly one parameter is transitional: the noise level (additive), the
/// isotropic sigma (convolutive) or the rotation angle (anisotropic-angle).
struct DegradationSpec {
  int scale = 1;
  Kernel kernel = delta_kernel(1);
  double noise_level = 0.0;
  Family family = Family::Additive;
  FamilyBounds bounds{0.0, 0.0};

  double active_parameter() const;
  void validate() const;
};

/// Recipe for drawing specs of one family. The additive family may carry a
/// fixed background blur (fixed_sigma > 0); the angle family fixes the two
/// principal sigmas and varies theta.
struct FamilySetup {
  Family family = Family::Additive;
  int scale = 2;
  FamilyBounds bounds{0.0, 30.0};
  int kernel_size = kDefaultKernelSize;
  double fixed_sigma = 0.0;
  double sigma_u = 1.3;
  double sigma_v = 3.25;

  DegradationSpec at(double parameter) const;
  /// Canonical orientation: tau = 0 is the weakest degradation.
  DegradationSpec at_tau(double tau) const;
  double parameter_for(double tau) const { return bounds.min + tau * (bounds.max - bounds.min); }
  void validate() const;
};

FamilySetup default_setup(Family family, int scale);

/// Additive transition in its reversed form: tau * x0 + (1 - tau) * x1 (tau weights state 0).
Image additive_transition(const Image& x0, const Image& x1, DoT tau);
/// Converts a canonical DoT (tau = 1 strongest noise) to the weight on the clean state.
inline DoT additive_literal_tau(DoT canonical) { return DoT(1.0 - canonical.value()); }

NoiseField synthesize_noise(int height, int width, int channels, double level, Rng& rng);

/// True 2-D convolution with reflect-101 padding, per channel.
Image blur(const Image& img, const Kernel& kernel);

Image degrade(const Image& hr, const DegradationSpec& spec, Rng& rng);

/// Canonical linear map of the active parameter onto [0, 1].
DoT dot_ground_truth(const DegradationSpec& spec);

/// An HR patch, its degraded LR counterpart and the degradation that links them.
struct TrainingPair {
  Image lr;
  Image hr;
  DegradationSpec spec;
  DoT tau;
};

/// Random (lr_size * scale)^2 HR crop with a random dihedral transform,
/// degraded at a parameter drawn uniformly from the family bounds. Passing
/// `tau` pins the degradation instead of drawing it.
TrainingPair sample_training_pair(const Image& hr, const FamilySetup& setup, int lr_size, Rng& rng,
                                  std::optional<double> tau = std::nullopt);

/// Flat string form used in checkpoint metadata; doubles keep 17 digits.
std::map<std::string, std::string> setup_to_meta(const FamilySetup& setup);
FamilySetup setup_from_meta(const std::map<std::string, std::string>& meta);

}  // namespace tlsr::degradation
