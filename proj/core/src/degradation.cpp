#include "tlsr/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdio>
#include <stdexcept>

#include "tlsr/errors.hpp"

namespace tlsr::degradation {

DoT::DoT(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) throw std::invalid_argument("DoT must lie in [0, 1], got " + std::to_string(value));
}

std::string to_string(Family f) {
  switch (f) {
    case Family::Additive: return "noise";
    case Family::Convolutive: return "blur";
    case Family::AnisotropicAngle: return "angle";
  }
  return "unknown";
}

Family parse_family(const std::string& s) {
  if (s == "noise" || s == "additive") return Family::Additive;
  if (s == "blur" || s == "convolutive") return Family::Convolutive;
  if (s == "angle" || s == "anisotropic-angle") return Family::AnisotropicAngle;
  throw std::invalid_argument("unknown degradation family '" + s + "' (expected noise|blur|angle)");
}

double DegradationSpec::active_parameter() const {
  switch (family) {
    case Family::Additive: return noise_level;
    case Family::Convolutive:
      if (kernel.family == KernelFamily::Delta) return 0.0;
      if (kernel.family != KernelFamily::IsotropicGaussian) throw std::invalid_argument("convolutive spec needs an isotropic kernel");
      return kernel.params.at(0);
    case Family::AnisotropicAngle:
      if (kernel.family != KernelFamily::AnisotropicGaussian) throw std::invalid_argument("angle spec needs an anisotropic kernel");
      return kernel.params.at(2);
  }
  return 0.0;
}

namespace {
constexpr double kBoundSlack = 1e-9;
}

void DegradationSpec::validate() const {
  if (scale < 1) throw std::invalid_argument("DegradationSpec: scale must be >= 1");
  if (noise_level < 0.0) throw std::invalid_argument("DegradationSpec: negative noise level");
  if (bounds.max < bounds.min) throw std::invalid_argument("DegradationSpec: inverted family bounds");
  if (family != Family::Additive && noise_level != 0.0)
    throw std::invalid_argument("DegradationSpec: only one transitional family may be active (noise must be 0)");
  const double p = active_parameter();
  if (p < bounds.min - kBoundSlack || p > bounds.max + kBoundSlack)
    throw std::invalid_argument("DegradationSpec: parameter " + std::to_string(p) + " outside [" +
                                std::to_string(bounds.min) + ", " + std::to_string(bounds.max) + "]");
}

DegradationSpec FamilySetup::at(double parameter) const {
  DegradationSpec spec;
  spec.scale = scale;
  spec.family = family;
  spec.bounds = bounds;
  switch (family) {
    case Family::Additive:
      spec.kernel = fixed_sigma > 0.0 ? gaussian_kernel(fixed_sigma, kernel_size) : delta_kernel(kernel_size);
      spec.noise_level = parameter;
      break;
    case Family::Convolutive:
      spec.kernel = parameter > 0.0 ? gaussian_kernel(parameter, kernel_size) : delta_kernel(kernel_size);
      break;
    case Family::AnisotropicAngle:
      spec.kernel = anisotropic_kernel(sigma_u, sigma_v, parameter, kernel_size);
      break;
  }
  spec.validate();
  return spec;
}

DegradationSpec FamilySetup::at_tau(double tau) const {
  DoT checked(tau);
  return at(parameter_for(checked.value()));
}

void FamilySetup::validate() const {
  if (scale < 1) throw std::invalid_argument("FamilySetup: scale must be >= 1");
  if (bounds.max < bounds.min) throw std::invalid_argument("FamilySetup: inverted bounds");
  if (family == Family::Convolutive && bounds.min < 0.0) throw std::invalid_argument("FamilySetup: negative sigma bound");
  if (family == Family::Additive && bounds.min < 0.0) throw std::invalid_argument("FamilySetup: negative noise bound");
}

FamilySetup default_setup(Family family, int scale) {
  FamilySetup s;
  s.family = family;
  s.scale = scale;
  switch (family) {
    case Family::Additive: s.bounds = {0.0, 30.0}; break;
    case Family::Convolutive: s.bounds = scale >= 4 ? FamilyBounds{0.2, 4.0} : FamilyBounds{0.2, 2.0}; break;
    case Family::AnisotropicAngle: s.bounds = {0.0, std::numbers::pi / 2.0}; break;
  }
  return s;
}

Image additive_transition(const Image& x0, const Image& x1, DoT tau) {
  if (!x0.same_shape(x1)) throw std::invalid_argument("additive_transition: shape mismatch");
  const double t = tau.value();
  Image out = x0;
  if (t == 1.0) return out;
  if (t == 0.0) return x1;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = t * x0.data[i] + (1.0 - t) * x1.data[i];
  return out;
}

NoiseField synthesize_noise(int height, int width, int channels, double level, Rng& rng) {
  if (level < 0.0) throw std::invalid_argument("synthesize_noise: negative noise level");
  if (height < 0 || width < 0 || channels < 0) throw std::invalid_argument("synthesize_noise: negative dimension");
  NoiseField n{height, width, channels, level, {}};
  n.values.assign(static_cast<std::size_t>(height) * width * channels, 0.0);
  if (level == 0.0) return n;
  const double sd = level / 255.0;
  for (auto& v : n.values) v = rng.normal(0.0, sd);
  return n;
}

namespace {

int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - m;
}

}  // namespace

Image blur(const Image& img, const Kernel& kernel) {
  const int r = kernel.radius();
  if (kernel.size > img.height || kernel.size > img.width)
    throw std::invalid_argument("blur: kernel " + std::to_string(kernel.size) + " larger than image");
  Image out(img.height, img.width, img.channels);
  out.color_space = img.color_space;
  const int c = img.channels;
  std::vector<int> ry(img.height + 2 * r), rx(img.width + 2 * r);
  for (int i = 0; i < img.height + 2 * r; ++i) ry[i] = reflect101(i - r, img.height);
  for (int i = 0; i < img.width + 2 * r; ++i) rx[i] = reflect101(i - r, img.width);

  std::vector<double> acc(c);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      std::fill(acc.begin(), acc.end(), 0.0);
      // out(y, x) = sum_{di,dj} k(di, dj) * in(y - di, x - dj)
      for (int di = -r; di <= r; ++di) {
        const int sy = ry[y - di + r];
        for (int dj = -r; dj <= r; ++dj) {
          const double w = kernel.at(di, dj);
          if (w == 0.0) continue;
          const double* px = &img.data[(static_cast<std::size_t>(sy) * img.width + rx[x - dj + r]) * c];
          for (int ch = 0; ch < c; ++ch) acc[ch] += w * px[ch];
        }
      }
      for (int ch = 0; ch < c; ++ch) out.at(y, x, ch) = acc[ch];
    }
  return out;
}

Image degrade(const Image& hr, const DegradationSpec& spec, Rng& rng) {
  spec.validate();
  if (hr.height % spec.scale != 0 || hr.width % spec.scale != 0)
    throw std::invalid_argument("degrade: image " + std::to_string(hr.height) + "x" + std::to_string(hr.width) +
                                " not divisible by scale " + std::to_string(spec.scale));
  if (spec.kernel.family != KernelFamily::Delta && (spec.kernel.size > hr.height || spec.kernel.size > hr.width))
    throw std::invalid_argument("degrade: kernel larger than image");

  Image x = spec.kernel.family == KernelFamily::Delta ? hr : blur(hr, spec.kernel);
  if (spec.scale != 1) x = imaging::bicubic_resize(x, 1.0 / spec.scale, true);
  if (spec.noise_level > 0.0) {
    const NoiseField n = synthesize_noise(x.height, x.width, x.channels, spec.noise_level, rng);
    for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += n.values[i];
  }
  return x;
}

DoT dot_ground_truth(const DegradationSpec& spec) {
  spec.validate();
  const double p = spec.active_parameter();
  const double span = spec.bounds.max - spec.bounds.min;
  if (span <= 0.0) return DoT(0.0);
  return DoT(std::clamp((p - spec.bounds.min) / span, 0.0, 1.0));
}

TrainingPair sample_training_pair(const Image& hr, const FamilySetup& setup, int lr_size, Rng& rng,
                                  std::optional<double> tau) {
  const int hr_size = lr_size * setup.scale;
  if (lr_size < 1 || hr.height < hr_size || hr.width < hr_size)
    throw std::invalid_argument("sample_training_pair: image smaller than the requested patch");
  const imaging::PatchBox box{rng.uniform_int(0, hr.height - hr_size), rng.uniform_int(0, hr.width - hr_size),
                              hr_size, hr_size};
  TrainingPair pair;
  pair.hr = imaging::apply_dihedral(imaging::crop(hr, box), rng.uniform_int(0, 7));
  const double parameter =
      tau ? setup.parameter_for(DoT(*tau).value()) : rng.uniform(setup.bounds.min, setup.bounds.max);
  pair.spec = setup.at(parameter);
  pair.lr = degrade(pair.hr, pair.spec, rng);
  pair.tau = tau ? DoT(*tau) : dot_ground_truth(pair.spec);
  return pair;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double meta_double(const std::map<std::string, std::string>& meta, const std::string& key) {
  const auto it = meta.find(key);
  if (it == meta.end()) throw DataError("missing metadata key '" + key + "'");
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::logic_error&) {
    throw DataError("metadata key '" + key + "' is not a number: " + it->second);
  }
}

}  // namespace

std::map<std::string, std::string> setup_to_meta(const FamilySetup& setup) {
  return {
      {"family", to_string(setup.family)},
      {"scale", std::to_string(setup.scale)},
      {"bounds.min", format_double(setup.bounds.min)},
      {"bounds.max", format_double(setup.bounds.max)},
      {"kernel_size", std::to_string(setup.kernel_size)},
      {"fixed_sigma", format_double(setup.fixed_sigma)},
      {"sigma_u", format_double(setup.sigma_u)},
      {"sigma_v", format_double(setup.sigma_v)},
  };
}

FamilySetup setup_from_meta(const std::map<std::string, std::string>& meta) {
  const auto fam = meta.find("family");
  if (fam == meta.end()) throw DataError("missing metadata key 'family'");
  FamilySetup setup;
  try {
    setup.family = parse_family(fam->second);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  setup.scale = static_cast<int>(meta_double(meta, "scale"));
  setup.bounds = {meta_double(meta, "bounds.min"), meta_double(meta, "bounds.max")};
  setup.kernel_size = static_cast<int>(meta_double(meta, "kernel_size"));
  setup.fixed_sigma = meta_double(meta, "fixed_sigma");
  setup.sigma_u = meta_double(meta, "sigma_u");
  setup.sigma_v = meta_double(meta, "sigma_v");
  try {
    setup.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return setup;
}

}  // namespace tlsr::degradation
