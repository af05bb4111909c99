#include "esefn/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "esefn/error.hpp"

namespace esefn {

void FeatureSet::validate() const {
  if (classes < 2) throw InputError("dataset declares " + std::to_string(classes) + " classes");
  for (const auto& s : samples) {
    const std::string id = std::to_string(s.sample_id);
    if (s.label >= classes) {
      throw InputError("sample " + id + " has label " + std::to_string(s.label) + " >= " +
                       std::to_string(classes) + " classes");
    }
    if (s.rgb.size() != rgb_dim || s.skeleton.size() != skeleton_dim) {
      throw InputError("sample " + id + " has dims (" + std::to_string(s.rgb.size()) + ", " +
                       std::to_string(s.skeleton.size()) + "), dataset declares (" +
                       std::to_string(rgb_dim) + ", " + std::to_string(skeleton_dim) + ")");
    }
    for (const auto* v : {&s.rgb, &s.skeleton}) {
      for (double x : *v) {
        if (!std::isfinite(x)) throw InputError("sample " + id + " holds a non-finite value");
      }
    }
  }
}

double SynthSpec::prototype_scale() const { return std::max(1.0, 4.0 * noise_sigma); }

void SynthSpec::validate() const {
  if (factor_a < 2 || factor_b < 2) {
    throw InputError("synthetic spec: latent factor counts must be >= 2, got " +
                     std::to_string(factor_a) + " x " + std::to_string(factor_b));
  }
  if (rgb_dim < factor_a || skeleton_dim < factor_b) {
    throw InputError("synthetic spec: one-hot prototypes need rgb_dim >= A and skeleton_dim >= B");
  }
  if (!std::isfinite(noise_sigma) || noise_sigma < 0) {
    throw InputError("synthetic spec: noise_sigma must be finite and >= 0");
  }
  if (samples_per_class == 0) throw InputError("synthetic spec: samples_per_class must be >= 1");
}

std::vector<double> rgb_prototype(const SynthSpec& spec, std::size_t a) {
  std::vector<double> p(spec.rgb_dim, 0.0);
  p.at(a) = spec.prototype_scale();
  return p;
}

std::vector<double> skeleton_prototype(const SynthSpec& spec, std::size_t b) {
  std::vector<double> p(spec.skeleton_dim, 0.0);
  p.at(b) = spec.prototype_scale();
  return p;
}

FeatureSet generate_xor_pair(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  FeatureSet out;
  out.rgb_dim = spec.rgb_dim;
  out.skeleton_dim = spec.skeleton_dim;
  out.classes = spec.classes();
  out.samples.reserve(spec.classes() * spec.samples_per_class);
  for (std::size_t label = 0; label < spec.classes(); ++label) {
    const std::size_t a = label / spec.factor_b;
    const std::size_t b = label % spec.factor_b;
    for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
      MultiModalFeature s;
      s.label = static_cast<std::uint32_t>(label);
      s.rgb = rgb_prototype(spec, a);
      s.skeleton = skeleton_prototype(spec, b);
      for (double& x : s.rgb) x += spec.noise_sigma * noise(rng);
      for (double& x : s.skeleton) x += spec.noise_sigma * noise(rng);
      out.samples.push_back(std::move(s));
    }
  }
  std::shuffle(out.samples.begin(), out.samples.end(), rng);
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i].sample_id = static_cast<std::uint32_t>(i);
  }
  return out;
}

TrainTestSplit split_train_test(const FeatureSet& data, double test_fraction) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw InputError("test fraction must lie in [0, 1)");
  }
  data.validate();
  std::vector<std::size_t> per_class(data.classes, 0);
  for (const auto& s : data.samples) ++per_class[s.label];
  std::vector<std::size_t> train_quota(data.classes);
  for (std::size_t c = 0; c < data.classes; ++c) {
    const auto test_count =
        static_cast<std::size_t>(std::llround(static_cast<double>(per_class[c]) * test_fraction));
    train_quota[c] = per_class[c] - test_count;
  }

  TrainTestSplit split;
  for (FeatureSet* part : {&split.train, &split.test}) {
    part->rgb_dim = data.rgb_dim;
    part->skeleton_dim = data.skeleton_dim;
    part->classes = data.classes;
  }
  std::vector<std::size_t> seen(data.classes, 0);
  for (const auto& s : data.samples) {
    auto& dst = seen[s.label]++ < train_quota[s.label] ? split.train : split.test;
    dst.samples.push_back(s);
  }
  return split;
}

}  // namespace esefn
