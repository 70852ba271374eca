#include "ood/synth.hpp"

#include <cmath>
#include <vector>

#include "ood/error.hpp"
#include "ood/rng.hpp"

namespace ood {
namespace {

// Stream ids: clusters use their index, OOD draws use a fixed id far above
// any realistic cluster count.
constexpr std::uint64_t kOodStream = 0x8000000000000001ULL;

void validate(const MixtureSpec& s) {
  if (s.cluster_count == 0 || s.dim == 0 || s.samples_per_cluster == 0 || s.ood.samples == 0) {
    throw Error(ErrorCode::kInvalidArgument, "mixture counts must be at least 1");
  }
  if (!(s.center_scale > 0.0) || !(s.within_std >= 0.0) || !(s.ood.magnitude >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mixture scales must be positive");
  }
}

}  // namespace

std::string to_string(OodMode m) {
  switch (m) {
    case OodMode::kShifted: return "shifted";
    case OodMode::kInflated: return "inflated";
    case OodMode::kUniform: return "uniform";
  }
  return "shifted";
}

OodMode parse_ood_mode(const std::string& name) {
  if (name == "shifted") return OodMode::kShifted;
  if (name == "inflated") return OodMode::kInflated;
  if (name == "uniform") return OodMode::kUniform;
  throw Error(ErrorCode::kInvalidArgument, "unknown OOD mode '" + name + "'");
}

SyntheticData generate(const MixtureSpec& spec) {
  validate(spec);
  const std::size_t k = spec.cluster_count;
  const std::size_t d = spec.dim;
  const std::size_t per = spec.samples_per_cluster;
  const std::size_t hold = spec.holdout_per_cluster;

  Eigen::MatrixXd centers(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  std::vector<float> id(k * per * d);
  std::vector<float> holdout(k * hold * d);
  LabelVector labels(k * per);
  LabelVector holdout_labels(k * hold);

  for (std::size_t c = 0; c < k; ++c) {
    Rng rng = Rng::stream(spec.seed, c);
    const auto cc = static_cast<Eigen::Index>(c);
    for (std::size_t j = 0; j < d; ++j) {
      centers(cc, static_cast<Eigen::Index>(j)) = rng.uniform(-spec.center_scale, spec.center_scale);
    }
    const auto draw = [&](float* out) {
      for (std::size_t j = 0; j < d; ++j) {
        out[j] = static_cast<float>(centers(cc, static_cast<Eigen::Index>(j)) + spec.within_std * rng.normal());
      }
    };
    for (std::size_t s = 0; s < per; ++s) {
      draw(&id[(c * per + s) * d]);
      labels[c * per + s] = static_cast<std::uint32_t>(c);
    }
    for (std::size_t s = 0; s < hold; ++s) {
      draw(&holdout[(c * hold + s) * d]);
      holdout_labels[c * hold + s] = static_cast<std::uint32_t>(c);
    }
  }

  Rng rng = Rng::stream(spec.seed, kOodStream);
  Eigen::VectorXd direction(static_cast<Eigen::Index>(d));
  do {
    for (auto& v : direction) v = rng.normal();
  } while (direction.norm() < 1e-12);
  direction.normalize();

  const std::size_t m = spec.ood.samples;
  std::vector<float> ood(m * d);
  const double shift = spec.ood.magnitude * spec.within_std;
  const double box = spec.center_scale + shift;
  for (std::size_t s = 0; s < m; ++s) {
    float* out = &ood[s * d];
    if (spec.ood.mode == OodMode::kUniform) {
      for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<float>(rng.uniform(-box, box));
      continue;
    }
    const auto c = static_cast<Eigen::Index>(rng.below(k));
    for (std::size_t j = 0; j < d; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      double v = centers(c, jj);
      if (spec.ood.mode == OodMode::kShifted) {
        v += spec.within_std * rng.normal() + shift * direction[jj];
      } else {
        v += shift * rng.normal();
      }
      out[j] = static_cast<float>(v);
    }
  }

  SyntheticData data{EmbeddingMatrix(k * per, d, std::move(id)), EmbeddingMatrix(m, d, std::move(ood)),
                     std::move(labels), std::nullopt, std::nullopt, std::move(centers)};
  if (hold > 0) {
    data.id_holdout = EmbeddingMatrix(k * hold, d, std::move(holdout));
    data.holdout_labels = std::move(holdout_labels);
  }
  return data;
}

}  // namespace ood
