#include "ncnes/policy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ncnes {

int PolicyCodec::weight_count() const {
  int total = 0;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    total += (layers[l] + 1) * layers[l + 1];
  }
  return total;
}

std::vector<PolicyCodec::Layer> PolicyCodec::unflatten(
    std::span<const double> flat) const {
  if (static_cast<int>(flat.size()) != weight_count()) {
    throw std::invalid_argument("PolicyCodec: expected " +
                                std::to_string(weight_count()) +
                                " weights, got " +
                                std::to_string(flat.size()));
  }
  std::vector<Layer> out;
  std::size_t pos = 0;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const int in = layers[l];
    const int n_out = layers[l + 1];
    Layer layer;
    layer.weights.assign(flat.begin() + pos, flat.begin() + pos + in * n_out);
    pos += static_cast<std::size_t>(in) * n_out;
    layer.bias.assign(flat.begin() + pos, flat.begin() + pos + n_out);
    pos += n_out;
    out.push_back(std::move(layer));
  }
  return out;
}

std::vector<double> PolicyCodec::flatten(
    const std::vector<Layer>& layers_in) const {
  std::vector<double> flat;
  flat.reserve(weight_count());
  for (const auto& layer : layers_in) {
    flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  if (static_cast<int>(flat.size()) != weight_count()) {
    throw std::invalid_argument("PolicyCodec: layer shapes do not match");
  }
  return flat;
}

int PolicyCodec::act(std::span<const double> flat,
                     std::span<const double> obs) const {
  std::vector<double> activ(obs.begin(), obs.end());
  std::size_t pos = 0;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const int in = layers[l];
    const int n_out = layers[l + 1];
    const bool last = (l + 2 == layers.size());
    std::vector<double> next(n_out);
    for (int o = 0; o < n_out; ++o) {
      double z = 0.0;
      for (int i = 0; i < in; ++i) z += flat[pos + o * in + i] * activ[i];
      z += flat[pos + static_cast<std::size_t>(in) * n_out + o];
      next[o] = last ? z : std::tanh(z);
    }
    pos += static_cast<std::size_t>(in + 1) * n_out;
    activ = std::move(next);
  }
  int best = 0;
  for (std::size_t o = 1; o < activ.size(); ++o) {
    if (activ[o] > activ[best]) best = static_cast<int>(o);
  }
  return best;
}

double CartPoleTask::episode(const PolicyCodec& codec,
                             std::span<const double> w, rng::Stream& stream) {
  constexpr double kGravity = 9.8;
  constexpr double kMassCart = 1.0;
  constexpr double kMassPole = 0.1;
  constexpr double kHalfLength = 0.5;
  constexpr double kForce = 10.0;
  constexpr double kDt = 0.02;
  constexpr double kXLimit = 2.4;
  const double theta_limit = 12.0 * std::numbers::pi / 180.0;
  constexpr double kTotalMass = kMassCart + kMassPole;
  constexpr double kPoleMassLength = kMassPole * kHalfLength;

  double x = stream.uniform(-0.05, 0.05);
  double x_dot = stream.uniform(-0.05, 0.05);
  double theta = stream.uniform(-0.05, 0.05);
  double theta_dot = stream.uniform(-0.05, 0.05);

  double total = 0.0;
  for (int step = 0; step < kMaxSteps; ++step) {
    const double obs[4] = {x, x_dot, theta, theta_dot};
    const int action = codec.act(w, obs);
    const double force = action == 1 ? kForce : -kForce;

    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);
    const double temp =
        (force + kPoleMassLength * theta_dot * theta_dot * sin_t) / kTotalMass;
    const double theta_acc =
        (kGravity * sin_t - cos_t * temp) /
        (kHalfLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / kTotalMass));
    const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;

    x += kDt * x_dot;
    x_dot += kDt * x_acc;
    theta += kDt * theta_dot;
    theta_dot += kDt * theta_acc;

    total += 1.0;
    if (std::abs(x) > kXLimit || std::abs(theta) > theta_limit) break;
  }
  return total;
}

const PolicyCodec& cartpole_codec() {
  static const PolicyCodec codec{{CartPoleTask::kObservations, 8,
                                  CartPoleTask::kActions}};
  return codec;
}

double policy_rollout(std::span<const double> weights, int episodes,
                      rng::Stream& stream) {
  const PolicyCodec& codec = cartpole_codec();
  if (static_cast<int>(weights.size()) != codec.weight_count()) {
    throw std::invalid_argument("policy_rollout: expected " +
                                std::to_string(codec.weight_count()) +
                                " weights, got " +
                                std::to_string(weights.size()));
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i])) {
      throw std::invalid_argument("policy_rollout: weight " +
                                  std::to_string(i) + " is not finite");
    }
  }
  if (episodes < 1) throw std::invalid_argument("policy_rollout: episodes < 1");

  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    total += CartPoleTask::episode(codec, weights, stream);
  }
  return total / episodes;
}

}  // namespace ncnes
