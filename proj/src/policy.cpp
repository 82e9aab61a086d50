#include "cbfshield/error.hpp"
#include "cbfshield/sim.hpp"

#include <cmath>
#include <numbers>

namespace cbfshield::sim {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Uniform in (0, 1] from the top 53 bits.
double to_unit(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53; }

}  // namespace

double keyed_normal(std::uint64_t seed, std::uint64_t step, std::uint64_t stream) {
  // Counter-based: the sample depends on the key only, never on call order.
  const std::uint64_t key = splitmix64(splitmix64(splitmix64(seed) ^ step) ^ stream);
  const double u1 = to_unit(splitmix64(key));
  const double u2 = to_unit(splitmix64(key ^ 0xD1B54A32D192ED03ull));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

PolicySpec make_hallucination(PolicySpec base, const Eigen::Vector3d& noise_std, const Eigen::Vector3d& ood_bias) {
  if (!noise_std.allFinite() || (noise_std.array() < 0.0).any()) {
    throw Error(ErrorCode::Validation, "noise_std must be finite and >= 0", "policy.noise_std");
  }
  if (!ood_bias.allFinite()) throw Error(ErrorCode::Validation, "ood_bias must be finite", "policy.ood_bias");
  NoisyHallucination h;
  h.base = std::make_shared<const PolicySpec>(std::move(base));
  h.noise_std = noise_std;
  h.ood_bias = ood_bias;
  return h;
}

ActionCommand policy_action(const PolicySpec& policy, int step, const Eigen::Vector3d& flange_position,
                            std::uint64_t seed) {
  return std::visit(
      overloaded{
          [](const ConstantDelta& p) { return ActionCommand{p.translation, p.rotation, p.gripper}; },
          [&](const WaypointApproach& p) {
            return ActionCommand{p.gain * (p.target_position - flange_position), Eigen::Vector3d::Zero(), p.gripper};
          },
          [&](const Scripted& p) {
            if (step < 0 || step >= static_cast<int>(p.actions.size())) return ActionCommand{};
            return p.actions[step];
          },
          [&](const NoisyHallucination& p) {
            ActionCommand a = p.base ? policy_action(*p.base, step, flange_position, seed) : ActionCommand{};
            for (int axis = 0; axis < 3; ++axis) {
              a.translation[axis] += p.ood_bias[axis];
              if (p.noise_std[axis] > 0.0) a.translation[axis] += p.noise_std[axis] * keyed_normal(seed, step, axis);
            }
            return a;
          },
      },
      policy);
}

}  // namespace cbfshield::sim
