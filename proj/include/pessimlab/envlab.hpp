#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pessimlab/core.hpp"

namespace pessimlab {

struct ReferenceReturns {
    double random = 0.0;
    double expert = 0.0;
    bool known = false;
};

struct EnvSpec {
    std::string env_id;
    std::size_t d_s = 0;
    std::size_t d_a = 0;
    std::vector<std::pair<double, double>> state_bounds;
    std::vector<std::pair<double, double>> action_bounds;
    std::size_t episode_length = 0;
    ReferenceReturns reference_returns;
};

struct StepResult {
    Vec next_state;
    double reward = 0.0;
};

// Deterministic analytic environment. step_from is a pure function of
// (state, action): identical inputs give bit-identical outputs, which is what
// makes ground-truth replay of model rollouts exact.
class OracleEnv {
  public:
    virtual ~OracleEnv() = default;

    const EnvSpec& spec() const { return spec_; }
    EnvSpec& mutable_spec() { return spec_; }

    virtual StepResult step_from(const Vec& state, const Vec& action) const = 0;
    virtual Vec reset(std::uint64_t seed) const = 0;

  protected:
    void check_action(const Vec& action) const;
    EnvSpec spec_;
};

// env_id in {pointmass2d, pendulum1d, cliffcar}.
std::unique_ptr<OracleEnv> make_env(const std::string& env_id);

// Behavior-tier offline data. random = uniform actions; expert/medium = CEM
// planning on the true dynamics with strong/weak settings; mixed = episode
// shuffle of random+medium; medium-expert = concatenation. Generating the
// random or expert tier records that tier's mean episode return into
// env.spec().reference_returns.
Dataset generate_dataset(OracleEnv& env, const std::string& tier, std::size_t size, std::uint64_t seed);

// Fills reference_returns by generating small random and expert tiers.
void calibrate_reference_returns(OracleEnv& env, std::uint64_t seed, std::size_t episodes = 5);

}  // namespace pessimlab
