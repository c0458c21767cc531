#pragma once

#include <cstdint>

#include "pessimlab/envlab.hpp"

namespace pessimlab {

// Action chooser driven by rollout engines. reset(seed) pins all internal
// randomness so that replaying an episode reproduces the same actions.
class RolloutPolicy {
  public:
    virtual ~RolloutPolicy() = default;
    virtual void reset(std::uint64_t episode_seed) = 0;
    virtual Vec act(const Vec& state) = 0;
};

class UniformRandomPolicy final : public RolloutPolicy {
  public:
    explicit UniformRandomPolicy(std::vector<std::pair<double, double>> action_bounds)
        : bounds_(std::move(action_bounds)), rng_(0) {}

    void reset(std::uint64_t episode_seed) override { rng_ = Rng(mix_seed(episode_seed, 0x9a7d)); }

    Vec act(const Vec&) override {
        Vec a(bounds_.size());
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng_.uniform(bounds_[i].first, bounds_[i].second);
        return a;
    }

  private:
    std::vector<std::pair<double, double>> bounds_;
    Rng rng_;
};

}  // namespace pessimlab
