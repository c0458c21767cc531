#include "pessimlab/envlab.hpp"

#include <cmath>

#include "pessimlab/planner.hpp"
#include "pessimlab/policy.hpp"

namespace pessimlab {

void OracleEnv::check_action(const Vec& action) const {
    if (action.size() != spec_.d_a) throw ValidationError("action dimension mismatch");
    for (std::size_t i = 0; i < action.size(); ++i) {
        if (!std::isfinite(action[i]) || action[i] < spec_.action_bounds[i].first ||
            action[i] > spec_.action_bounds[i].second)
            throw ValidationError("action out of bounds");
    }
}

namespace {

constexpr double kPi = 3.14159265358979323846;

class PointMass2d : public OracleEnv {
  public:
    explicit PointMass2d(bool cliff) : cliff_(cliff) {
        spec_.env_id = cliff ? "cliffcar" : "pointmass2d";
        spec_.d_s = 4;  // x, y, vx, vy
        spec_.d_a = 2;
        spec_.state_bounds = {{-5, 5}, {-5, 5}, {-1, 1}, {-1, 1}};
        spec_.action_bounds = {{-1, 1}, {-1, 1}};
        spec_.episode_length = 100;
    }

    StepResult step_from(const Vec& state, const Vec& action) const override {
        if (state.size() != spec_.d_s) throw ValidationError("state dimension mismatch");
        check_action(action);
        StepResult out;
        out.reward = -std::hypot(state[0] - 3.0, state[1] - 3.0);
        double vx = clip(state[2] + 0.1 * action[0], -1.0, 1.0);
        double vy = clip(state[3] + 0.1 * action[1], -1.0, 1.0);
        const double px = clip(state[0] + 0.1 * vx, -5.0, 5.0);
        const double py = clip(state[1] + 0.1 * vy, -5.0, 5.0);
        if (cliff_ && px >= 1.4 && px <= 1.6) {
            vx = 0.0;
            vy = 0.0;
        }
        out.next_state = {px, py, vx, vy};
        return out;
    }

    Vec reset(std::uint64_t seed) const override {
        Rng rng(mix_seed(seed, 0x70a1));
        return {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 0.0, 0.0};
    }

  private:
    bool cliff_;
};

class Pendulum1d : public OracleEnv {
  public:
    Pendulum1d() {
        spec_.env_id = "pendulum1d";
        spec_.d_s = 3;  // cos(theta), sin(theta), theta_dot
        spec_.d_a = 1;
        spec_.state_bounds = {{-1, 1}, {-1, 1}, {-8, 8}};
        spec_.action_bounds = {{-2, 2}};
        spec_.episode_length = 200;
    }

    StepResult step_from(const Vec& state, const Vec& action) const override {
        if (state.size() != spec_.d_s) throw ValidationError("state dimension mismatch");
        check_action(action);
        constexpr double dt = 0.05, g = 10.0, m = 1.0, l = 1.0;
        const double theta = std::atan2(state[1], state[0]);
        const double theta_dot = state[2];
        const double torque = action[0];

        StepResult out;
        const double wrapped = std::remainder(theta, 2.0 * kPi);
        out.reward = -(wrapped * wrapped + 0.1 * theta_dot * theta_dot + 0.001 * torque * torque);

        const double accel = 3.0 * g / (2.0 * l) * std::sin(theta) + 3.0 / (m * l * l) * torque;
        const double new_dot = clip(theta_dot + accel * dt, -8.0, 8.0);
        const double new_theta = theta + new_dot * dt;
        out.next_state = {std::cos(new_theta), std::sin(new_theta), new_dot};
        return out;
    }

    Vec reset(std::uint64_t seed) const override {
        Rng rng(mix_seed(seed, 0x70a1));
        const double theta = rng.uniform(-kPi, kPi);
        return {std::cos(theta), std::sin(theta), rng.uniform(-1.0, 1.0)};
    }
};

CemConfig expert_cem_config() {
    CemConfig cfg;
    cfg.plan_horizon = 12;
    cfg.population = 64;
    cfg.elite_frac = 0.15;
    cfg.iterations = 5;
    cfg.init_std = 0.5;
    cfg.action_noise = 0.0;
    return cfg;
}

CemConfig medium_cem_config() {
    CemConfig cfg;
    cfg.plan_horizon = 6;
    cfg.population = 24;
    cfg.elite_frac = 0.25;
    cfg.iterations = 2;
    cfg.init_std = 0.5;
    cfg.action_noise = 0.3;
    return cfg;
}

struct EpisodeBatch {
    std::vector<std::vector<Transition>> episodes;
    double mean_return = 0.0;
};

EpisodeBatch run_episodes(OracleEnv& env, RolloutPolicy& policy, std::size_t n_episodes,
                          std::uint64_t seed) {
    EpisodeBatch batch;
    double total = 0.0;
    for (std::size_t ep = 0; ep < n_episodes; ++ep) {
        const std::uint64_t ep_seed = mix_seed(seed, ep);
        policy.reset(ep_seed);
        Vec state = env.reset(ep_seed);
        std::vector<Transition> episode;
        double ep_return = 0.0;
        for (std::size_t t = 0; t < env.spec().episode_length; ++t) {
            Transition tr;
            tr.state = state;
            tr.action = policy.act(state);
            const StepResult sr = env.step_from(tr.state, tr.action);
            tr.reward = sr.reward;
            tr.next_state = sr.next_state;
            tr.terminal = (t + 1 == env.spec().episode_length);
            ep_return += sr.reward;
            state = sr.next_state;
            episode.push_back(std::move(tr));
        }
        total += ep_return;
        batch.episodes.push_back(std::move(episode));
    }
    batch.mean_return = total / static_cast<double>(n_episodes);
    return batch;
}

std::size_t episodes_needed(const OracleEnv& env, std::size_t size) {
    return (size + env.spec().episode_length - 1) / env.spec().episode_length;
}

std::vector<Transition> flatten(std::vector<std::vector<Transition>> episodes, std::size_t size) {
    std::vector<Transition> out;
    out.reserve(size);
    for (auto& ep : episodes)
        for (auto& tr : ep) {
            if (out.size() == size) return out;
            out.push_back(std::move(tr));
        }
    return out;
}

EpisodeBatch tier_episodes(OracleEnv& env, const std::string& tier, std::size_t n_episodes,
                           std::uint64_t seed) {
    if (tier == "random") {
        UniformRandomPolicy policy(env.spec().action_bounds);
        return run_episodes(env, policy, n_episodes, mix_seed(seed, 0x01));
    }
    if (tier == "expert") {
        CemPolicy policy(PlanDynamics::oracle(env), expert_cem_config(), mix_seed(seed, 0x02));
        return run_episodes(env, policy, n_episodes, mix_seed(seed, 0x02));
    }
    if (tier == "medium") {
        CemPolicy policy(PlanDynamics::oracle(env), medium_cem_config(), mix_seed(seed, 0x03));
        return run_episodes(env, policy, n_episodes, mix_seed(seed, 0x03));
    }
    throw ValidationError("unknown tier: " + tier);
}

}  // namespace

std::unique_ptr<OracleEnv> make_env(const std::string& env_id) {
    if (env_id == "pointmass2d") return std::make_unique<PointMass2d>(false);
    if (env_id == "cliffcar") return std::make_unique<PointMass2d>(true);
    if (env_id == "pendulum1d") return std::make_unique<Pendulum1d>();
    throw ValidationError("unknown env_id: " + env_id);
}

Dataset generate_dataset(OracleEnv& env, const std::string& tier, std::size_t size, std::uint64_t seed) {
    if (size < 1) throw ValidationError("dataset size must be >= 1");

    DatasetMeta meta;
    meta.env_id = env.spec().env_id;
    meta.tier = tier;
    meta.seed = seed;

    std::vector<Transition> transitions;
    if (tier == "random" || tier == "medium" || tier == "expert") {
        EpisodeBatch batch = tier_episodes(env, tier, episodes_needed(env, size), seed);
        meta.behavior_policies = {tier};
        meta.mean_episode_return = batch.mean_return;
        meta.has_mean_episode_return = true;
        if (tier == "random") env.mutable_spec().reference_returns.random = batch.mean_return;
        if (tier == "expert") {
            env.mutable_spec().reference_returns.expert = batch.mean_return;
            env.mutable_spec().reference_returns.known = true;
        }
        transitions = flatten(std::move(batch.episodes), size);
    } else if (tier == "mixed") {
        const std::size_t half = size / 2;
        EpisodeBatch rnd = tier_episodes(env, "random", episodes_needed(env, half), seed);
        EpisodeBatch med = tier_episodes(env, "medium", episodes_needed(env, size - half), seed);
        std::vector<std::vector<Transition>> episodes;
        for (auto& ep : rnd.episodes) episodes.push_back(std::move(ep));
        for (auto& ep : med.episodes) episodes.push_back(std::move(ep));
        Rng shuffler(mix_seed(seed, 0x3144));
        shuffler.shuffle(episodes);
        meta.behavior_policies = {"random", "medium"};
        transitions = flatten(std::move(episodes), size);
    } else if (tier == "medium-expert") {
        const std::size_t half = size / 2;
        EpisodeBatch med = tier_episodes(env, "medium", episodes_needed(env, half), seed);
        EpisodeBatch exp = tier_episodes(env, "expert", episodes_needed(env, size - half), seed);
        std::vector<Transition> first = flatten(std::move(med.episodes), half);
        std::vector<Transition> second = flatten(std::move(exp.episodes), size - half);
        meta.behavior_policies = {"medium", "expert"};
        transitions = std::move(first);
        transitions.insert(transitions.end(), std::make_move_iterator(second.begin()),
                           std::make_move_iterator(second.end()));
    } else {
        throw ValidationError("unknown tier: " + tier);
    }

    if (env.spec().reference_returns.known) {
        meta.reference_random = env.spec().reference_returns.random;
        meta.reference_expert = env.spec().reference_returns.expert;
        meta.has_references = true;
    }
    return make_dataset(std::move(transitions), std::move(meta));
}

void calibrate_reference_returns(OracleEnv& env, std::uint64_t seed, std::size_t episodes) {
    EpisodeBatch rnd = tier_episodes(env, "random", episodes, mix_seed(seed, 0xa51));
    EpisodeBatch exp = tier_episodes(env, "expert", episodes, mix_seed(seed, 0xb52));
    env.mutable_spec().reference_returns.random = rnd.mean_return;
    env.mutable_spec().reference_returns.expert = exp.mean_return;
    env.mutable_spec().reference_returns.known = true;
}

}  // namespace pessimlab
