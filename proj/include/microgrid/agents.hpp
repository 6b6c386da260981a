#pragma once
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "microgrid/config.hpp"
#include "microgrid/env.hpp"
#include "microgrid/net.hpp"
#include "microgrid/replay.hpp"

namespace microgrid {

// --- return / target primitives -----------------------------------------

/// n-step discounted return minus the state value baseline:
///   sum_k gamma^k r_k + gamma^n * bootstrap - v_s.
/// `bootstrap` is v(S') at the cut, or 0 past a terminal.
inline double n_step_advantage(const std::vector<double>& rewards, double bootstrap, double v_s,
                               double gamma) {
    double r = bootstrap;
    for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) r = *it + gamma * r;
    return r - v_s;
}

/// Sum of squared one-step TD errors; terminal transitions bootstrap 0.
inline double critic_loss(const std::vector<double>& rewards, const std::vector<double>& values,
                          const std::vector<double>& next_values, const std::vector<bool>& terminals,
                          double gamma) {
    double loss = 0.0;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        double boot = terminals[i] ? 0.0 : next_values[i];
        double delta = rewards[i] + gamma * boot - values[i];
        loss += delta * delta;
    }
    return loss;
}

/// Bellman optimality target: r + gamma * max_a Q_target(s', a).
inline double dqn_target(const Transition& t, const ParameterSet& target_params, double gamma) {
    if (t.terminal) return t.reward;
    ForwardPass f = forward(target_params, {t.next_obs.begin(), t.next_obs.end()});
    double best = f.logits[0];
    for (double q : f.logits) best = std::max(best, q);
    return t.reward + gamma * best;
}

/// Double-DQN target: online net picks the action, target net prices it.
inline double double_dqn_target(const Transition& t, const ParameterSet& online_params,
                                const ParameterSet& target_params, double gamma) {
    if (t.terminal) return t.reward;
    std::vector<double> next_obs(t.next_obs.begin(), t.next_obs.end());
    ForwardPass online = forward(online_params, next_obs);
    std::size_t best = 0;
    for (std::size_t a = 1; a < online.logits.size(); ++a)
        if (online.logits[a] > online.logits[best]) best = a;
    ForwardPass target = forward(target_params, next_obs);
    return t.reward + gamma * target.logits[best];
}

// --- exploration ----------------------------------------------------------

/// Linear epsilon decay with a floor; monotone non-increasing in the step.
struct EpsilonSchedule {
    double start = 1.0;
    double decay = 0.00005; // per global env step
    double floor = 0.05;

    double at(long long step) const {
        return std::max(floor, start - decay * static_cast<double>(step));
    }
};

/// Samples from the epsilon-mixed policy (1-eps)*pi + eps*uniform.
inline int sample_action(const std::vector<double>& policy, double epsilon, Rng& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    if (u01(rng) < epsilon) {
        std::uniform_int_distribution<int> pick(0, static_cast<int>(policy.size()) - 1);
        return pick(rng);
    }
    double u = u01(rng);
    double acc = 0.0;
    for (std::size_t a = 0; a < policy.size(); ++a) {
        acc += policy[a];
        if (u < acc) return static_cast<int>(a);
    }
    return static_cast<int>(policy.size()) - 1;
}

inline int argmax_action(const std::vector<double>& scores) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < scores.size(); ++a)
        if (scores[a] > scores[best]) best = a;
    return static_cast<int>(best);
}

// --- episode rollout helpers ----------------------------------------------

struct EpisodeRun {
    double reward = 0.0;     // money units
    double cost = 0.0;       // daily operating cost
    std::vector<StepInfo> infos;
};

template <typename ActionFn>
inline EpisodeRun run_episode(const Environment& env, int day, ActionFn&& pick) {
    EpisodeRun run;
    EnvState s = env.reset(day);
    for (int h = 0; h < kHoursPerDay; ++h) {
        int a = pick(s);
        StepOutcome out = env.step(s, a);
        run.reward += out.reward;
        run.infos.push_back(out.info);
        s = std::move(out.next_state);
    }
    run.cost = Environment::daily_cost(run.infos, env.config().wind_cost_per_kwh);
    return run;
}

/// Deterministic greedy rollout: argmax over logits covers both the softmax
/// policy (argmax pi = argmax logits) and Q-value readings of the head.
inline EpisodeRun run_episode_greedy(const Environment& env, const ParameterSet& params, int day) {
    return run_episode(env, day, [&](const EnvState& s) {
        auto obs = encode_observation(s, env.config());
        ForwardPass f = forward(params, {obs.begin(), obs.end()});
        return argmax_action(f.logits);
    });
}

inline EpisodeRun run_episode_random(const Environment& env, int day, Rng& rng) {
    std::uniform_int_distribution<int> pick(0, kActionCount - 1);
    return run_episode(env, day, [&](const EnvState&) { return pick(rng); });
}

inline EpisodeRun run_episode_fixed(const Environment& env, int day, int action_index) {
    return run_episode(env, day, [&](const EnvState&) { return action_index; });
}

/// The flexibility-disabled comparator policy: zero TCL budget (thermostat
/// comfort actions only), internal price pinned to market, deficits bought
/// and surpluses sold before the battery is touched.
inline int retailer_action() {
    return encode_action({0, 0, DeficitPriority::GridFirst, ExcessPriority::SellFirst});
}

/// Daily costs of the retailer policy over a day range.
inline std::vector<double> retailer_baseline(const Environment& env, int start_day, int days) {
    std::vector<double> costs;
    costs.reserve(static_cast<std::size_t>(days));
    for (int d = 0; d < days; ++d)
        costs.push_back(run_episode_fixed(env, start_day + d, retailer_action()).cost);
    return costs;
}

// --- training records -------------------------------------------------------

struct EpisodeStat {
    int episode = 0;     // global episode index
    int worker = 0;
    double reward = 0.0; // money units, undiscounted sum over the day
    double cost = 0.0;
    double mean_entropy = 0.0;
    double epsilon = 0.0;
};

struct TrainResult {
    ParameterSet params;
    std::vector<EpisodeStat> episodes;
};

/// Called with (episodes completed, current global parameters) at periodic
/// checkpoint milestones during training.
using CheckpointSink = std::function<void(int, const ParameterSet&)>;

// --- replay update (M-A3C memory pass) -------------------------------------

/// One aggregated off-policy pass: a uniform minibatch from the pool,
/// one-step advantages recomputed with the store's current values, one mean
/// gradient applied. Returns false (no-op) while the pool is under-filled.
inline bool replay_update(ParameterStore& store, ReplayPool& pool, const LearnerConfig& cfg) {
    if (pool.size() < static_cast<std::size_t>(cfg.minibatch)) return false;
    ParameterSet params = store.snapshot();
    std::vector<Transition> batch = pool.sample(static_cast<std::size_t>(cfg.minibatch));
    GradientSet sum = GradientSet::zeros_like(params);
    for (const Transition& t : batch) {
        std::vector<double> obs(t.obs.begin(), t.obs.end());
        double v_next = 0.0;
        if (!t.terminal)
            v_next = forward(params, {t.next_obs.begin(), t.next_obs.end()}).value;
        double target = t.reward + cfg.gamma * v_next; // rewards stored pre-scaled
        double v_s = forward(params, obs).value;
        double advantage = target - v_s;
        sum.add(backward(params, obs, t.action, advantage, target, cfg.entropy_coef));
    }
    sum.scale(1.0 / cfg.minibatch);
    store.apply_gradients(sum, cfg.learning_rate);
    return true;
}

// --- M-A3C -----------------------------------------------------------------

namespace detail {

/// State shared across worker threads: the parameter store, the experience
/// pool, the global step counter driving epsilon and the replay cadence, and
/// the episode ticket dispenser.
struct SharedTraining {
    ParameterStore store;
    std::mutex pool_mu;
    ReplayPool pool;
    std::atomic<long long> global_step{0};
    std::atomic<int> episode_ticket{0};
    std::mutex stats_mu;
    std::vector<EpisodeStat> stats;
    CheckpointSink checkpoint_sink;
    int checkpoint_every = 0;

    SharedTraining(ParameterSet init, std::size_t replay_capacity, std::uint64_t seed)
        : store(std::move(init)), pool(replay_capacity, seed) {}
};

/// Algorithm-1 worker loop: claim an episode (one simulated day), roll
/// n-step segments with a fresh parameter snapshot each, accumulate the
/// actor/critic gradients over the segment in reverse, apply them to the
/// global store, feed the pool, and fire the periodic replay pass.
inline void ma3c_worker(int worker_id, const std::shared_ptr<const Scenario>& scenario,
                        const LearnerConfig& cfg, SharedTraining& shared) {
    Environment env(scenario);
    Rng rng(derive_seed(scenario->cfg.seed, seed_tag::worker, static_cast<std::uint64_t>(worker_id)));
    EpsilonSchedule eps{cfg.epsilon_start, cfg.epsilon_decay, cfg.epsilon_min};
    const int trace_days = scenario->wind.days();

    int ticket;
    while ((ticket = shared.episode_ticket.fetch_add(1)) < cfg.episodes) {
        int day = ticket % trace_days;
        EnvState state = env.reset(day);
        std::vector<StepInfo> infos;
        double episode_reward = 0.0;
        double entropy_sum = 0.0;
        double last_eps = eps.at(shared.global_step.load());
        bool terminal = false;

        while (!terminal) {
            ParameterSet params = shared.store.snapshot();

            struct SegStep {
                std::vector<double> obs;
                int action;
                double scaled_reward;
                double value;
            };
            std::vector<SegStep> segment;
            std::vector<double> last_next_obs;

            for (int n = 0; n < cfg.n_steps && !terminal; ++n) {
                auto obs_arr = encode_observation(state, scenario->cfg);
                std::vector<double> obs(obs_arr.begin(), obs_arr.end());
                ForwardPass f = forward(params, obs);
                long long t_now = shared.global_step.fetch_add(1);
                double epsilon = eps.at(t_now);
                last_eps = epsilon;
                int action = sample_action(f.policy, epsilon, rng);
                entropy_sum += policy_entropy(f.policy);

                StepOutcome out = env.step(state, action);
                episode_reward += out.reward;
                infos.push_back(out.info);
                terminal = out.terminal;

                auto next_arr = encode_observation(out.next_state, scenario->cfg);
                Transition tr;
                std::copy(obs_arr.begin(), obs_arr.end(), tr.obs.begin());
                tr.action = action;
                tr.reward = out.reward * cfg.reward_scale;
                std::copy(next_arr.begin(), next_arr.end(), tr.next_obs.begin());
                tr.terminal = terminal;
                if (cfg.replay_enabled) {
                    std::lock_guard<std::mutex> lock(shared.pool_mu);
                    shared.pool.push(tr);
                }

                segment.push_back({std::move(obs), action, tr.reward, f.value});
                last_next_obs.assign(next_arr.begin(), next_arr.end());
                state = std::move(out.next_state);

                bool replay_due = cfg.replay_enabled && ((t_now + 1) % cfg.update_batch == 0);
                if (replay_due) {
                    std::lock_guard<std::mutex> lock(shared.pool_mu);
                    replay_update(shared.store, shared.pool, cfg);
                }
            }

            // R <- r_i + gamma R, walked backward from the bootstrap.
            double ret = terminal ? 0.0 : forward(params, last_next_obs).value;
            GradientSet grads = GradientSet::zeros_like(params);
            for (auto it = segment.rbegin(); it != segment.rend(); ++it) {
                ret = it->scaled_reward + cfg.gamma * ret;
                double advantage = ret - it->value;
                grads.add(backward(params, it->obs, it->action, advantage, ret, cfg.entropy_coef));
            }
            shared.store.apply_gradients(grads, cfg.learning_rate);
        }

        EpisodeStat stat;
        stat.episode = ticket;
        stat.worker = worker_id;
        stat.reward = episode_reward;
        stat.cost = Environment::daily_cost(infos, scenario->cfg.wind_cost_per_kwh);
        stat.mean_entropy = entropy_sum / kHoursPerDay;
        stat.epsilon = last_eps;
        std::lock_guard<std::mutex> lock(shared.stats_mu);
        shared.stats.push_back(stat);
        int done = static_cast<int>(shared.stats.size());
        if (shared.checkpoint_sink && shared.checkpoint_every > 0 &&
            done % shared.checkpoint_every == 0 && done < cfg.episodes)
            shared.checkpoint_sink(done, shared.store.snapshot());
    }
}

} // namespace detail

/// Multithreaded advantage actor-critic with the experience pool.
inline TrainResult train_ma3c(const std::shared_ptr<const Scenario>& scenario, const LearnerConfig& cfg,
                              const CheckpointSink& checkpoint_sink = {}) {
    cfg.validate();
    detail::SharedTraining shared(ParameterSet::init(scenario->cfg.seed),
                                  static_cast<std::size_t>(cfg.replay_capacity), scenario->cfg.seed);
    shared.checkpoint_sink = checkpoint_sink;
    shared.checkpoint_every = cfg.checkpoint_every;
    if (cfg.workers == 1) {
        detail::ma3c_worker(0, scenario, cfg, shared);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(cfg.workers));
        for (int w = 0; w < cfg.workers; ++w)
            threads.emplace_back(detail::ma3c_worker, w, std::cref(scenario), std::cref(cfg),
                                 std::ref(shared));
        for (auto& t : threads) t.join();
    }
    TrainResult result;
    result.params = shared.store.snapshot();
    result.episodes = std::move(shared.stats);
    std::sort(result.episodes.begin(), result.episodes.end(),
              [](const EpisodeStat& a, const EpisodeStat& b) { return a.episode < b.episode; });
    return result;
}

// --- DQN family -------------------------------------------------------------

/// Epsilon-greedy value learner over the same 80-action head. `use_double`
/// switches the target rule to the double-DQN decomposition.
inline TrainResult train_dqn(const std::shared_ptr<const Scenario>& scenario, const LearnerConfig& cfg,
                             bool use_double, const CheckpointSink& checkpoint_sink = {}) {
    cfg.validate();
    Environment env(scenario);
    ParameterSet online = ParameterSet::init(scenario->cfg.seed);
    ParameterSet target = online;
    ParameterStore store(online);
    ReplayPool pool(static_cast<std::size_t>(cfg.replay_capacity), scenario->cfg.seed);
    Rng rng(derive_seed(scenario->cfg.seed, seed_tag::worker, 0));
    EpsilonSchedule eps{cfg.epsilon_start, cfg.epsilon_decay, cfg.epsilon_min};
    const int trace_days = scenario->wind.days();

    TrainResult result;
    long long t_global = 0;
    for (int episode = 0; episode < cfg.episodes; ++episode) {
        EnvState state = env.reset(episode % trace_days);
        std::vector<StepInfo> infos;
        double episode_reward = 0.0;
        double epsilon = eps.at(t_global);
        for (int h = 0; h < kHoursPerDay; ++h) {
            online = store.snapshot();
            auto obs_arr = encode_observation(state, scenario->cfg);
            std::vector<double> obs(obs_arr.begin(), obs_arr.end());
            epsilon = eps.at(t_global);
            int action;
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            if (u01(rng) < epsilon) {
                std::uniform_int_distribution<int> pick(0, kActionCount - 1);
                action = pick(rng);
            } else {
                action = argmax_action(forward(online, obs).logits);
            }
            StepOutcome out = env.step(state, action);
            episode_reward += out.reward;
            infos.push_back(out.info);

            Transition tr;
            std::copy(obs_arr.begin(), obs_arr.end(), tr.obs.begin());
            tr.action = action;
            tr.reward = out.reward * cfg.reward_scale;
            auto next_arr = encode_observation(out.next_state, scenario->cfg);
            std::copy(next_arr.begin(), next_arr.end(), tr.next_obs.begin());
            tr.terminal = out.terminal;
            pool.push(tr);

            ++t_global;
            if (pool.size() >= static_cast<std::size_t>(cfg.minibatch)) {
                std::vector<Transition> batch = pool.sample(static_cast<std::size_t>(cfg.minibatch));
                GradientSet sum = GradientSet::zeros_like(online);
                for (const Transition& t : batch) {
                    double y = use_double ? double_dqn_target(t, online, target, cfg.gamma)
                                          : dqn_target(t, target, cfg.gamma);
                    sum.add(q_backward(online, {t.obs.begin(), t.obs.end()}, t.action, y));
                }
                sum.scale(1.0 / cfg.minibatch);
                store.apply_gradients(sum, cfg.learning_rate);
            }
            if (t_global % cfg.dqn_target_sync_steps == 0) target = store.snapshot();
            state = std::move(out.next_state);
        }
        EpisodeStat stat;
        stat.episode = episode;
        stat.reward = episode_reward;
        stat.cost = Environment::daily_cost(infos, scenario->cfg.wind_cost_per_kwh);
        stat.mean_entropy = 0.0; // value-based agent; no policy entropy
        stat.epsilon = epsilon;
        result.episodes.push_back(stat);
        if (checkpoint_sink && (episode + 1) % cfg.checkpoint_every == 0 &&
            episode + 1 < cfg.episodes)
            checkpoint_sink(episode + 1, store.snapshot());
    }
    result.params = store.snapshot();
    return result;
}

// --- PPO ---------------------------------------------------------------------

/// Clipped-surrogate on-policy baseline sharing the network, the advantage
/// recursion and the value loss with the actor-critic path.
inline TrainResult train_ppo(const std::shared_ptr<const Scenario>& scenario, const LearnerConfig& cfg,
                             const CheckpointSink& checkpoint_sink = {}) {
    cfg.validate();
    Environment env(scenario);
    ParameterStore store(ParameterSet::init(scenario->cfg.seed));
    Rng rng(derive_seed(scenario->cfg.seed, seed_tag::worker, 0));
    const int trace_days = scenario->wind.days();

    struct Sample {
        std::vector<double> obs;
        int action;
        double behavior_prob;
        double value;     // v(s) under the behavior parameters
        double ret;       // discounted return target
        double advantage; // ret - value
    };

    TrainResult result;
    int episode = 0;
    while (episode < cfg.episodes) {
        int batch_episodes = std::min(cfg.ppo_batch_episodes, cfg.episodes - episode);
        ParameterSet behavior = store.snapshot();
        std::vector<Sample> batch;
        batch.reserve(static_cast<std::size_t>(batch_episodes) * kHoursPerDay);

        for (int e = 0; e < batch_episodes; ++e, ++episode) {
            EnvState state = env.reset(episode % trace_days);
            std::vector<StepInfo> infos;
            std::vector<Sample> traj;
            std::vector<double> scaled_rewards;
            double episode_reward = 0.0;
            double entropy_sum = 0.0;
            for (int h = 0; h < kHoursPerDay; ++h) {
                auto obs_arr = encode_observation(state, scenario->cfg);
                std::vector<double> obs(obs_arr.begin(), obs_arr.end());
                ForwardPass f = forward(behavior, obs);
                entropy_sum += policy_entropy(f.policy);
                int action = sample_action(f.policy, 0.0, rng);
                StepOutcome out = env.step(state, action);
                episode_reward += out.reward;
                infos.push_back(out.info);
                traj.push_back({std::move(obs), action, f.policy[static_cast<std::size_t>(action)],
                                f.value, 0.0, 0.0});
                scaled_rewards.push_back(out.reward * cfg.reward_scale);
                state = std::move(out.next_state);
            }
            // Full-episode returns; terminal bootstrap is 0.
            double ret = 0.0;
            for (int i = kHoursPerDay - 1; i >= 0; --i) {
                ret = scaled_rewards[static_cast<std::size_t>(i)] + cfg.gamma * ret;
                auto& s = traj[static_cast<std::size_t>(i)];
                s.ret = ret;
                s.advantage = ret - s.value;
            }
            for (auto& s : traj) batch.push_back(std::move(s));

            EpisodeStat stat;
            stat.episode = episode;
            stat.reward = episode_reward;
            stat.cost = Environment::daily_cost(infos, scenario->cfg.wind_cost_per_kwh);
            stat.mean_entropy = entropy_sum / kHoursPerDay;
            stat.epsilon = 0.0;
            result.episodes.push_back(stat);
        }

        for (int epoch = 0; epoch < cfg.ppo_epochs; ++epoch) {
            ParameterSet params = store.snapshot();
            GradientSet sum = GradientSet::zeros_like(params);
            for (const Sample& s : batch) {
                ForwardPass f = forward(params, s.obs);
                double ratio = f.policy[static_cast<std::size_t>(s.action)] /
                               std::max(s.behavior_prob, 1e-12);
                bool clipped = (s.advantage >= 0.0 && ratio > 1.0 + cfg.ppo_clip) ||
                               (s.advantage < 0.0 && ratio < 1.0 - cfg.ppo_clip);
                // Outside the trust band the surrogate is flat; inside it the
                // policy gradient equals the plain one scaled by the ratio.
                double effective_advantage = clipped ? 0.0 : s.advantage * ratio;
                sum.add(backward(params, s.obs, s.action, effective_advantage, s.ret,
                                 cfg.entropy_coef));
            }
            sum.scale(1.0 / static_cast<double>(batch.size()));
            store.apply_gradients(sum, cfg.learning_rate);
        }
        if (checkpoint_sink)
            for (int m = episode - batch_episodes + 1; m <= episode; ++m)
                if (m % cfg.checkpoint_every == 0 && m < cfg.episodes)
                    checkpoint_sink(m, store.snapshot());
    }
    result.params = store.snapshot();
    return result;
}

} // namespace microgrid
