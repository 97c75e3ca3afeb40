#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "slotnet/common.hpp"
#include "slotnet/envs.hpp"
#include "slotnet/policy.hpp"
#include "slotnet/rng.hpp"

namespace slotnet {

/// When the observation (or action-index) ordering is re-randomized.
/// Fixed keeps the identity ordering; RandomPerEpisode draws one ordering at
/// episode start and holds it; RandomEveryK redraws at step 0 and then every
/// k-th step.
struct PermutationSchedule {
    enum class Mode { Fixed, RandomPerEpisode, RandomEveryK };
    Mode mode = Mode::Fixed;
    std::size_t k = 0;

    static PermutationSchedule fixed() { return {Mode::Fixed, 0}; }
    static PermutationSchedule per_episode() { return {Mode::RandomPerEpisode, 0}; }
    static PermutationSchedule every(std::size_t k) {
        require(k >= 1, "PermutationSchedule: k must be >= 1");
        return {Mode::RandomEveryK, k};
    }

    bool redraw_at(std::size_t step) const {
        switch (mode) {
            case Mode::Fixed: return false;
            case Mode::RandomPerEpisode: return step == 0;
            case Mode::RandomEveryK: return step == 0 || step % k == 0;
        }
        return false;
    }
};

inline PermutationSchedule schedule_from_name(const std::string& name) {
    if (name == "fixed") return PermutationSchedule::fixed();
    if (name == "none") return PermutationSchedule::per_episode();
    if (name.rfind("every", 0) == 0) {
        std::size_t k = std::stoul(name.substr(5));
        return PermutationSchedule::every(k);
    }
    throw ConfigError("unknown schedule: " + name);
}

struct EpisodeOptions {
    PermutationSchedule input_schedule = PermutationSchedule::fixed();
    PermutationSchedule output_schedule = PermutationSchedule::fixed();
    bool double_input = false;
    std::uint64_t seed = 0;
    bool capture_trace = false;
    std::size_t max_steps_override = 0;  // 0 keeps the environment default
};

struct PermutationEvent {
    std::size_t step;
    std::vector<std::size_t> perm;
};

struct TraceRow {
    std::size_t step;
    std::size_t unit;
    std::size_t hidden_index;
    double value;
    bool permutation_event;
};

struct EpisodeResult {
    double total_reward = 0.0;
    std::size_t steps = 0;
    std::vector<PermutationEvent> input_events;
    std::vector<PermutationEvent> output_events;
    std::vector<int> actions;
    std::vector<TraceRow> trace;
};

/// Uniform random permutation of 0..n-1 (Fisher-Yates).
inline std::vector<std::size_t> draw_permutation(Rng& rng, std::size_t n) {
    require(n >= 1, "draw_permutation: n must be >= 1");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n - 1; i > 0; --i) {
        std::size_t j = rng.uniform_int(i + 1);
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

inline std::vector<std::size_t> identity_permutation(std::size_t n) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    return perm;
}

/// out[i] = obs[perm[i]].
inline Vec apply_permutation(std::span<const double> obs, std::span<const std::size_t> perm) {
    require(obs.size() == perm.size(), "apply_permutation: length mismatch");
    Vec out(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) out[i] = obs[perm[i]];
    return out;
}

/// Each element duplicated adjacently: [a, b] -> [a, a, b, b].
inline Vec double_input(std::span<const double> obs) {
    Vec out;
    out.reserve(obs.size() * 2);
    for (double v : obs) {
        out.push_back(v);
        out.push_back(v);
    }
    return out;
}

/// Runs one episode of `policy` in `env` under the permutation regime in
/// `options`. Observations are doubled first (when enabled), then permuted.
/// The permutation stream is separate from the environment and reset
/// streams, so schedules never perturb the physics or the initial state.
inline EpisodeResult run_episode(const Policy& policy, EnvId env, const EpisodeOptions& options) {
    const EnvSpec spec = env_spec(env);
    require(policy.spec.n_actions == spec.n_actions,
            "run_episode: policy action count does not match environment");

    Rng env_rng(derive_seed(options.seed, {1}));
    Rng perm_rng(derive_seed(options.seed, {2}));
    Rng reset_rng(derive_seed(options.seed, {3}));

    auto [env_state, raw_obs] = env_reset(env, env_rng);
    Vec obs = options.double_input ? double_input(raw_obs) : std::move(raw_obs);

    const std::size_t n_slots = obs.size();
    if (policy.spec.variant == PolicyVariant::StandardRnn)
        require(n_slots == policy.integrator.in,
                "run_episode: standard-rnn requires the trained observation length");

    PolicyState state = reset(policy, reset_rng, n_slots);

    const bool permute_output = options.output_schedule.mode != PermutationSchedule::Mode::Fixed;
    require(!permute_output || policy.spec.variant == PolicyVariant::OutputPerm,
            "run_episode: output permutation is only valid for the output-perm variant");

    std::vector<std::size_t> in_perm = identity_permutation(n_slots);
    std::vector<std::size_t> out_perm = identity_permutation(policy.spec.n_actions);

    EpisodeResult result;
    const std::size_t step_cap =
        options.max_steps_override ? options.max_steps_override : spec.max_steps;

    for (std::size_t t = 0;; ++t) {
        bool in_event = options.input_schedule.redraw_at(t);
        if (in_event) {
            in_perm = draw_permutation(perm_rng, n_slots);
            result.input_events.push_back({t, in_perm});
        }
        if (options.output_schedule.redraw_at(t)) {
            out_perm = draw_permutation(perm_rng, policy.spec.n_actions);
            result.output_events.push_back({t, out_perm});
        }

        Vec permuted = apply_permutation(obs, in_perm);
        ActResult act_result = act(policy, state, permuted);
        state = std::move(act_result.state);

        if (options.capture_trace) {
            for (std::size_t u = 0; u < state.input_states.size(); ++u)
                for (std::size_t h = 0; h < state.input_states[u].h.size(); ++h)
                    result.trace.push_back({t, u, h, state.input_states[u].h[h], in_event});
        }

        int action = static_cast<int>(out_perm[static_cast<std::size_t>(act_result.action)]);
        result.actions.push_back(action);

        StepResult sr = env_step(env_state, action);
        env_state = sr.state;
        result.total_reward += sr.reward;
        result.steps = env_state.steps;
        if (sr.done || env_state.steps >= step_cap) break;
        obs = options.double_input ? double_input(sr.obs) : std::move(sr.obs);
    }
    return result;
}

}  // namespace slotnet
