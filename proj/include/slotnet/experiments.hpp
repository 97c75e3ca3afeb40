#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slotnet/common.hpp"
#include "slotnet/envs.hpp"
#include "slotnet/evo.hpp"
#include "slotnet/harness.hpp"
#include "slotnet/policy.hpp"

namespace slotnet {

/// The evaluation grid columns: observation doubling, one random ordering
/// per episode, and online re-permutation every 100/50/10/5 steps.
enum class EvalCondition { InputDoubling, NoPerm, Every100, Every50, Every10, Every5 };

constexpr std::array<EvalCondition, 6> kAllConditions = {
    EvalCondition::InputDoubling, EvalCondition::NoPerm, EvalCondition::Every100,
    EvalCondition::Every50,       EvalCondition::Every10, EvalCondition::Every5,
};

inline const char* condition_name(EvalCondition c) {
    switch (c) {
        case EvalCondition::InputDoubling: return "input-doubling";
        case EvalCondition::NoPerm: return "no-perm";
        case EvalCondition::Every100: return "every100";
        case EvalCondition::Every50: return "every50";
        case EvalCondition::Every10: return "every10";
        case EvalCondition::Every5: return "every5";
    }
    throw ConfigError("condition_name: unknown condition");
}

struct EvalSummary {
    EvalCondition condition;
    std::size_t n_episodes = 0;
    double mean = 0.0;
    double stddev = 0.0;       // population standard deviation
    bool applicable = true;    // false e.g. for standard-rnn under doubling
};

inline EpisodeOptions condition_options(EvalCondition c, std::uint64_t seed,
                                        bool permute_output) {
    EpisodeOptions opt;
    opt.seed = seed;
    switch (c) {
        case EvalCondition::InputDoubling:
            opt.double_input = true;  // ordering stays fixed
            break;
        case EvalCondition::NoPerm:
            opt.input_schedule = PermutationSchedule::per_episode();
            break;
        case EvalCondition::Every100:
            opt.input_schedule = PermutationSchedule::every(100);
            break;
        case EvalCondition::Every50:
            opt.input_schedule = PermutationSchedule::every(50);
            break;
        case EvalCondition::Every10:
            opt.input_schedule = PermutationSchedule::every(10);
            break;
        case EvalCondition::Every5:
            opt.input_schedule = PermutationSchedule::every(5);
            break;
    }
    if (permute_output) opt.output_schedule = opt.input_schedule;
    return opt;
}

/// Mean and population standard deviation of episode returns under a fixed
/// options template; per-episode seeds derive from (seed, stream, episode).
/// Episodes run concurrently and are reduced by index, so the summary is
/// bitwise reproducible for a given seed regardless of worker count.
inline std::pair<double, double> mean_std_over_episodes(const Policy& policy, EnvId env,
                                                        const EpisodeOptions& base,
                                                        std::size_t n_episodes,
                                                        std::uint64_t seed,
                                                        std::uint64_t stream,
                                                        std::size_t workers = 1) {
    require(n_episodes >= 1, "mean_std_over_episodes: need at least one episode");
    Vec returns(n_episodes);
    parallel_for(n_episodes, workers, [&](std::size_t ep) {
        EpisodeOptions opt = base;
        opt.seed = derive_seed(seed, {stream, ep});
        returns[ep] = run_episode(policy, env, opt).total_reward;
    });
    double mean = 0.0;
    for (double v : returns) mean += v;
    mean /= static_cast<double>(n_episodes);
    double var = 0.0;
    for (double v : returns) var += (v - mean) * (v - mean);
    return {mean, std::sqrt(var / static_cast<double>(n_episodes))};
}

/// Evaluates a trained policy over n_episodes per condition. When
/// permute_output is set (output-perm variant only), the output ordering
/// follows the same schedule as the input.
inline std::vector<EvalSummary> evaluate_grid(const Policy& policy, EnvId env,
                                              std::span<const EvalCondition> conditions,
                                              std::size_t n_episodes, std::uint64_t seed,
                                              std::size_t workers = 1,
                                              bool permute_output = false) {
    std::vector<EvalSummary> out;
    for (EvalCondition c : conditions) {
        EvalSummary summary;
        summary.condition = c;
        if (c == EvalCondition::InputDoubling &&
            policy.spec.variant == PolicyVariant::StandardRnn) {
            // A rigid input layer cannot accept a doubled observation.
            summary.applicable = false;
            summary.mean = std::nan("");
            summary.stddev = std::nan("");
            out.push_back(summary);
            continue;
        }
        EpisodeOptions base = condition_options(c, 0, permute_output);
        auto [mean, stddev] = mean_std_over_episodes(
            policy, env, base, n_episodes, seed, static_cast<std::uint64_t>(c) + 100, workers);
        summary.n_episodes = n_episodes;
        summary.mean = mean;
        summary.stddev = stddev;
        out.push_back(summary);
    }
    return out;
}

struct CampaignRun {
    std::uint64_t master_seed = 0;
    bool solved = false;
    std::size_t generations = 0;
    std::optional<double> final_eval;
    std::vector<GenerationReport> curve;
    EsState final_state;
};

struct CampaignResult {
    std::vector<CampaignRun> runs;
    // Per-generation mean/std of the population-mean fitness across runs;
    // runs that stopped early are padded with their final value.
    std::vector<double> mean_curve;
    std::vector<double> std_curve;
};

/// n_runs independent trainings with distinct master seeds, aligned by
/// generation into aggregate curves.
inline CampaignResult campaign(EsConfig config, const PolicySpec& spec, EnvId env,
                               std::size_t n_runs,
                               const std::function<void(std::size_t, const GenerationReport&)>&
                                   on_report = {}) {
    require(n_runs >= 1, "campaign: n_runs must be >= 1");
    CampaignResult result;
    std::size_t longest = 0;
    for (std::size_t run = 0; run < n_runs; ++run) {
        EsConfig run_config = config;
        run_config.master_seed = derive_seed(config.master_seed, {0x72756e, run});  // "run"
        auto callback = [&](const GenerationReport& rep, const EsState&) {
            if (on_report) on_report(run, rep);
        };
        TrainResult tr = train(run_config, spec, env, std::nullopt, callback);
        CampaignRun cr;
        cr.master_seed = run_config.master_seed;
        cr.solved = tr.solved;
        cr.generations = tr.state.generation;
        cr.final_eval = tr.state.last_eval_score;
        cr.curve = std::move(tr.curve);
        cr.final_state = std::move(tr.state);
        longest = std::max(longest, cr.curve.size());
        result.runs.push_back(std::move(cr));
    }
    result.mean_curve.resize(longest);
    result.std_curve.resize(longest);
    for (std::size_t g = 0; g < longest; ++g) {
        double mean = 0.0;
        for (const CampaignRun& run : result.runs) {
            double v = run.curve.empty()
                           ? 0.0
                           : run.curve[std::min(g, run.curve.size() - 1)].fit_mean;
            mean += v;
        }
        mean /= static_cast<double>(n_runs);
        double var = 0.0;
        for (const CampaignRun& run : result.runs) {
            double v = run.curve.empty()
                           ? 0.0
                           : run.curve[std::min(g, run.curve.size() - 1)].fit_mean;
            var += (v - mean) * (v - mean);
        }
        result.mean_curve[g] = mean;
        result.std_curve[g] = std::sqrt(var / static_cast<double>(n_runs));
    }
    return result;
}

/// Records every hidden element of every input unit at every step of one
/// episode, with permutation-event markers. Only meaningful for variants
/// with recurrent input units.
inline EpisodeResult trace_episode(const Policy& policy, EnvId env,
                                   const PermutationSchedule& schedule, std::uint64_t seed) {
    require(has_recurrent_slots(policy.spec.variant),
            "trace_episode: variant has no recurrent input units to trace");
    EpisodeOptions opt;
    opt.input_schedule = schedule;
    opt.seed = seed;
    opt.capture_trace = true;
    return run_episode(policy, env, opt);
}

}  // namespace slotnet
