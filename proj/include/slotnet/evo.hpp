#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include "slotnet/common.hpp"
#include "slotnet/envs.hpp"
#include "slotnet/harness.hpp"
#include "slotnet/policy.hpp"
#include "slotnet/rng.hpp"

namespace slotnet {

struct EsConfig {
    std::size_t population = 128;
    double lr = 0.1;
    double lr_decay = 0.9999;
    double lr_limit = 0.001;
    double sigma = 0.1;
    double sigma_decay = 0.999;
    double sigma_limit = 0.01;
    double weight_decay = 0.0;
    std::size_t max_generations = 5000;
    std::size_t eval_every = 20;
    std::size_t eval_episodes = 128;
    std::size_t episodes_per_fitness = 1;
    double solve_threshold = 0.0;
    std::uint64_t master_seed = 0;
    std::size_t workers = 1;
    double init_std = 0.01;  // center-genome initialization scale

    void validate() const {
        require(population >= 2 && population % 2 == 0,
                "EsConfig: population must be even (mirrored sampling)");
        require(lr_decay > 0.0 && lr_decay <= 1.0 && sigma_decay > 0.0 && sigma_decay <= 1.0,
                "EsConfig: decays must lie in (0, 1]");
        require(lr_limit <= lr && sigma_limit <= sigma,
                "EsConfig: limits must not exceed initial values");
        require(weight_decay >= 0.0, "EsConfig: weight_decay must be >= 0");
        require(episodes_per_fitness >= 1, "EsConfig: episodes_per_fitness must be >= 1");
    }

    /// Reference defaults plus the two documented exceptions: weight decay
    /// 0.01 for MountainCar and for the output-permutation variant, which
    /// also averages fitness over four episodes.
    static EsConfig defaults_for(EnvId env, PolicyVariant variant) {
        EsConfig c;
        c.solve_threshold = env_spec(env).solve_threshold;
        if (env == EnvId::MountainCar || variant == PolicyVariant::OutputPerm)
            c.weight_decay = 0.01;
        if (variant == PolicyVariant::OutputPerm) c.episodes_per_fitness = 4;
        return c;
    }
};

struct EsState {
    Genome center;  // the mean solution the strategy ascends
    double sigma = 0.1;
    double lr = 0.1;
    Vec adam_m, adam_v;
    std::size_t adam_t = 0;
    std::size_t generation = 0;
    std::uint64_t master_seed = 0;
    bool solved = false;
    std::optional<double> last_eval_score;
};

struct GenerationReport {
    std::size_t generation = 0;
    double fit_mean = 0.0, fit_max = 0.0, fit_min = 0.0, fit_std = 0.0;
    double sigma = 0.0, lr = 0.0;
    std::optional<double> eval_score;
};

struct Population {
    std::vector<Vec> noise;        // population/2 shared noise vectors
    std::vector<Genome> members;   // 2i: center + sigma*eps_i, 2i+1: center - sigma*eps_i
};

/// Mirrored sampling: population/2 standard-normal noise vectors, each
/// emitted as a +/- pair around the center, in fixed order.
inline Population sample_population(const EsState& state, Rng& rng, std::size_t population) {
    require(population % 2 == 0, "sample_population: population must be even");
    const std::size_t dim = state.center.size();
    Population pop;
    pop.noise.resize(population / 2);
    pop.members.resize(population);
    for (std::size_t i = 0; i < population / 2; ++i) {
        Vec& eps = pop.noise[i];
        eps.resize(dim);
        for (double& e : eps) e = rng.normal();
        Genome plus, minus;
        plus.values.resize(dim);
        minus.values.resize(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            // one explicit rounding of the perturbation, so both members of
            // the pair apply bitwise the same delta
            double delta = rounded(state.sigma * eps[j]);
            plus.values[j] = state.center.values[j] + delta;
            minus.values[j] = state.center.values[j] - delta;
        }
        pop.members[2 * i] = std::move(plus);
        pop.members[2 * i + 1] = std::move(minus);
    }
    return pop;
}

/// Rank transform scaled to [-0.5, 0.5]: rank/(n-1) - 0.5 with ascending
/// ranks and ties broken by candidate index (stable sort).
inline Vec centered_ranks(std::span<const double> fitnesses) {
    const std::size_t n = fitnesses.size();
    require(n >= 2, "centered_ranks: need at least two fitnesses");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fitnesses[a] < fitnesses[b]; });
    Vec ranks(n);
    for (std::size_t rank = 0; rank < n; ++rank)
        ranks[order[rank]] = static_cast<double>(rank) / static_cast<double>(n - 1) - 0.5;
    return ranks;
}

/// Fitness penalty that separates otherwise-equal individuals:
/// adjusted = raw - weight_decay * mean(genome^2).
inline double fitness_with_decay(double raw_fitness, const Genome& genome, double weight_decay) {
    require(weight_decay >= 0.0, "fitness_with_decay: weight_decay must be >= 0");
    if (weight_decay == 0.0 || genome.size() == 0) return raw_fitness;
    double sq = 0.0;
    for (double v : genome.values) sq += v * v;
    return raw_fitness - weight_decay * (sq / static_cast<double>(genome.size()));
}

/// Gradient-ascent direction g = (1/(n*sigma)) * sum_i shaped_i * eps_i,
/// where mirrored pairs contribute (shaped+ - shaped-) * eps.
inline Vec estimate_update(const Population& pop, std::span<const double> shaped, double sigma) {
    require(sigma > 0.0, "estimate_update: sigma must be positive");
    const std::size_t n = pop.members.size();
    require(shaped.size() == n, "estimate_update: shaped fitness count mismatch");
    const std::size_t dim = pop.members.empty() ? 0 : pop.members.front().size();
    Vec g(dim, 0.0);
    for (std::size_t i = 0; i < pop.noise.size(); ++i) {
        double w = shaped[2 * i] - shaped[2 * i + 1];
        const Vec& eps = pop.noise[i];
        for (std::size_t j = 0; j < dim; ++j) g[j] += w * eps[j];
    }
    const double scale = 1.0 / (static_cast<double>(n) * sigma);
    for (double& v : g) v *= scale;
    return g;
}

/// One ascending Adam step on the center genome:
/// theta <- theta + lr * m_hat / (sqrt(v_hat) + eps).
inline void adam_step(EsState& state, std::span<const double> g) {
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    const std::size_t dim = state.center.size();
    require(g.size() == dim, "adam_step: gradient length mismatch");
    if (state.adam_m.empty()) state.adam_m.assign(dim, 0.0);
    if (state.adam_v.empty()) state.adam_v.assign(dim, 0.0);
    state.adam_t += 1;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.adam_t));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.adam_t));
    for (std::size_t j = 0; j < dim; ++j) {
        state.adam_m[j] = kBeta1 * state.adam_m[j] + (1.0 - kBeta1) * g[j];
        state.adam_v[j] = kBeta2 * state.adam_v[j] + (1.0 - kBeta2) * g[j] * g[j];
        double m_hat = state.adam_m[j] / bc1;
        double v_hat = state.adam_v[j] / bc2;
        state.center.values[j] += state.lr * m_hat / (std::sqrt(v_hat) + kEps);
    }
}

/// Per-generation annealing, clamped at the limits.
inline void decay_step(EsState& state, const EsConfig& config) {
    state.sigma = std::max(state.sigma * config.sigma_decay, config.sigma_limit);
    state.lr = std::max(state.lr * config.lr_decay, config.lr_limit);
}

namespace detail {

/// Training rollouts keep the input ordering fixed; only the
/// output-permutation variant trains under per-episode random orderings on
/// both ends, since robustness to those is the very thing it optimizes for.
inline EpisodeOptions training_episode_options(PolicyVariant variant, std::uint64_t seed) {
    EpisodeOptions opt;
    opt.seed = seed;
    if (variant == PolicyVariant::OutputPerm) {
        opt.input_schedule = PermutationSchedule::per_episode();
        opt.output_schedule = PermutationSchedule::per_episode();
    }
    return opt;
}

}  // namespace detail

/// Average return of `genome` over `episodes` rollouts with the given seed
/// stream tag. Used both for candidate fitness and mean-solution evaluation.
inline double evaluate_genome(const PolicySpec& spec, EnvId env, const Genome& genome,
                              std::uint64_t master_seed, std::uint64_t stream,
                              std::uint64_t generation, std::uint64_t index,
                              std::size_t episodes) {
    Policy policy = build(spec, genome);
    double total = 0.0;
    for (std::size_t ep = 0; ep < episodes; ++ep) {
        std::uint64_t seed = derive_seed(master_seed, {stream, generation, index, ep});
        EpisodeOptions opt = detail::training_episode_options(spec.variant, seed);
        total += run_episode(policy, env, opt).total_reward;
    }
    return total / static_cast<double>(episodes);
}

/// Fresh optimizer state with theta ~ N(0, init_std^2).
inline EsState init_es_state(const EsConfig& config, const PolicySpec& spec) {
    EsState state;
    state.master_seed = config.master_seed;
    state.sigma = config.sigma;
    state.lr = config.lr;
    const std::size_t dim = count_params(spec);
    state.center.values.resize(dim);
    Rng rng(derive_seed(config.master_seed, {0x696e6974}));  // "init" stream
    for (double& v : state.center.values) v = rng.normal(0.0, config.init_std);
    state.adam_m.assign(dim, 0.0);
    state.adam_v.assign(dim, 0.0);
    return state;
}

struct TrainResult {
    EsState state;
    std::vector<GenerationReport> curve;
    bool solved = false;
};

/// ES training loop: sample -> evaluate -> shape -> update -> decay, with
/// the mean solution evaluated every eval_every generations over
/// eval_episodes episodes; stops when that average reaches the solve
/// threshold or the generation cap. Candidate evaluations run on
/// config.workers threads; fitnesses are reduced in candidate-index order,
/// so the trajectory is bitwise independent of the worker count. Resumable:
/// pass the checkpointed state as `initial`.
inline TrainResult train(
    const EsConfig& config, const PolicySpec& spec, EnvId env,
    std::optional<EsState> initial = std::nullopt,
    const std::function<void(const GenerationReport&, const EsState&)>& on_report = {}) {
    config.validate();
    spec.validate();
    require(spec.n_actions == env_spec(env).n_actions,
            "train: policy/environment action count mismatch");

    TrainResult result;
    result.state = initial ? std::move(*initial) : init_es_state(config, spec);
    EsState& state = result.state;
    require(state.center.size() == count_params(spec),
            "train: checkpoint genome length does not match spec");

    constexpr std::uint64_t kNoiseStream = 1;
    constexpr std::uint64_t kFitStream = 2;
    constexpr std::uint64_t kEvalStream = 3;

    if (state.solved) {
        result.solved = true;
        return result;
    }

    while (state.generation < config.max_generations) {
        const std::uint64_t gen = state.generation;
        Rng noise_rng(derive_seed(state.master_seed, {kNoiseStream, gen}));
        Population pop = sample_population(state, noise_rng, config.population);

        Vec raw(pop.members.size());
        parallel_for(pop.members.size(), config.workers, [&](std::size_t i) {
            raw[i] = evaluate_genome(spec, env, pop.members[i], state.master_seed, kFitStream,
                                     gen, i, config.episodes_per_fitness);
        });

        Vec adjusted(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i)
            adjusted[i] = fitness_with_decay(raw[i], pop.members[i], config.weight_decay);
        Vec shaped = centered_ranks(adjusted);
        Vec g = estimate_update(pop, shaped, state.sigma);
        adam_step(state, g);
        decay_step(state, config);
        state.generation += 1;

        GenerationReport report;
        report.generation = state.generation;
        report.sigma = state.sigma;
        report.lr = state.lr;
        report.fit_max = *std::max_element(raw.begin(), raw.end());
        report.fit_min = *std::min_element(raw.begin(), raw.end());
        double mean = 0.0;
        for (double v : raw) mean += v;
        mean /= static_cast<double>(raw.size());
        double var = 0.0;
        for (double v : raw) var += (v - mean) * (v - mean);
        report.fit_mean = mean;
        report.fit_std = std::sqrt(var / static_cast<double>(raw.size()));

        if (state.generation % config.eval_every == 0) {
            Policy center_policy = build(spec, state.center);
            Vec scores(config.eval_episodes);
            parallel_for(config.eval_episodes, config.workers, [&](std::size_t ep) {
                std::uint64_t seed =
                    derive_seed(state.master_seed, {kEvalStream, state.generation, ep});
                EpisodeOptions opt = detail::training_episode_options(spec.variant, seed);
                scores[ep] = run_episode(center_policy, env, opt).total_reward;
            });
            double eval_mean = 0.0;
            for (double v : scores) eval_mean += v;
            eval_mean /= static_cast<double>(scores.size());
            report.eval_score = eval_mean;
            state.last_eval_score = eval_mean;
            if (eval_mean >= config.solve_threshold) state.solved = true;
        }

        result.curve.push_back(report);
        if (on_report) on_report(report, state);
        if (state.solved) break;
    }

    result.solved = state.solved;
    return result;
}

}  // namespace slotnet
