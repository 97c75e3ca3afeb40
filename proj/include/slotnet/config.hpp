#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>

#include "slotnet/common.hpp"
#include "slotnet/envs.hpp"
#include "slotnet/evo.hpp"
#include "slotnet/policy.hpp"

namespace slotnet {

/// One training run, fully described. Defaults are filled from
/// EsConfig::defaults_for once env and model are known.
struct RunConfig {
    EnvId env = EnvId::CartPole;
    PolicyVariant variant = PolicyVariant::Full;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    EsConfig es;

    PolicySpec policy_spec() const {
        const EnvSpec e = env_spec(env);
        PolicySpec spec;
        spec.variant = variant;
        spec.n_inputs = e.obs_dim;
        spec.n_actions = e.n_actions;
        return spec;
    }
};

namespace detail {

inline std::optional<std::pair<std::string, std::string>> parse_config_line(std::string line) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r\n");
        auto e = s.find_last_not_of(" \t\r\n");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) return std::nullopt;
    auto eq = line.find('=');
    require(eq != std::string::npos, "config: expected 'key = value', got: " + line);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    require(!key.empty() && !value.empty(), "config: empty key or value in: " + line);
    return std::make_pair(key, value);
}

}  // namespace detail

/// Flat key = value text. Every key documented in the README is accepted;
/// anything else is rejected. env and model must be set before numeric
/// overrides are applied so that environment/variant defaults land first.
inline RunConfig parse_run_config(const std::map<std::string, std::string>& kv) {
    RunConfig cfg;
    auto find = [&](const char* key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };
    if (auto v = find("env")) cfg.env = env_from_name(*v);
    if (auto v = find("model")) cfg.variant = variant_from_name(*v);
    cfg.es = EsConfig::defaults_for(cfg.env, cfg.variant);
    for (const auto& [key, value] : kv) {
        if (key == "env" || key == "model") continue;
        if (key == "seed") {
            cfg.seed = std::stoull(value);
            cfg.es.master_seed = cfg.seed;
        } else if (key == "out") {
            cfg.out_dir = value;
        } else if (key == "generations") {
            cfg.es.max_generations = std::stoull(value);
        } else if (key == "population") {
            cfg.es.population = std::stoull(value);
        } else if (key == "lr") {
            cfg.es.lr = std::stod(value);
        } else if (key == "lr_decay") {
            cfg.es.lr_decay = std::stod(value);
        } else if (key == "lr_limit") {
            cfg.es.lr_limit = std::stod(value);
        } else if (key == "sigma") {
            cfg.es.sigma = std::stod(value);
        } else if (key == "sigma_decay") {
            cfg.es.sigma_decay = std::stod(value);
        } else if (key == "sigma_limit") {
            cfg.es.sigma_limit = std::stod(value);
        } else if (key == "weight_decay") {
            cfg.es.weight_decay = std::stod(value);
        } else if (key == "eval_every") {
            cfg.es.eval_every = std::stoull(value);
        } else if (key == "eval_episodes") {
            cfg.es.eval_episodes = std::stoull(value);
        } else if (key == "episodes_per_fitness") {
            cfg.es.episodes_per_fitness = std::stoull(value);
        } else if (key == "init_std") {
            cfg.es.init_std = std::stod(value);
        } else if (key == "workers") {
            cfg.es.workers = std::stoull(value);
        } else if (key == "solve_threshold") {
            cfg.es.solve_threshold = std::stod(value);
        } else {
            throw ConfigError("config: unknown key: " + key);
        }
    }
    return cfg;
}

inline std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(bool(in), "cannot open config: " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (auto pair = detail::parse_config_line(line)) {
            require(!kv.count(pair->first), "config: duplicate key: " + pair->first);
            kv.emplace(std::move(*pair));
        }
    }
    return kv;
}

}  // namespace slotnet
