#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "slotnet/common.hpp"
#include "slotnet/envs.hpp"
#include "slotnet/evo.hpp"
#include "slotnet/policy.hpp"

namespace slotnet {

/// Self-describing training snapshot: text metadata plus the full numeric
/// payload (center genome and Adam moments) in hexadecimal float form, so a
/// save/load round trip is bitwise exact and the file stays inspectable.
struct Checkpoint {
    std::string variant;
    std::string env;
    std::size_t n_inputs = 0;
    std::size_t n_actions = 0;
    EsState state;
};

namespace detail {

inline std::string hex_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

inline double parse_hex_double(const std::string& s) {
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    require(end != begin && *end == '\0', "checkpoint: malformed float: " + s);
    return v;
}

inline void write_vec(std::ostream& os, const std::string& key, const Vec& v) {
    os << key << ' ' << v.size() << '\n';
    for (double x : v) os << hex_double(x) << '\n';
}

inline Vec read_vec(std::istream& is, const std::string& key) {
    std::string word;
    std::size_t n = 0;
    is >> word >> n;
    require(bool(is) && word == key, "checkpoint: expected section '" + key + "'");
    Vec v(n);
    for (double& x : v) {
        is >> word;
        require(bool(is), "checkpoint: truncated section '" + key + "'");
        x = parse_hex_double(word);
    }
    return v;
}

}  // namespace detail

inline PolicySpec checkpoint_spec(const Checkpoint& c) {
    PolicySpec spec;
    spec.variant = variant_from_name(c.variant);
    spec.n_inputs = c.n_inputs;
    spec.n_actions = c.n_actions;
    return spec;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
    std::ostringstream os;
    os << "slotnet-checkpoint v1\n";
    os << "variant: " << c.variant << '\n';
    os << "env: " << c.env << '\n';
    os << "n_inputs: " << c.n_inputs << '\n';
    os << "n_actions: " << c.n_actions << '\n';
    os << "generation: " << c.state.generation << '\n';
    os << "adam_t: " << c.state.adam_t << '\n';
    os << "master_seed: " << c.state.master_seed << '\n';
    os << "solved: " << (c.state.solved ? 1 : 0) << '\n';
    os << "sigma: " << detail::hex_double(c.state.sigma) << '\n';
    os << "lr: " << detail::hex_double(c.state.lr) << '\n';
    os << "eval_score: "
       << (c.state.last_eval_score ? detail::hex_double(*c.state.last_eval_score)
                                   : std::string("none"))
       << '\n';
    detail::write_vec(os, "params", c.state.center.values);
    detail::write_vec(os, "adam_m", c.state.adam_m);
    detail::write_vec(os, "adam_v", c.state.adam_v);

    // write-then-rename so a crash never leaves a half-written checkpoint
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        require(bool(out), "cannot open for writing: " + tmp.string());
        out << os.str();
        require(bool(out), "write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(bool(in), "cannot open checkpoint: " + path.string());
    std::string line;
    std::getline(in, line);
    require(line == "slotnet-checkpoint v1", "not a checkpoint file: " + path.string());

    Checkpoint c;
    auto read_kv = [&](const std::string& key) {
        std::string word;
        in >> word;
        require(bool(in) && word == key + ":", "checkpoint: expected key '" + key + "'");
        in >> word;
        require(bool(in), "checkpoint: missing value for '" + key + "'");
        return word;
    };
    c.variant = read_kv("variant");
    c.env = read_kv("env");
    c.n_inputs = std::stoull(read_kv("n_inputs"));
    c.n_actions = std::stoull(read_kv("n_actions"));
    c.state.generation = std::stoull(read_kv("generation"));
    c.state.adam_t = std::stoull(read_kv("adam_t"));
    c.state.master_seed = std::stoull(read_kv("master_seed"));
    c.state.solved = read_kv("solved") == "1";
    c.state.sigma = detail::parse_hex_double(read_kv("sigma"));
    c.state.lr = detail::parse_hex_double(read_kv("lr"));
    std::string eval = read_kv("eval_score");
    if (eval != "none") c.state.last_eval_score = detail::parse_hex_double(eval);
    c.state.center.values = detail::read_vec(in, "params");
    c.state.adam_m = detail::read_vec(in, "adam_m");
    c.state.adam_v = detail::read_vec(in, "adam_v");

    // the metadata dimension table must agree with the payload
    PolicySpec spec = checkpoint_spec(c);
    require(count_params(spec) == c.state.center.size(),
            "checkpoint: genome length does not match the declared architecture");
    require(c.state.adam_m.size() == c.state.center.size() &&
                c.state.adam_v.size() == c.state.center.size(),
            "checkpoint: moment vectors must match the genome length");
    return c;
}

/// Human-readable genome segment table, written alongside checkpoints.
inline void save_layout_manifest(const std::filesystem::path& path, const PolicySpec& spec) {
    GenomeLayout layout = genome_layout(spec);
    std::ofstream out(path);
    require(bool(out), "cannot open for writing: " + path.string());
    out << "genome layout for variant=" << variant_name(spec.variant)
        << " n_inputs=" << spec.n_inputs << " n_actions=" << spec.n_actions << '\n';
    out << "total " << layout.total << '\n';
    out << "segment offset length rows cols\n";
    for (const GenomeSegment& seg : layout.segments) {
        out << seg.name << ' ' << seg.offset << ' ' << seg.length << ' ' << seg.rows << ' '
            << seg.cols << '\n';
    }
}

}  // namespace slotnet
