#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "slotnet/cells.hpp"
#include "slotnet/common.hpp"
#include "slotnet/rng.hpp"

namespace slotnet {

/// The seven model variants. All but StandardRnn route each observation
/// element through its own parameter-shared slot and aggregate by mean,
/// which is what buys permutation and size invariance.
enum class PolicyVariant {
    Full,           // recurrent slots + integrator + feedback + dense head
    NoFeedback,     // recurrent slots + integrator + dense head
    IntegratorFfn,  // recurrent slots + dense head; dense1 output fed back
    InputFfn,       // feedforward slots + integrator + dense head
    NoRnn,          // feedforward slots + deep dense head, no recurrence
    StandardRnn,    // one plain recurrent cell over the whole observation
    OutputPerm,     // Full front half + parameter-shared recurrent output units
};

constexpr std::array<PolicyVariant, 7> kAllVariants = {
    PolicyVariant::Full,         PolicyVariant::NoFeedback, PolicyVariant::IntegratorFfn,
    PolicyVariant::InputFfn,     PolicyVariant::NoRnn,      PolicyVariant::StandardRnn,
    PolicyVariant::OutputPerm,
};

inline const char* variant_name(PolicyVariant v) {
    switch (v) {
        case PolicyVariant::Full: return "full";
        case PolicyVariant::NoFeedback: return "no-feedback";
        case PolicyVariant::IntegratorFfn: return "integrator-ffn";
        case PolicyVariant::InputFfn: return "input-ffn";
        case PolicyVariant::NoRnn: return "no-rnn";
        case PolicyVariant::StandardRnn: return "standard-rnn";
        case PolicyVariant::OutputPerm: return "output-perm";
    }
    throw ConfigError("variant_name: unknown variant");
}

inline PolicyVariant variant_from_name(const std::string& name) {
    for (PolicyVariant v : kAllVariants)
        if (name == variant_name(v)) return v;
    throw ConfigError("unknown model variant: " + name);
}

inline bool has_recurrent_slots(PolicyVariant v) {
    return v == PolicyVariant::Full || v == PolicyVariant::NoFeedback ||
           v == PolicyVariant::IntegratorFfn || v == PolicyVariant::OutputPerm;
}

inline bool has_slots(PolicyVariant v) { return v != PolicyVariant::StandardRnn; }

/// Invariance by construction: every slot variant. (OutputPerm is also
/// input-invariant but its action only depends on output-unit hidden
/// asymmetry, so it is treated separately where that matters.)
inline bool is_input_invariant(PolicyVariant v) {
    return has_slots(v) && v != PolicyVariant::OutputPerm;
}

struct PolicySpec {
    PolicyVariant variant = PolicyVariant::Full;
    std::size_t n_inputs = 0;   // observation element count
    std::size_t n_actions = 0;  // discrete action count

    // Architecture sizes; defaults are the reference configuration.
    std::size_t unit_in = 8;            // each scalar observation is copied this many times
    std::size_t unit_hidden = 16;
    std::size_t unit_out = 24;
    std::size_t integrator_hidden = 16;
    std::size_t integrator_out = 24;
    std::size_t dense1 = 32;
    std::size_t rnn_hidden = 16;        // StandardRnn hidden and output width
    double hidden_init_std = 0.05;      // episode-start hidden noise, N(0, std^2)

    void validate() const {
        require(n_inputs >= 1, "PolicySpec: n_inputs must be >= 1");
        require(n_actions >= 2, "PolicySpec: n_actions must be >= 2");
        require(unit_in >= 1 && unit_hidden >= 1 && unit_out >= 1,
                "PolicySpec: unit sizes must be positive");
    }
};

// Hidden widths of the feedforward slot stack (between unit_in and unit_out)
// and of the deep dense head used when no recurrence is present.
inline constexpr std::array<std::size_t, 3> kFfnSlotHidden = {32, 24, 24};
inline constexpr std::array<std::size_t, 6> kNoRnnHeadWidths = {24, 32, 24, 24, 16, 32};

/// Instantiated parameters of one model. Which blocks are populated depends
/// on the variant; all slots (and all output units) share one block each.
struct Policy {
    PolicySpec spec;
    GruParams unit_gru;        // recurrent slot cell
    MlpParams unit_mlp;        // feedforward slot stack
    FeedbackParams feedback;   // shared hidden-state adjustment gates
    GruParams integrator;      // integrator cell; also StandardRnn's core cell
    MlpParams head;            // dense layers after the integrator / aggregate
    GruParams output_unit;     // shared output cell (OutputPerm)
};

/// Per-episode mutable state. Slot count follows the observation length in
/// use, which may differ from the length the parameters were optimized for.
struct PolicyState {
    std::vector<GruState> input_states;   // empty for feedforward slots
    GruState integrator_state;            // empty h when absent
    std::vector<GruState> output_states;  // OutputPerm only
};

struct GenomeSegment {
    std::string name;
    std::size_t offset = 0;
    std::size_t length = 0;
    std::size_t rows = 0;  // 0 for vectors
    std::size_t cols = 0;
};

struct GenomeLayout {
    std::vector<GenomeSegment> segments;
    std::size_t total = 0;
};

/// Flat parameter vector; the unit the optimizer perturbs.
struct Genome {
    Vec values;
    std::size_t size() const { return values.size(); }
};

namespace detail {

inline MlpLayer dense_layer(std::size_t in, std::size_t out, bool with_bias, bool tanh_act) {
    MlpLayer layer;
    layer.w = Mat(out, in);
    if (with_bias) layer.b.assign(out, 0.0);
    layer.tanh_activation = tanh_act;
    return layer;
}

inline MlpParams ffn_slot_stack(const PolicySpec& spec) {
    MlpParams mlp;
    std::size_t prev = spec.unit_in;
    for (std::size_t width : kFfnSlotHidden) {
        mlp.layers.push_back(dense_layer(prev, width, /*bias=*/true, /*tanh=*/true));
        prev = width;
    }
    mlp.layers.push_back(dense_layer(prev, spec.unit_out, true, true));
    return mlp;
}

/// dense1 (tanh) -> dense2 (linear logits). The invariant variants carry no
/// biases here; the plain recurrent baseline does.
inline MlpParams dense_head(std::size_t in, std::size_t dense1, std::size_t n_actions,
                            bool with_bias) {
    MlpParams mlp;
    mlp.layers.push_back(dense_layer(in, dense1, with_bias, true));
    mlp.layers.push_back(dense_layer(dense1, n_actions, with_bias, false));
    return mlp;
}

inline MlpParams no_rnn_head(const PolicySpec& spec) {
    MlpParams mlp;
    std::size_t prev = spec.unit_out;
    for (std::size_t width : kNoRnnHeadWidths) {
        mlp.layers.push_back(dense_layer(prev, width, true, true));
        prev = width;
    }
    mlp.layers.push_back(dense_layer(prev, spec.n_actions, false, false));
    return mlp;
}

/// Visits every parameter tensor in genome order. The packer, the unpacker,
/// the layout table and the parameter count all walk this one enumeration,
/// so they cannot drift apart. Matrices are row-major.
template <class PolicyT, class Fn>
void visit_params(PolicyT& p, Fn&& fn) {
    auto gru = [&](const std::string& prefix, auto& cell) {
        fn(prefix + ".w_z", cell.w_z);
        fn(prefix + ".b_z", cell.b_z);
        fn(prefix + ".w_r", cell.w_r);
        fn(prefix + ".b_r", cell.b_r);
        fn(prefix + ".w_g", cell.w_g);
        fn(prefix + ".b_g", cell.b_g);
        fn(prefix + ".w_o", cell.w_o);
        fn(prefix + ".b_o", cell.b_o);
    };
    auto gates = [&](const std::string& prefix, auto& cell) {
        fn(prefix + ".w_z", cell.w_z);
        fn(prefix + ".b_z", cell.b_z);
        fn(prefix + ".w_r", cell.w_r);
        fn(prefix + ".b_r", cell.b_r);
        fn(prefix + ".w_g", cell.w_g);
        fn(prefix + ".b_g", cell.b_g);
    };
    auto mlp = [&](const std::string& prefix, auto& stack, std::size_t first_index) {
        for (std::size_t i = 0; i < stack.layers.size(); ++i) {
            auto& layer = stack.layers[i];
            std::string base = prefix + std::to_string(first_index + i);
            fn(base + ".w", layer.w);
            if (!layer.b.empty()) fn(base + ".b", layer.b);
        }
    };
    auto dense_pair = [&](auto& stack) {
        auto& d1 = stack.layers[0];
        auto& d2 = stack.layers[1];
        fn("dense1.w", d1.w);
        if (!d1.b.empty()) fn("dense1.b", d1.b);
        fn("dense2.w", d2.w);
        if (!d2.b.empty()) fn("dense2.b", d2.b);
    };

    switch (p.spec.variant) {
        case PolicyVariant::Full:
            gru("input_unit", p.unit_gru);
            gates("feedback", p.feedback);
            gru("integrator", p.integrator);
            dense_pair(p.head);
            break;
        case PolicyVariant::NoFeedback:
            gru("input_unit", p.unit_gru);
            gru("integrator", p.integrator);
            dense_pair(p.head);
            break;
        case PolicyVariant::IntegratorFfn:
            gru("input_unit", p.unit_gru);
            gates("feedback", p.feedback);
            dense_pair(p.head);
            break;
        case PolicyVariant::InputFfn:
            mlp("input_unit.layer", p.unit_mlp, 0);
            gru("integrator", p.integrator);
            dense_pair(p.head);
            break;
        case PolicyVariant::NoRnn:
            mlp("input_unit.layer", p.unit_mlp, 0);
            mlp("head.layer", p.head, 0);
            break;
        case PolicyVariant::StandardRnn:
            gru("rnn", p.integrator);
            dense_pair(p.head);
            break;
        case PolicyVariant::OutputPerm:
            gru("input_unit", p.unit_gru);
            gates("feedback", p.feedback);
            gru("integrator", p.integrator);
            gru("output_unit", p.output_unit);
            break;
    }
}

}  // namespace detail

/// A policy with the right shapes for `spec` and all parameters zero.
inline Policy make_policy(const PolicySpec& spec) {
    spec.validate();
    Policy p;
    p.spec = spec;
    const std::size_t integ_in = spec.unit_out;
    switch (spec.variant) {
        case PolicyVariant::Full:
        case PolicyVariant::OutputPerm:
            p.unit_gru = GruParams(spec.unit_in, spec.unit_hidden, spec.unit_out);
            p.feedback = FeedbackParams(spec.integrator_out, spec.unit_hidden);
            p.integrator = GruParams(integ_in, spec.integrator_hidden, spec.integrator_out);
            if (spec.variant == PolicyVariant::OutputPerm)
                p.output_unit = GruParams(spec.integrator_out, spec.unit_hidden, spec.unit_out);
            else
                p.head = detail::dense_head(spec.integrator_out, spec.dense1, spec.n_actions, false);
            break;
        case PolicyVariant::NoFeedback:
            p.unit_gru = GruParams(spec.unit_in, spec.unit_hidden, spec.unit_out);
            p.integrator = GruParams(integ_in, spec.integrator_hidden, spec.integrator_out);
            p.head = detail::dense_head(spec.integrator_out, spec.dense1, spec.n_actions, false);
            break;
        case PolicyVariant::IntegratorFfn:
            p.unit_gru = GruParams(spec.unit_in, spec.unit_hidden, spec.unit_out);
            // dense1's activated output is the feedback signal here
            p.feedback = FeedbackParams(spec.dense1, spec.unit_hidden);
            p.head = detail::dense_head(spec.unit_out, spec.dense1, spec.n_actions, false);
            break;
        case PolicyVariant::InputFfn:
            p.unit_mlp = detail::ffn_slot_stack(spec);
            p.integrator = GruParams(integ_in, spec.integrator_hidden, spec.integrator_out);
            p.head = detail::dense_head(spec.integrator_out, spec.dense1, spec.n_actions, false);
            break;
        case PolicyVariant::NoRnn:
            p.unit_mlp = detail::ffn_slot_stack(spec);
            p.head = detail::no_rnn_head(spec);
            break;
        case PolicyVariant::StandardRnn:
            p.integrator = GruParams(spec.n_inputs, spec.rnn_hidden, spec.rnn_hidden);
            p.head = detail::dense_head(spec.rnn_hidden, spec.dense1, spec.n_actions, true);
            break;
    }
    return p;
}

inline GenomeLayout genome_layout(const PolicySpec& spec) {
    Policy p = make_policy(spec);
    GenomeLayout layout;
    detail::visit_params(p, [&](const std::string& name, const auto& tensor) {
        GenomeSegment seg;
        seg.name = name;
        seg.offset = layout.total;
        if constexpr (std::is_same_v<std::decay_t<decltype(tensor)>, Mat>) {
            seg.length = tensor.size();
            seg.rows = tensor.rows;
            seg.cols = tensor.cols;
        } else {
            seg.length = tensor.size();
        }
        layout.segments.push_back(seg);
        layout.total += seg.length;
    });
    return layout;
}

/// Number of optimized parameters for a spec; equals the packed genome length.
inline std::size_t count_params(const PolicySpec& spec) { return genome_layout(spec).total; }

inline Genome pack(const Policy& p) {
    Genome g;
    detail::visit_params(p, [&](const std::string&, const auto& tensor) {
        if constexpr (std::is_same_v<std::decay_t<decltype(tensor)>, Mat>)
            g.values.insert(g.values.end(), tensor.a.begin(), tensor.a.end());
        else
            g.values.insert(g.values.end(), tensor.begin(), tensor.end());
    });
    return g;
}

/// Instantiates a policy from a flat genome. All input units reference the
/// one shared block this fills; the same goes for output units.
inline Policy build(const PolicySpec& spec, const Genome& genome) {
    Policy p = make_policy(spec);
    std::size_t offset = 0;
    detail::visit_params(p, [&](const std::string& name, auto& tensor) {
        double* dst;
        std::size_t len;
        if constexpr (std::is_same_v<std::decay_t<decltype(tensor)>, Mat>) {
            dst = tensor.a.data();
            len = tensor.size();
        } else {
            dst = tensor.data();
            len = tensor.size();
        }
        require(offset + len <= genome.values.size(),
                "build: genome too short at segment " + name);
        std::copy_n(genome.values.data() + offset, len, dst);
        offset += len;
    });
    require(offset == genome.values.size(),
            "build: genome length does not match spec parameter count");
    return p;
}

/// Fresh episode state: every hidden element i.i.d. N(0, hidden_init_std^2).
/// `n_slots` overrides the slot count for runs whose observation length
/// differs from the spec (input doubling); 0 keeps spec.n_inputs.
inline PolicyState reset(const Policy& p, Rng& rng, std::size_t n_slots = 0) {
    const PolicySpec& spec = p.spec;
    if (n_slots == 0) n_slots = spec.n_inputs;
    PolicyState st;
    auto draw = [&](std::size_t len) {
        Vec h(len);
        for (double& v : h) v = rng.normal(0.0, spec.hidden_init_std);
        return h;
    };
    if (has_recurrent_slots(spec.variant)) {
        st.input_states.resize(n_slots);
        for (auto& s : st.input_states) s.h = draw(spec.unit_hidden);
    }
    switch (spec.variant) {
        case PolicyVariant::Full:
        case PolicyVariant::NoFeedback:
        case PolicyVariant::InputFfn:
            st.integrator_state.h = draw(spec.integrator_hidden);
            break;
        case PolicyVariant::StandardRnn:
            st.integrator_state.h = draw(spec.rnn_hidden);
            break;
        case PolicyVariant::OutputPerm:
            st.integrator_state.h = draw(spec.integrator_hidden);
            st.output_states.resize(spec.n_actions);
            for (auto& s : st.output_states) s.h = draw(spec.unit_hidden);
            break;
        case PolicyVariant::IntegratorFfn:
        case PolicyVariant::NoRnn:
            break;
    }
    return st;
}

struct ActResult {
    int action = 0;
    PolicyState state;
    Vec aggregated;  // mean of slot outputs (empty for StandardRnn)
    Vec logits;      // head output, or per-output-unit logits
};

namespace detail {

inline Vec apply_layer(const MlpLayer& layer, std::span<const double> x) {
    require(layer.w.cols == x.size(), "dense layer: input length mismatch");
    Vec out(layer.w.rows);
    for (std::size_t i = 0; i < layer.w.rows; ++i) {
        double acc = dot4(layer.w.row(i), x.data(), x.size());
        if (!layer.b.empty()) acc += layer.b[i];
        out[i] = layer.tanh_activation ? std::tanh(acc) : acc;
    }
    return out;
}

/// Component-wise mean of the slot outputs, computed with the exact
/// accumulator so the result depends only on the multiset of outputs.
inline Vec exact_mean(const std::vector<Vec>& outs) {
    const std::size_t n = outs.size();
    const std::size_t width = outs.front().size();
    Vec mean(width);
    ExactSum acc;
    for (std::size_t j = 0; j < width; ++j) {
        acc.reset();
        for (std::size_t i = 0; i < n; ++i) acc.add(outs[i][j]);
        mean[j] = acc.total() / static_cast<double>(n);
    }
    return mean;
}

}  // namespace detail

/// One policy step: observation in, discrete action out. Pure with respect
/// to `state`; the successor state is returned. The slot count of `state` is
/// authoritative: an observation of a different length is a reconfiguration
/// error and the caller must build a fresh state.
inline ActResult act(const Policy& p, const PolicyState& state, std::span<const double> obs) {
    const PolicySpec& spec = p.spec;
    ActResult res;

    if (spec.variant == PolicyVariant::StandardRnn) {
        if (obs.size() != p.integrator.in)
            throw StateMismatch("standard-rnn cannot accept a different observation length");
        auto [h, o] = gru_step(p.integrator, state.integrator_state, obs);
        res.state.integrator_state = std::move(h);
        res.logits = detail::apply_layer(p.head.layers[1],
                                         detail::apply_layer(p.head.layers[0], o));
        res.action = static_cast<int>(argmax(res.logits));
        return res;
    }

    const bool recurrent_slots = has_recurrent_slots(spec.variant);
    const std::size_t n_slots = recurrent_slots ? state.input_states.size() : obs.size();
    if (recurrent_slots && obs.size() != n_slots)
        throw StateMismatch("observation length does not match slot states; rebuild the state");

    // Each scalar observation element is copied unit_in times and routed
    // through its own slot; all slots share parameters.
    std::vector<Vec> outs(n_slots);
    Vec xbuf(spec.unit_in);
    res.state = state;
    for (std::size_t i = 0; i < n_slots; ++i) {
        xbuf.assign(spec.unit_in, obs[i]);
        if (recurrent_slots) {
            auto [h, o] = gru_step(p.unit_gru, state.input_states[i], xbuf);
            res.state.input_states[i] = std::move(h);
            outs[i] = std::move(o);
        } else {
            outs[i] = mlp_forward(p.unit_mlp, xbuf);
        }
    }
    res.aggregated = detail::exact_mean(outs);

    Vec feedback_signal;
    switch (spec.variant) {
        case PolicyVariant::Full:
        case PolicyVariant::NoFeedback: {
            auto [h, o] = gru_step(p.integrator, state.integrator_state, res.aggregated);
            res.state.integrator_state = std::move(h);
            res.logits = detail::apply_layer(p.head.layers[1],
                                             detail::apply_layer(p.head.layers[0], o));
            if (spec.variant == PolicyVariant::Full) feedback_signal = std::move(o);
            break;
        }
        case PolicyVariant::IntegratorFfn: {
            Vec d1 = detail::apply_layer(p.head.layers[0], res.aggregated);
            res.logits = detail::apply_layer(p.head.layers[1], d1);
            feedback_signal = std::move(d1);
            break;
        }
        case PolicyVariant::InputFfn: {
            auto [h, o] = gru_step(p.integrator, state.integrator_state, res.aggregated);
            res.state.integrator_state = std::move(h);
            res.logits = detail::apply_layer(p.head.layers[1],
                                             detail::apply_layer(p.head.layers[0], o));
            break;
        }
        case PolicyVariant::NoRnn:
            res.logits = mlp_forward(p.head, res.aggregated);
            break;
        case PolicyVariant::OutputPerm: {
            auto [h, o] = gru_step(p.integrator, state.integrator_state, res.aggregated);
            res.state.integrator_state = std::move(h);
            // The integrator output is broadcast identically to every output
            // unit; a unit's logit is the mean of its own output vector.
            res.logits.resize(state.output_states.size());
            for (std::size_t u = 0; u < state.output_states.size(); ++u) {
                auto [uh, uo] = gru_step(p.output_unit, state.output_states[u], o);
                res.state.output_states[u] = std::move(uh);
                double acc = 0.0;
                for (double v : uo) acc += v;
                res.logits[u] = acc / static_cast<double>(uo.size());
            }
            feedback_signal = std::move(o);
            break;
        }
        case PolicyVariant::StandardRnn:
            break;  // handled above
    }

    if (p.feedback.present() && !feedback_signal.empty()) {
        for (auto& slot : res.state.input_states)
            slot = feedback_step(p.feedback, slot, feedback_signal);
    }

    res.action = static_cast<int>(argmax(res.logits));
    return res;
}

}  // namespace slotnet
