#pragma once

#include <cstddef>
#include <vector>

#include "reference_cells.hpp"
#include "slotnet/cells.hpp"
#include "slotnet/rng.hpp"

namespace testutil {

/// Fills a cell/matrix with a reproducible random stream. Both the library
/// structures and the reference-oracle structures are filled from the same
/// stream so they describe the same parameters.
inline void fill_mat(slotnet::Mat& m, refimpl::M& ref, slotnet::Rng& rng, double scale = 1.0) {
    ref.assign(m.rows, refimpl::V(m.cols, 0.0));
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) {
            double v = rng.normal(0.0, scale);
            m(i, j) = v;
            ref[i][j] = v;
        }
}

inline void fill_vec(slotnet::Vec& v, refimpl::V& ref, slotnet::Rng& rng, double scale = 1.0) {
    ref.assign(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        double x = rng.normal(0.0, scale);
        v[i] = x;
        ref[i] = x;
    }
}

inline std::pair<slotnet::GruParams, refimpl::GruRef> random_gru(std::size_t in,
                                                                 std::size_t hidden,
                                                                 std::size_t out,
                                                                 slotnet::Rng& rng,
                                                                 double scale = 0.5) {
    slotnet::GruParams p(in, hidden, out);
    refimpl::GruRef r;
    fill_mat(p.w_z, r.wz, rng, scale);
    fill_vec(p.b_z, r.bz, rng, scale);
    fill_mat(p.w_r, r.wr, rng, scale);
    fill_vec(p.b_r, r.br, rng, scale);
    fill_mat(p.w_g, r.wg, rng, scale);
    fill_vec(p.b_g, r.bg, rng, scale);
    fill_mat(p.w_o, r.wo, rng, scale);
    fill_vec(p.b_o, r.bo, rng, scale);
    return {std::move(p), std::move(r)};
}

inline std::pair<slotnet::FeedbackParams, refimpl::GatesRef> random_gates(std::size_t in,
                                                                          std::size_t hidden,
                                                                          slotnet::Rng& rng,
                                                                          double scale = 0.5) {
    slotnet::FeedbackParams p(in, hidden);
    refimpl::GatesRef r;
    fill_mat(p.w_z, r.wz, rng, scale);
    fill_vec(p.b_z, r.bz, rng, scale);
    fill_mat(p.w_r, r.wr, rng, scale);
    fill_vec(p.b_r, r.br, rng, scale);
    fill_mat(p.w_g, r.wg, rng, scale);
    fill_vec(p.b_g, r.bg, rng, scale);
    return {std::move(p), std::move(r)};
}

inline slotnet::Vec random_vec(std::size_t n, slotnet::Rng& rng, double scale = 1.0) {
    slotnet::Vec v(n);
    for (double& x : v) x = rng.normal(0.0, scale);
    return v;
}

}  // namespace testutil
