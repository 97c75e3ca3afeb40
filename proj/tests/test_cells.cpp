#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "slotnet/cells.hpp"
#include "slotnet/rng.hpp"
#include "support/reference_cells.hpp"
#include "support/test_util.hpp"

using namespace slotnet;

// Expected values computed once with the scripted reference implementations
// in support/reference_cells.hpp (same seeds, oracle path only).
namespace {
constexpr double kFrozenGruH0 = -0.22664587508464021;
constexpr double kFrozenGruH1 = 0.71484905406047727;
constexpr double kFrozenGruH2 = 0.21311369626813764;
constexpr double kFrozenMlpOut0 = -0.67448779366392653;
}  // namespace

TEST_CASE("gru_step with all-zero parameters", "[cells]") {
    GruParams p(2, 3, 2);
    GruState s{Vec(3, 0.0)};
    auto [next, out] = gru_step(p, s, Vec{0.7, -0.3});
    for (double h : next.h) CHECK(h == 0.0);   // z=0.5, g=0 -> h'=0
    for (double o : out) CHECK(o == 0.0);
    CHECK(s.h == Vec(3, 0.0));  // input state untouched
}

TEST_CASE("saturated update gate preserves the hidden state", "[cells]") {
    GruParams p(2, 3, 2);
    for (double& b : p.b_z) b = -1e6;
    GruState s{Vec{0.4, -0.2, 0.9}};
    auto [next, out] = gru_step(p, s, Vec{1.0, 2.0});
    CHECK(next.h == s.h);
    (void)out;
}

TEST_CASE("gru_step matches the scripted recomputation over 5 steps", "[cells]") {
    Rng rng(42);
    auto [p, ref] = testutil::random_gru(2, 3, 2, rng);
    GruState s{testutil::random_vec(3, rng, 0.1)};
    refimpl::V ref_h = s.h;
    Vec x(2);
    for (int t = 0; t < 5; ++t) {
        x = testutil::random_vec(2, rng);
        auto [next, out] = gru_step(p, s, x);
        auto [ref_next, ref_out] = refimpl::gru_step(ref, ref_h, {x[0], x[1]});
        for (std::size_t i = 0; i < next.h.size(); ++i)
            CHECK(next.h[i] == Catch::Approx(ref_next[i]).margin(1e-12));
        for (std::size_t i = 0; i < out.size(); ++i)
            CHECK(out[i] == Catch::Approx(ref_out[i]).margin(1e-12));
        s = next;
        ref_h = ref_next;
    }
    // frozen digest of the final hidden state, computed with the oracle
    CHECK(s.h[0] == Catch::Approx(kFrozenGruH0).margin(1e-12));
    CHECK(s.h[1] == Catch::Approx(kFrozenGruH1).margin(1e-12));
    CHECK(s.h[2] == Catch::Approx(kFrozenGruH2).margin(1e-12));
}

TEST_CASE("gru_step rejects mismatched dimensions", "[cells]") {
    GruParams p(2, 3, 2);
    GruState s{Vec(3, 0.0)};
    CHECK_THROWS_AS(gru_step(p, s, Vec{1.0}), ConfigError);
    GruState bad{Vec(2, 0.0)};
    CHECK_THROWS_AS(gru_step(p, bad, Vec{1.0, 2.0}), ConfigError);
}

TEST_CASE("gru_step is pure: identical calls give bitwise-identical results", "[cells]") {
    Rng rng(9);
    auto [p, ref] = testutil::random_gru(4, 8, 6, rng);
    (void)ref;
    GruState s{testutil::random_vec(8, rng, 0.3)};
    Vec x = testutil::random_vec(4, rng);
    auto r1 = gru_step(p, s, x);
    auto r2 = gru_step(p, s, x);
    CHECK(r1.first.h == r2.first.h);
    CHECK(r1.second == r2.second);
}

TEST_CASE("hidden state stays bounded for any parameters", "[cells]") {
    Rng rng(31);
    SECTION("strictly inside (-1, 1) at moderate scales") {
        for (int trial = 0; trial < 50; ++trial) {
            auto [p, ref] = testutil::random_gru(3, 5, 2, rng, /*scale=*/1.0);
            (void)ref;
            GruState s{Vec(5)};
            for (double& h : s.h) h = rng.uniform(-0.999, 0.999);
            for (int t = 0; t < 40; ++t) {
                auto [next, out] = gru_step(p, s, testutil::random_vec(3, rng));
                (void)out;
                s = std::move(next);
                for (double h : s.h) {
                    CHECK(h > -1.0);
                    CHECK(h < 1.0);
                }
            }
        }
    }
    SECTION("never outside [-1, 1] even when the gates saturate in fp") {
        // tanh rounds to exactly +/-1.0 beyond ~19, so saturated regimes can
        // touch the closed bounds but can never escape them
        for (int trial = 0; trial < 50; ++trial) {
            auto [p, ref] = testutil::random_gru(3, 5, 2, rng, /*scale=*/5.0);
            (void)ref;
            GruState s{Vec(5)};
            for (double& h : s.h) h = rng.uniform(-0.999, 0.999);
            for (int t = 0; t < 40; ++t) {
                auto [next, out] = gru_step(p, s, testutil::random_vec(3, rng, 3.0));
                (void)out;
                s = std::move(next);
                for (double h : s.h) {
                    CHECK(h >= -1.0);
                    CHECK(h <= 1.0);
                }
            }
        }
    }
}

TEST_CASE("zero parameters halve the hidden state each step", "[cells]") {
    GruParams p(2, 4, 2);
    GruState s{Vec{0.5, -0.25, 0.75, 0.125}};
    Vec h0 = s.h;
    for (int t = 1; t <= 6; ++t) {
        auto [next, out] = gru_step(p, s, Vec{3.0, -2.0});
        (void)out;
        s = std::move(next);
        for (std::size_t i = 0; i < s.h.size(); ++i)
            CHECK(s.h[i] == h0[i] * std::pow(2.0, -t));  // exact: scaling by 0.5
    }
}

TEST_CASE("feedback_step trivial cases", "[cells]") {
    FeedbackParams p(3, 4);
    GruState s{Vec{0.2, -0.6, 0.8, 0.1}};
    Vec f{0.3, 0.1, -0.2};

    SECTION("all parameters zero halve the state") {
        GruState next = feedback_step(p, s, f);
        for (std::size_t i = 0; i < 4; ++i) CHECK(next.h[i] == 0.5 * s.h[i]);
    }
    SECTION("saturated gate keeps the state") {
        for (double& b : p.b_z) b = -1e6;
        GruState next = feedback_step(p, s, f);
        CHECK(next.h == s.h);
    }
    SECTION("dimension mismatch is rejected") {
        CHECK_THROWS_AS(feedback_step(p, s, Vec{1.0}), ConfigError);
    }
}

TEST_CASE("feedback_step matches the scripted recomputation over 3 steps", "[cells]") {
    Rng rng(77);
    auto [p, ref] = testutil::random_gates(3, 4, rng);
    GruState s{testutil::random_vec(4, rng, 0.2)};
    refimpl::V ref_h = s.h;
    for (int t = 0; t < 3; ++t) {
        Vec f = testutil::random_vec(3, rng);
        GruState next = feedback_step(p, s, f);
        refimpl::V ref_next = refimpl::feedback_step(ref, ref_h, {f[0], f[1], f[2]});
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(next.h[i] == Catch::Approx(ref_next[i]).margin(1e-12));
        s = std::move(next);
        ref_h = std::move(ref_next);
    }
}

TEST_CASE("mlp_forward basics", "[cells]") {
    SECTION("identity weights, linear flag: output equals input") {
        MlpParams p;
        MlpLayer layer;
        layer.w = Mat(3, 3);
        for (int i = 0; i < 3; ++i) layer.w(i, i) = 1.0;
        layer.tanh_activation = false;
        p.layers.push_back(layer);
        Vec x{0.1, -2.0, 3.5};
        CHECK(mlp_forward(p, x) == x);
    }
    SECTION("zero weights, tanh flag: zero vector") {
        MlpParams p;
        MlpLayer layer;
        layer.w = Mat(4, 3);
        layer.b.assign(4, 0.0);
        p.layers.push_back(layer);
        CHECK(mlp_forward(p, Vec{1.0, 2.0, 3.0}) == Vec(4, 0.0));
    }
    SECTION("dimension mismatch rejected") {
        MlpParams p;
        MlpLayer layer;
        layer.w = Mat(4, 3);
        p.layers.push_back(layer);
        CHECK_THROWS_AS(mlp_forward(p, Vec{1.0}), ConfigError);
    }
}

TEST_CASE("mlp_forward matches the scripted matrix-product oracle", "[cells]") {
    Rng rng(2024);
    const std::vector<std::size_t> widths = {8, 32, 24, 24, 24};
    MlpParams p;
    std::vector<refimpl::MlpLayerRef> ref;
    for (std::size_t layer = 0; layer + 1 < widths.size(); ++layer) {
        MlpLayer l;
        l.w = Mat(widths[layer + 1], widths[layer]);
        l.b.assign(widths[layer + 1], 0.0);
        refimpl::MlpLayerRef rl;
        testutil::fill_mat(l.w, rl.w, rng, 0.4);
        testutil::fill_vec(l.b, rl.b, rng, 0.4);
        p.layers.push_back(l);
        ref.push_back(rl);
    }
    Vec x = testutil::random_vec(8, rng);
    Vec got = mlp_forward(p, x);
    refimpl::V expect = refimpl::mlp_forward(ref, refimpl::V(x.begin(), x.end()));
    REQUIRE(got.size() == expect.size());
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got[i] == Catch::Approx(expect[i]).margin(1e-12));
    CHECK(got[0] == Catch::Approx(kFrozenMlpOut0).margin(1e-12));
}

TEST_CASE("parameter counts", "[cells]") {
    // 4 x (16*(16+4) + 16): z, r, g gates plus the output gate at out=16
    CHECK(gru_param_count(4, 16, 16) == 1344);
    CHECK(feedback_param_count(24, 16) == 1968);
    CHECK(dense_param_count(16, 32, true) == 544);
    CHECK(dense_param_count(24, 32, false) == 768);
    CHECK_THROWS_AS(gru_param_count(0, 16, 16), ConfigError);
    CHECK_THROWS_AS((GruParams{0, 4, 4}), ConfigError);
}
