#include <catch2/catch_amalgamated.hpp>

#include <singlab/guidance.hpp>
#include <singlab/mixture.hpp>
#include <singlab/samplers.hpp>

#include <cmath>
#include <cstring>
#include <vector>

using namespace singlab;

TEST_CASE("guided combination reproduces the worked example", "[guidance]") {
    std::vector<double> o_pos{2.0}, o_neg{1.0};
    // u = o_neg + w (o_pos - o_neg) = 1 + 4 (2 - 1) = 5; normalized: 5/4
    REQUIRE(guided_combine(o_pos, o_neg, 4.0, false)[0] == 5.0);
    REQUIRE(guided_combine(o_pos, o_neg, 4.0, true)[0] == 1.25);
}

TEST_CASE("unit scale returns the positive branch bitwise", "[guidance]") {
    std::vector<double> o_pos{0.1 + 0.2, -3.7e-13, 19.25};  // deliberately non-round values
    std::vector<double> o_neg{0.95, 123.0, -8.5};
    auto out = guided_combine(o_pos, o_neg, 1.0, false);
    REQUIRE(std::memcmp(out.data(), o_pos.data(), o_pos.size() * sizeof(double)) == 0);
    out = guided_combine(o_pos, o_neg, 1.0, true);
    REQUIRE(std::memcmp(out.data(), o_pos.data(), o_pos.size() * sizeof(double)) == 0);
}

TEST_CASE("normalized combination is exactly the unnormalized one over w", "[guidance]") {
    std::vector<double> o_pos{0.3, -1.9, 2.4, 0.0};
    std::vector<double> o_neg{-0.7, 0.55, 2.4, 1.1};
    for (double w : {1.5, 2.0, 4.0, 7.25}) {
        auto u = guided_combine(o_pos, o_neg, w, false);
        auto v = guided_combine(o_pos, o_neg, w, true);
        for (std::size_t k = 0; k < u.size(); ++k) REQUIRE(v[k] == u[k] / w);
    }
}

TEST_CASE("zero negative branch under normalization returns the positive branch bitwise",
          "[guidance]") {
    std::vector<double> o_pos{0.1 + 0.2, -1.0 / 3.0, 5e-300};
    std::vector<double> o_neg{0.0, 0.0, 0.0};
    auto out = guided_combine(o_pos, o_neg, 3.0, true);
    REQUIRE(std::memcmp(out.data(), o_pos.data(), o_pos.size() * sizeof(double)) == 0);
    // unnormalized does scale: u = w * o_pos
    auto raw = guided_combine(o_pos, o_neg, 3.0, false);
    REQUIRE(raw[0] == Catch::Approx(3.0 * o_pos[0]));
}

TEST_CASE("guided combination rejects invalid inputs", "[guidance]") {
    std::vector<double> a{1.0, 2.0}, b{1.0};
    REQUIRE_THROWS_AS(guided_combine(a, a, 0.5, false), DomainError);
    REQUIRE_THROWS_AS(guided_combine(a, b, 2.0, false), DomainError);
}

TEST_CASE("a guided sampler with unit scale matches the unguided one bitwise", "[guidance]") {
    MixtureModel m(builtin_training_set("brightness-toy"), NoiseSchedule::cosine());
    SamplerConfig plain;
    plain.steps = 40;
    plain.chains = 16;
    plain.seed = 3;

    SamplerConfig guided = plain;
    GuidanceConfig g;
    g.scale = 1.0;
    g.pos_label = 1;
    guided.guidance = g;

    // conditioning on the positive class directly must equal guidance with w = 1
    auto a = run_batch(m, plain, 1, false, 2);
    auto b = run_batch(m, guided, std::nullopt, false, 2);
    REQUIRE(a.terminal.size() == b.terminal.size());
    REQUIRE(std::memcmp(a.terminal.data(), b.terminal.data(),
                        a.terminal.size() * sizeof(double)) == 0);
}

TEST_CASE("guidance pushes terminal mass toward the positive class", "[guidance]") {
    MixtureModel m(builtin_training_set("two-point"), NoiseSchedule::cosine());
    // positive class = the +1 point's label
    int pos = m.set().label(1);
    SamplerConfig cfg;
    cfg.steps = 200;
    cfg.chains = 400;
    cfg.seed = 8;
    GuidanceConfig g;
    g.scale = 3.0;
    g.pos_label = pos;
    cfg.guidance = g;

    auto br = run_batch(m, cfg, std::nullopt, false, 2);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < br.nearest.size(); ++i)
        if (m.set().label(br.nearest[i]) == pos) ++hits;
    // guided mass concentrates on the positive class well beyond the 50%
    // unguided split
    REQUIRE(static_cast<double>(hits) / static_cast<double>(cfg.chains) > 0.9);
}
