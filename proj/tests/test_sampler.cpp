// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddrm/sampler.hpp"

#include "doctest.h"
#include "support/helpers.hpp"

#include <array>
#include <cmath>

using namespace ddrm;
using ddrm::testing::max_abs;
using ddrm::testing::randn;

namespace {

// Two coordinates: index 0 observed with s = 1, index 1 in the null space.
ProblemInstance observed_and_null(double y0, double sigma_y) {
    const std::array<Index, 1> kept{0};
    return ProblemInstance(build_inpainting(2, kept), Vector::Constant(1, y0), sigma_y);
}

Vector spectral(double observed, double null) {
    Vector v(2);
    v << observed, null;
    return v;
}

}  // namespace

TEST_CASE("init moments") {
    SUBCASE("null space starts from the full noise level") {
        const auto p = observed_and_null(0.3, 0.1);
        const Moments m = init_moments(p, 2.0, Vector::Zero(2));
        CHECK(m.mean[1] == 0.0);
        CHECK(m.variance[1] == doctest::Approx(4.0).epsilon(1e-15));
        CHECK(m.mean[0] == doctest::Approx(0.3));
        CHECK(m.variance[0] == doctest::Approx(4.0 - 0.01).epsilon(1e-15));
    }
    SUBCASE("noiseless measurement") {
        const auto p = observed_and_null(0.3, 0.0);
        const Moments m = init_moments(p, 1.5, Vector::Zero(2));
        CHECK(m.mean[0] == doctest::Approx(0.3));
        CHECK(m.variance[0] == doctest::Approx(2.25));
    }
    SUBCASE("monte carlo variance") {
        constexpr Index n = 100000;
        const ProblemInstance p(build_denoising(n), Vector::Zero(n), 0.1);
        const Vector x = init_xT(p, 1.0, NoiseStream(3).normals(NoiseDomain::chain, 0, n));
        const double mean = x.mean();
        const double var = (x.array() - mean).square().sum() / (n - 1);
        CHECK(std::abs(var / 0.99 - 1.0) < 0.02);
    }
    SUBCASE("guard") {
        const auto p = observed_and_null(0.0, 0.5);
        CHECK(p.min_sigma_max() == doctest::Approx(0.5));
        CHECK_THROWS_AS(init_moments(p, 0.4, Vector::Zero(2)), ContractError);
        CHECK_NOTHROW(p.require_sigma_max(0.5));
    }
}

TEST_CASE("transition branches") {
    SUBCASE("above the measurement noise") {
        const auto p = observed_and_null(0.7, 0.1);
        const Moments m = transition_moments(spectral(0.2, 0.2), spectral(-0.4, 0.0), p, 1.0, 2.0,
                                             0.85, EtaB::fixed(1.0));
        CHECK(m.branch[0] == Branch::above_noise);
        CHECK(m.mean[0] == doctest::Approx(0.7).epsilon(1e-15));
        CHECK(m.variance[0] == doctest::Approx(0.99).epsilon(1e-15));
    }
    SUBCASE("below the measurement noise") {
        const auto p = observed_and_null(1.0, 0.1);
        const Moments m = transition_moments(spectral(0.5, 0.0), spectral(0.0, 0.0), p, 0.05, 0.1,
                                             0.85, EtaB::fixed(1.0));
        CHECK(m.branch[0] == Branch::below_noise);
        CHECK(std::abs(m.mean[0] - 0.2633915) < 5e-7);
        CHECK(m.mean[0] == doctest::Approx(std::sqrt(0.2775) * 0.5).epsilon(1e-14));
        CHECK(m.variance[0] == doctest::Approx(0.00180625).epsilon(1e-14));
    }
    SUBCASE("null space") {
        const auto p = observed_and_null(0.0, 0.0);
        const Moments m = transition_moments(spectral(0.0, 1.0), spectral(0.0, 0.0), p, 1.0, 2.0,
                                             1.0, EtaB::fixed(1.0));
        CHECK(m.branch[1] == Branch::null_space);
        CHECK(m.mean[1] == 0.0);
        CHECK(m.variance[1] == doctest::Approx(1.0));
    }
    SUBCASE("boundary belongs to the measurement branch") {
        const auto p = observed_and_null(0.0, 0.5);
        const Moments m = transition_moments(spectral(0.0, 0.0), spectral(0.0, 0.0), p, 0.5, 1.0,
                                             0.85, EtaB::fixed(1.0));
        CHECK(m.branch[0] == Branch::above_noise);
        CHECK(m.variance[0] == doctest::Approx(0.0));
    }
    SUBCASE("final step is deterministic off the measurement branch") {
        const auto p = observed_and_null(1.0, 0.1);
        const Moments m = transition_moments(spectral(0.3, 0.3), spectral(0.1, 0.2), p, 0.0, 0.05,
                                             0.85, EtaB::fixed(1.0));
        CHECK(m.branch[0] == Branch::below_noise);
        CHECK(m.variance[0] == 0.0);
        CHECK(m.variance[1] == 0.0);
        CHECK(m.mean[0] == 0.1);
        CHECK(m.mean[1] == 0.2);
    }
    SUBCASE("errors") {
        const auto p = observed_and_null(0.0, 0.1);
        const Vector z = Vector::Zero(2);
        CHECK_THROWS_AS(transition_moments(z, z, p, 1.0, 1.0, 0.85, EtaB::fixed(1)), ContractError);
        CHECK_THROWS_AS(transition_moments(z, z, p, 1.0, 2.0, 0.0, EtaB::fixed(1)), ContractError);
        CHECK_THROWS_AS(transition_moments(spectral(NAN, 0), z, p, 1.0, 2.0, 0.85, EtaB::fixed(1)),
                        ContractError);
        CHECK_THROWS_AS(transition_moments(Vector::Zero(3), z, p, 1.0, 2.0, 0.85, EtaB::fixed(1)),
                        ContractError);
        // η_b = 2 at σ_t = σ_y / s gives σ_t² - 4σ_t² < 0.
        const auto q = observed_and_null(0.0, 0.5);
        CHECK_THROWS_AS(transition_moments(z, z, q, 0.5, 1.0, 0.85, EtaB::fixed(2)), ContractError);
    }
}

TEST_CASE("theorem eta_b") {
    CHECK(eta_b_theorem(0.3, 0.3, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(eta_b_theorem(0.7, 0.0, 2.0) == 2.0);
    CHECK(eta_b_theorem(1.0, 0.1, 1.0) == doctest::Approx(1.9801980).epsilon(1e-7));
    CHECK_THROWS_AS(eta_b_theorem(1.0, 0.1, 0.0), ContractError);
    CHECK_THROWS_AS(eta_b_theorem(0.0, 0.0, 1.0), ContractError);
    CHECK(resolve_eta_b(EtaB::fixed(0.6), 1.0, 0.1) == 0.6);
    CHECK(resolve_eta_b(EtaB::theorem(), 1.0, 0.1) == doctest::Approx(2.0 / 1.01));

    const NoiseStream rng(21);
    for (std::uint64_t k = 0; k < 1000; ++k) {
        const double s = 0.05 + 2.0 * rng.uniform(NoiseDomain::prior, 0, k);
        const double sigma_y = rng.uniform(NoiseDomain::prior, 1, k);
        const double nl = sigma_y / s;
        const double sigma_t = nl * (1.0 + 3.0 * rng.uniform(NoiseDomain::prior, 2, k)) + 1e-3;
        const double w = eta_b_theorem(sigma_t, sigma_y, s);
        const double lhs = (1 - w) * (1 - w) / (sigma_t * sigma_t - nl * nl * w * w);
        CHECK(std::abs(lhs * sigma_t * sigma_t - 1.0) < 1e-10);
    }
}

TEST_CASE("variational chain matches the model chain under substitution") {
    const ProblemInstance p(build_block_sr(4, 2, 1), randn(4, 1), 0.05);
    const Vector x0 = p.op().apply_Vt(randn(16, 2));
    const Vector noise = randn(16, 3);
    const Vector qa = q_init(p, x0, 3.0, noise), pa = init_xT(p, 3.0, noise);
    CHECK(qa.head(4) == pa.head(4));
    const Vector xn = randn(16, 4);
    for (const EtaB& eb : {EtaB::fixed(1.0), EtaB::fixed(0.7), EtaB::theorem()}) {
        CHECK(q_step(xn, x0, p, 0.4, 0.9, 0.85, eb, noise) ==
              step(xn, x0, p, 0.4, 0.9, 0.85, eb, noise));
        CHECK(q_step(xn, x0, p, 0.01, 0.04, 0.85, eb, noise) ==
              step(xn, x0, p, 0.01, 0.04, 0.85, eb, noise));
    }
    // The variational start keeps x̄₀ on the null space.
    const Moments m = init_moments(p, 3.0, x0);
    for (Index i = 4; i < 16; ++i) CHECK(m.mean[i] == x0[i]);
}

TEST_CASE("ILVR reference step") {
    SUBCASE("equals the DDRM step with unit weights") {
        const OperatorPtr h = build_block_sr(8, 2, 1);
        const ProblemInstance p(h, h->apply(randn(64, 5)), 0.0);
        const NoiseStream rng(8);
        for (std::uint64_t k = 0; k < 20; ++k) {
            const Vector x_theta = randn(64, 6, k);
            const Vector xn = randn(64, 7, k);
            const Vector eps = rng.normals(NoiseDomain::chain, 2 * k, 64);
            const Vector eps_prime = rng.normals(NoiseDomain::chain, 2 * k + 1, 64);
            const double sigma_t = 0.1 + rng.uniform(NoiseDomain::prior, 0, k);
            const Vector a = ilvr_reference_step(x_theta, p, sigma_t, eps, eps_prime);

            const Vector eps_bar = h->apply_Vt(eps), eps_prime_bar = h->apply_Vt(eps_prime);
            Vector noise(64);
            for (Index i = 0; i < 64; ++i)
                noise[i] = p.singulars()[i] > 0 ? eps_prime_bar[i] : eps_bar[i];
            const Vector b = h->apply_V(step(h->apply_Vt(xn), h->apply_Vt(x_theta), p, sigma_t,
                                             2 * sigma_t, 1.0, EtaB::fixed(1.0), noise));
            CHECK(max_abs(a - b) < 1e-10);
        }
    }
    SUBCASE("orthogonal operator") {
        const ProblemInstance p(build_denoising(10), randn(10, 9), 0.0);
        const Vector eps_prime = randn(10, 10);
        const Vector x = ilvr_reference_step(randn(10, 11), p, 0.3, randn(10, 12), eps_prime);
        CHECK(max_abs(x - (p.y() + 0.3 * eps_prime)) < 1e-14);
    }
    SUBCASE("zero noise") {
        const OperatorPtr h = build_block_sr(4, 2, 1);
        const ProblemInstance p(h, randn(4, 13), 0.0);
        const Vector x_theta = randn(16, 14);
        const Vector xbar = h->apply_Vt(ilvr_reference_step(x_theta, p, 0.5, Vector::Zero(16),
                                                            Vector::Zero(16)));
        const Vector tbar = h->apply_Vt(x_theta);
        for (Index i = 0; i < 16; ++i)
            CHECK(xbar[i] == doctest::Approx(i < 4 ? p.ybar()[i] : tbar[i]).epsilon(1e-12));
    }
    SUBCASE("needs noiseless measurements") {
        const ProblemInstance p(build_denoising(4), Vector::Zero(4), 0.1);
        const Vector z = Vector::Zero(4);
        CHECK_THROWS_AS(ilvr_reference_step(z, p, 0.5, z, z), ContractError);
    }
}

TEST_CASE("run validation") {
    const SigmaSchedule schedule = SigmaSchedule::linear_beta();
    const ProblemInstance p(build_block_sr(4, 2, 1), Vector::Zero(4), 0.05);
    DdrmParams params;
    params.timesteps = subsample(1000, 20);
    CHECK_NOTHROW(validate(p, schedule, params));

    auto bad = params;
    bad.eta = 0.0;
    CHECK_THROWS_AS(validate(p, schedule, bad), ContractError);
    bad = params;
    bad.eta_b = EtaB::fixed(2.5);
    CHECK_THROWS_AS(validate(p, schedule, bad), ContractError);
    bad = params;
    bad.timesteps.clear();
    CHECK_THROWS_AS(validate(p, schedule, bad), ContractError);
    bad = params;
    bad.timesteps = {5, 3};
    CHECK_THROWS_AS(validate(p, schedule, bad), ContractError);
    bad = params;
    bad.timesteps = {1001};
    CHECK_THROWS_AS(validate(p, schedule, bad), ContractError);

    // σ_T must dominate σ_y / s_i.
    const ProblemInstance noisy(build_denoising(4), Vector::Zero(4), 500.0);
    CHECK_THROWS_AS(validate(noisy, schedule, params), ContractError);
    const ProblemInstance faint(build_block_sr(4, 2, 1), Vector::Zero(4), 0.1);
    auto short_chain = params;
    short_chain.timesteps = {1};
    CHECK_THROWS_AS(validate(faint, schedule, short_chain), ContractError);
}

TEST_CASE("full run") {
    const SigmaSchedule schedule = SigmaSchedule::linear_beta();
    const OperatorPtr h = build_block_sr(8, 2, 3);
    const Vector x = (randn(192, 15).array() * 0.2 + 0.5).matrix();
    DdrmParams params;
    params.timesteps = subsample(1000, 20);
    params.seed = 4;

    SUBCASE("noiseless data consistency") {
        const ProblemInstance p(h, h->apply(x), 0.0);
        GaussianDenoiser d(0.5, 0.25);
        const Vector out = run(p, d, schedule, params);
        CHECK(out.allFinite());
        CHECK(max_abs(h->apply(out) - p.y()) < 1e-5);
    }
    SUBCASE("determinism") {
        const ProblemInstance p(h, h->apply(x) + 0.05 * randn(48, 16), 0.05);
        GaussianDenoiser d(0.5, 0.25);
        const Vector a = run(p, d, schedule, params);
        const Vector b = run(p, d, schedule, params);
        CHECK(a == b);
        params.seed = 5;
        CHECK(max_abs(run(p, d, schedule, params) - a) > 1e-3);
    }
    SUBCASE("theorem weights stay finite") {
        const ProblemInstance p(h, h->apply(x) + 0.05 * randn(48, 16), 0.05);
        GmmDenoiser d({{0.5, 0.3, 0.1}, {0.5, 0.7, 0.1}});
        params.eta_b = EtaB::theorem();
        CHECK(run(p, d, schedule, params).allFinite());
    }
}
