#include "entflux/capacity_bounds.hpp"
#include "entflux/dv_channels.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace entflux;

namespace {

EstimatorOptions quick(unsigned long long seed = 0, std::size_t budget = 6000) {
    EstimatorOptions o;
    o.seed = seed;
    o.budget = budget;
    return o;
}

DensityMatrix bell_state() { return {oracle::bell(), {2, 2}}; }

}  // namespace

TEST_CASE("h function") {
    CHECK(h_function(0.0) == 0.0);
    CHECK(h_function(1.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(h_function(0.5) == doctest::Approx(1.5 * std::log2(1.5) + 0.5).epsilon(1e-14));
    CHECK(h_function(0.5) == doctest::Approx(1.3774).epsilon(1e-4));
    CHECK_THROWS_AS(h_function(-0.1), std::invalid_argument);
}

TEST_CASE("pure-loss bound") {
    CHECK(lossy_bound(0.5) == 1.0);
    CHECK(lossy_bound(0.0) == 0.0);
    CHECK(lossy_bound(0.01) == doctest::Approx(-std::log2(0.99)).epsilon(1e-14));
    CHECK(std::abs(lossy_bound(0.01) / 0.01 - 1.44) / 1.44 < 0.01);
    CHECK(std::isinf(lossy_bound(1.0)));
    CHECK_THROWS_AS(lossy_bound(1.2), std::invalid_argument);
    CHECK_THROWS_AS(lossy_bound(-0.1), std::invalid_argument);
}

TEST_CASE("amplifier bound") {
    CHECK(amplifier_bound(2.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(amplifier_bound(1e3) == doctest::Approx(0.001443).epsilon(1e-3));
    CHECK(amplifier_bound(1.0 + 1e-6) > 19.0);
    CHECK(std::isfinite(amplifier_bound(1.0 + 1e-6)));
    double previous = kInfinity;
    for (double g : {1.5, 2.0, 5.0, 10.0, 100.0, 1000.0}) {
        CHECK(amplifier_bound(g) < previous);
        previous = amplifier_bound(g);
    }
    CHECK_THROWS_AS(amplifier_bound(1.0), std::invalid_argument);
}

TEST_CASE("dephasing bound") {
    CHECK(dephasing_bound(0.0) == doctest::Approx(1.0));
    CHECK(dephasing_bound(0.5) == doctest::Approx(0.0).epsilon(1e-14));
    const double uniform[] = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    CHECK(dephasing_bound(3, uniform) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(dephasing_bound(0.1) == doctest::Approx(1.0 - oracle::binary_entropy(0.1)).epsilon(1e-14));
    CHECK(dephasing_bound(0.1) == doctest::Approx(0.5310).epsilon(1e-4));
    const double bad[] = {0.5, 0.6};
    CHECK_THROWS_AS(dephasing_bound(2, bad), std::invalid_argument);
}

TEST_CASE("erasure bound") {
    CHECK(erasure_bound(2, 0.25) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(erasure_bound(2, 1.0) == 0.0);
    CHECK(erasure_bound(4, 0.5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(erasure_bound(1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(erasure_bound(2, 1.5), std::invalid_argument);
}

TEST_CASE("thermal-loss flux") {
    CHECK(thermal_loss_flux(0.7, 1.0) == doctest::Approx(-std::log2(0.21) - 2.0).epsilon(1e-12));
    CHECK(std::abs(thermal_loss_flux(0.7, 1.0) - 0.2515) < 1e-4);
    CHECK(thermal_loss_flux(0.5, 1.0) == 0.0);
    for (double eta : {0.1, 0.3, 0.5, 0.9, 0.99}) {
        CHECK(std::abs(thermal_loss_flux(eta, 0.0) - lossy_bound(eta)) <= 1e-12);
        for (double n : {0.1, 0.5, 1.0, 3.0}) {
            CHECK(thermal_loss_flux(eta, n) == doctest::Approx(oracle::thermal_flux(eta, n)).epsilon(1e-10));
        }
    }
    CHECK_THROWS_AS(thermal_loss_flux(1.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(thermal_loss_flux(0.5, -1.0), std::invalid_argument);
}

TEST_CASE("thermal-loss flux is continuous at the threshold") {
    for (double eta : {0.3, 0.5, 0.7, 0.9}) {
        const double threshold = eta / (1.0 - eta);
        CHECK(thermal_loss_flux(eta, threshold - 1e-9) <= 1e-4);
        CHECK(thermal_loss_flux(eta, threshold) == 0.0);
        CHECK(thermal_loss_flux(eta, threshold + 0.5) == 0.0);
    }
}

TEST_CASE("closed-form dispatcher") {
    const auto deph = closed_form_bound(qubit_dephasing(0.1));
    CHECK(deph.bound_bits == doctest::Approx(0.5310).epsilon(1e-4));
    REQUIRE(deph.lower_bound_bits);
    CHECK(std::abs(*deph.lower_bound_bits - deph.bound_bits) <= 1e-9);
    CHECK(deph.formula.find("dephasing") != std::string::npos);

    const auto erasure = closed_form_bound(ErasureSpec{2, 0.25});
    CHECK(erasure.bound_bits == doctest::Approx(0.75));
    REQUIRE(erasure.lower_bound_bits);
    CHECK(*erasure.lower_bound_bits <= erasure.bound_bits + 1e-9);

    CHECK(closed_form_bound(LossySpec{0.5}).bound_bits == 1.0);
    CHECK(closed_form_bound(AmplifierSpec{2.0}).bound_bits == doctest::Approx(1.0));
    CHECK_THROWS_AS(closed_form_bound(DepolarizingSpec{2, 0.1}), std::invalid_argument);

    for (double p : {0.0, 0.05, 0.3, 0.5, 0.9}) {
        for (const ChannelSpec& spec : {ChannelSpec{qubit_dephasing(p)}, ChannelSpec{ErasureSpec{3, p}}}) {
            const auto r = closed_form_bound(spec);
            REQUIRE(r.lower_bound_bits);
            CHECK(*r.lower_bound_bits <= r.bound_bits + 1e-9);
        }
    }
}

TEST_CASE("report validation") {
    BoundReport r;
    r.bound_bits = 1.0;
    r.lower_bound_bits = 0.5;
    CHECK_NOTHROW(validate(r));
    r.lower_bound_bits = 1.1;
    CHECK_THROWS_AS(validate(r), std::logic_error);
    r.lower_bound_bits.reset();
    r.bound_bits = -0.1;
    CHECK_THROWS_AS(validate(r), std::logic_error);
    r.bound_bits = kInfinity;
    CHECK_NOTHROW(validate(r));
}

TEST_CASE("cuts") {
    CHECK(cut_label(bipartite_cut({0}, {1, 2})) == "0|1,2");
    CHECK(fully_separable_cut(3).size() == 3);
    CHECK_THROWS(ree_upper_estimate(bell_state(), {bipartite_cut({0}, {0}), 0}, quick()));
    CHECK_THROWS(ree_upper_estimate(bell_state(), {bipartite_cut({0}, {2}), 0}, quick()));
}

TEST_CASE("REE estimator on a Bell pair") {
    CMatrix w = CMatrix::Zero(4, 4);
    w(0, 0) = w(3, 3) = 0.5;
    const double witness = oracle::relative_entropy_diagonal_sigma(oracle::bell(), w);
    CHECK(witness == doctest::Approx(1.0).epsilon(1e-12));

    const auto est = ree_upper_estimate(bell_state(), {bipartite_cut({0}, {1}), 0}, quick());
    CHECK(est.finite);
    CHECK(est.bits <= 1.0 + 0.02);
    CHECK(est.bits >= 1.0 - 1e-9);  // REE of a Bell pair is 1; no separable state does better
    const auto sigma = witness_state(est.witness, {2, 2});
    CHECK(std::abs(relative_entropy(bell_state(), sigma) - est.bits) <= 1e-9);
}

TEST_CASE("REE estimator on separable and mixed targets") {
    const auto mixed = DensityMatrix::maximally_mixed({2, 2});
    CHECK(ree_upper_estimate(mixed, {bipartite_cut({0}, {1}), 0}, quick()).bits <= 1e-6);
    CHECK(ree_upper_estimate(mixed, {fully_separable_cut(2), 0}, quick()).bits <= 1e-6);
    const auto product = tensor(random_state({2}, 3), random_state({2}, 4));
    CHECK(ree_upper_estimate(product, {bipartite_cut({0}, {1}), 0}, quick()).bits <= 2e-2);
}

TEST_CASE("REE estimator on dephasing Choi matrices") {
    for (double p : {0.05, 0.1, 0.25}) {
        const auto choi = choi_matrix(make_channel(qubit_dephasing(p)));
        CMatrix w = CMatrix::Zero(4, 4);
        w(0, 0) = w(3, 3) = 0.5;
        const double target = 1.0 - oracle::binary_entropy(p);
        CHECK(std::abs(oracle::relative_entropy_diagonal_sigma(choi.state.data(), w) - target) <= 1e-9);
        const auto est = ree_upper_estimate(choi.state, {bipartite_cut({0}, {1}), 0}, quick(7));
        CHECK(est.bits <= target + 0.02);
        CHECK(est.bits >= target - 1e-9);
    }
}

TEST_CASE("REE estimator on GHZ across a|bc") {
    CMatrix w = CMatrix::Zero(8, 8);
    w(0, 0) = w(7, 7) = 0.5;
    CHECK(oracle::relative_entropy_diagonal_sigma(oracle::ghz3(), w) == doctest::Approx(1.0).epsilon(1e-12));
    const DensityMatrix ghz(oracle::ghz3(), {2, 2, 2});
    const auto est = ree_upper_estimate(ghz, {bipartite_cut({0}, {1, 2}), 0}, quick());
    CHECK(est.bits <= 1.0 + 0.02);
}

TEST_CASE("REE estimator is deterministic and thread independent") {
    const auto choi = choi_matrix(make_channel(DepolarizingSpec{2, 0.3}));
    auto one = quick(42, 3000);
    one.threads = 1;
    auto many = one;
    many.threads = 4;
    const auto a = ree_upper_estimate(choi.state, {bipartite_cut({0}, {1}), 0}, one);
    const auto b = ree_upper_estimate(choi.state, {bipartite_cut({0}, {1}), 0}, many);
    const auto c = ree_upper_estimate(choi.state, {bipartite_cut({0}, {1}), 0}, one);
    CHECK(a.bits == b.bits);
    CHECK(a.bits == c.bits);
    CHECK(a.evaluations <= 3000);
}

TEST_CASE("REE estimator matches the Werner-state value for depolarizing") {
    const double p = 0.3;
    const double fidelity = 1.0 - 3.0 * p / 4.0;
    const double exact = 1.0 - oracle::binary_entropy(fidelity);
    const auto choi = choi_matrix(make_channel(DepolarizingSpec{2, p}));
    const auto est = ree_upper_estimate(choi.state, {bipartite_cut({0}, {1}), 0}, quick());
    CHECK(est.bits >= exact - 1e-9);
    CHECK(est.bits <= exact + 0.02);
}

TEST_CASE("coarse cut never exceeds the fully separable estimate when warm-started") {
    const DensityMatrix ghz(oracle::ghz3(), {2, 2, 2});
    const auto fine = ree_upper_estimate(ghz, {fully_separable_cut(3), 0}, quick(1));
    auto opts = quick(1);
    opts.warm_start = fine.witness;
    const auto coarse = ree_upper_estimate(ghz, {bipartite_cut({0}, {1, 2}), 0}, opts);
    CHECK(coarse.bits <= fine.bits + 1e-3);
}

TEST_CASE("sub-additivity on two Bell pairs") {
    const auto two = tensor(bell_state(), bell_state());
    const auto est = ree_upper_estimate(two, {bipartite_cut({0, 2}, {1, 3}), 0}, quick());
    CHECK(est.bits <= 2.0 * 1.0 + 2e-2);
}

TEST_CASE("tracing one side does not increase the estimate") {
    const DensityMatrix ghz(oracle::ghz3(), {2, 2, 2});
    const auto full = ree_upper_estimate(ghz, {bipartite_cut({0}, {1, 2}), 0}, quick());
    const std::size_t keep[] = {0, 1};
    const auto reduced = ree_upper_estimate(partial_trace(ghz, keep), {bipartite_cut({0}, {1}), 0}, quick());
    CHECK(reduced.bits <= full.bits + 2e-2);
}

TEST_CASE("estimator rejects oversized targets") {
    const auto big = DensityMatrix::maximally_mixed({2, 2, 2, 2, 2, 2, 2});
    CHECK_THROWS_AS(ree_upper_estimate(big, {fully_separable_cut(7), 0}, quick()), std::invalid_argument);
}
