#include "entflux/multipoint.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace entflux;

namespace {

EstimatorOptions quick(unsigned long long seed = 0) {
    EstimatorOptions o;
    o.seed = seed;
    o.budget = 6000;
    return o;
}

double coarse_bits(const std::vector<BoundReport>& reports) { return reports.front().bound_bits; }

}  // namespace

TEST_CASE("fixture catalog") {
    for (const auto& name : fixture_names()) {
        const auto f = make_fixture(name);
        CHECK(f.name == name);
        CHECK(f.senders == f.channel.in_dims().size());
        CHECK(f.receivers == f.channel.out_dims().size());
    }
    CHECK(make_fixture("copying-broadcast").topology == Topology::broadcast);
    CHECK(make_fixture("cz-mac").topology == Topology::mac);
    CHECK(make_fixture("swap-interference").topology == Topology::interference);
    CHECK_THROWS_AS(make_fixture("no-such-fixture"), std::invalid_argument);
    CHECK_THROWS_AS(make_fixture("bad", Topology::mac, make_fixture("copying-broadcast").channel),
                    std::invalid_argument);
}

TEST_CASE("multipoint Choi matrices") {
    const auto ghz = multipoint_choi(make_fixture("copying-broadcast"));
    CHECK(oracle::max_abs_diff(ghz.state.data(), oracle::ghz3()) < 1e-14);
    CHECK(ghz.sender_indices == std::vector<std::size_t>{0});
    CHECK(ghz.receiver_indices == std::vector<std::size_t>{1, 2});

    const auto mac = multipoint_choi(make_fixture("cz-mac"));
    CHECK(mac.state.dims() == Dims{2, 2, 2});
    const std::size_t refs[] = {0, 1};
    CHECK(oracle::max_abs_diff(partial_trace(mac.state, refs).data(), CMatrix::Identity(4, 4) / 4.0) < 1e-12);
    // Kraus oracle: (I (x) Tr_2 CZ) applied to two Bell pairs in (R1, R2, A1, A2) order.
    CMatrix cz = CMatrix::Identity(4, 4);
    cz(3, 3) = -1.0;
    const CMatrix pairs = oracle::kron(oracle::bell(), oracle::bell());  // (R1, A1, R2, A2)
    const DensityMatrix pairs_state(pairs, {2, 2, 2, 2});
    const std::size_t order[] = {0, 2, 1, 3};
    const CMatrix ordered = permute(pairs_state, order).data();
    const CMatrix u = oracle::kron(CMatrix::Identity(4, 4), cz);
    const DensityMatrix rotated(u * ordered * u.adjoint(), {2, 2, 2, 2});
    const std::size_t keep[] = {0, 1, 2};
    CHECK(oracle::max_abs_diff(partial_trace(rotated, keep).data(), mac.state.data()) < 1e-14);

    const auto swap = multipoint_choi(make_fixture("swap-interference"));
    const DensityMatrix product(oracle::kron(oracle::bell(), oracle::bell()), {2, 2, 2, 2});  // (R1, B2, R2, B1)
    const std::size_t swap_order[] = {0, 2, 3, 1};
    CHECK(oracle::max_abs_diff(swap.state.data(), permute(product, swap_order).data()) < 1e-14);
}

TEST_CASE("Choi reference marginal is maximally mixed for every fixture") {
    for (const auto& name : fixture_names()) {
        const auto choi = multipoint_choi(make_fixture(name));
        const auto marginal = partial_trace(choi.state, choi.sender_indices);
        const auto n = static_cast<Eigen::Index>(marginal.size());
        CHECK(oracle::max_abs_diff(marginal.data(), CMatrix::Identity(n, n) / static_cast<double>(n)) <= 1e-10);
    }
}

TEST_CASE("stretching examples") {
    const auto swap = verify_stretching(make_fixture("swap-interference"), 2, 1);
    CHECK(swap.ran);
    CHECK(swap.passed);
    CHECK(swap.max_deviation <= 1e-10);

    const auto broadcast = verify_stretching(make_fixture("copying-broadcast"), 2, 1);
    CHECK(broadcast.passed);
    CHECK(broadcast.max_deviation <= 1e-10);
    CHECK(broadcast.branches >= 1);

    const auto identity = verify_stretching(make_fixture("identity"), 3, 1);
    CHECK(identity.passed);
    CHECK(identity.max_deviation <= 1e-12);

    CHECK_THROWS_AS(verify_stretching(make_fixture("identity"), 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(verify_stretching(make_fixture("identity"), 0, 1), std::invalid_argument);
}

TEST_CASE("stretching passes on covariant fixtures and is skipped otherwise") {
    for (const auto& name : fixture_names()) {
        const auto f = make_fixture(name);
        for (unsigned long long seed : {0ULL, 7ULL}) {
            StretchingReport r;
            CHECK_NOTHROW(r = verify_stretching(f, 2, seed));
            if (name == "non-covariant") {
                CHECK_FALSE(r.covariance.covariant);
                CHECK_FALSE(r.ran);
                CHECK_FALSE(r.passed);
            } else {
                CHECK(r.covariance.covariant);
                CHECK(r.passed);
                CHECK(r.max_deviation <= kStretchingTolerance);
            }
        }
    }
}

TEST_CASE("stretching is reproducible") {
    const auto f = make_fixture("cz-interference");
    const auto a = verify_stretching(f, 2, 99);
    const auto b = verify_stretching(f, 2, 99);
    CHECK(a.max_deviation == b.max_deviation);
    CHECK(a.branches == b.branches);
}

TEST_CASE("pair flux bounds on the catalog") {
    const auto broadcast = pair_flux_bounds(make_fixture("copying-broadcast"), quick());
    REQUIRE(broadcast.size() == 2);
    for (const auto& r : broadcast) {
        CHECK(r.bound_bits <= 1.0 + 0.02);
        CHECK(r.bound_bits >= 1.0 - 1e-9);
        CHECK(r.formula.find("heuristic") != std::string::npos);
    }
    CHECK(broadcast[1].pair == std::pair<std::size_t, std::size_t>{0, 1});

    const auto swap = pair_flux_bounds(make_fixture("swap-interference"), quick());
    REQUIRE(swap.size() == 4);
    CHECK(std::abs(coarse_bits(swap) - 2.0) <= 0.02);
    CHECK(swap.front().formula.find("a1,a2|b1,b2") != std::string::npos);

    const auto mac = pair_flux_bounds(make_fixture("cz-mac"), quick());
    REQUIRE(mac.size() == 2);
    CHECK(coarse_bits(mac) <= 1.0 + 0.02);
}

TEST_CASE("coarse cut never exceeds the fully separable estimate") {
    for (const auto& name : fixture_names()) {
        for (const auto& r : pair_flux_bounds(make_fixture(name), quick(3))) {
            CHECK(r.bound_bits <= r.diagnostics.at("fully_separable_bits") + 1e-3);
        }
    }
}

TEST_CASE("tracing a receiver does not increase the estimate") {
    for (const auto& name : {"copying-broadcast", "swap-interference", "cz-interference", "dephasing-interference"}) {
        const auto f = make_fixture(name);
        const auto choi = multipoint_choi(f);
        const double full = coarse_bits(pair_flux_bounds(f, quick()));
        for (std::size_t drop = 0; drop < choi.receiver_indices.size(); ++drop) {
            std::vector<std::size_t> keep = choi.sender_indices;
            std::vector<std::size_t> right;
            for (std::size_t j = 0; j < choi.receiver_indices.size(); ++j) {
                if (j != drop) keep.push_back(choi.receiver_indices[j]);
            }
            for (std::size_t k = choi.sender_indices.size(); k < keep.size(); ++k) right.push_back(k);
            std::vector<std::size_t> left(choi.sender_indices.size());
            for (std::size_t k = 0; k < left.size(); ++k) left[k] = k;
            const auto reduced = partial_trace(choi.state, keep);
            const auto est = ree_upper_estimate(reduced, {bipartite_cut(left, right), 0}, quick());
            CHECK(est.bits <= full + 2e-2);
        }
    }
}

TEST_CASE("pair bounds are deterministic for a fixed seed") {
    const auto f = make_fixture("dephasing-interference");
    const auto a = pair_flux_bounds(f, quick(5));
    const auto b = pair_flux_bounds(f, quick(5));
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].bound_bits == b[k].bound_bits);
}
