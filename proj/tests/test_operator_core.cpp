#include "entflux/operator_core.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace entflux;

namespace {

DensityMatrix state(const CMatrix& m, Dims dims) { return {m, std::move(dims)}; }

DensityMatrix random_qubits(std::size_t n, std::mt19937_64& rng) {
    return state(oracle::random_density(std::size_t{1} << n, rng), Dims(n, 2));
}

}  // namespace

TEST_CASE("density matrix validation") {
    CMatrix m = CMatrix::Identity(2, 2) / 2.0;
    CHECK_NOTHROW(state(m, {2}));
    CHECK_THROWS_AS(state(m, {3}), std::invalid_argument);
    CMatrix bad_trace = CMatrix::Identity(2, 2);
    CHECK_THROWS_AS(state(bad_trace, {2}), std::invalid_argument);
    CMatrix non_herm = m;
    non_herm(0, 1) = 0.1;
    CHECK_THROWS_AS(state(non_herm, {2}), std::invalid_argument);
    CMatrix negative(2, 2);
    negative << 1.5, 0, 0, -0.5;
    CHECK_THROWS_AS(state(negative, {2}), std::invalid_argument);
    CHECK_THROWS_AS(DensityMatrix(m, {2}, {"a", "b"}), std::invalid_argument);

    const auto labeled = DensityMatrix::maximally_mixed({2, 3}).with_labels({"A", "B"});
    CHECK(labeled.index_of("B") == 1);
    CHECK_THROWS(labeled.index_of("C"));
}

TEST_CASE("tensor products") {
    const auto mixed = DensityMatrix::maximally_mixed({2});
    const auto t = tensor(mixed, mixed);
    CHECK(t.dims() == Dims{2, 2});
    CHECK(oracle::max_abs_diff(t.data(), CMatrix::Identity(4, 4) / 4.0) < 1e-15);

    const auto ket01 = tensor(DensityMatrix::basis({2}, 0), DensityMatrix::basis({2}, 1));
    CHECK(oracle::max_abs_diff(ket01.data(), oracle::projector(oracle::ket(4, 1))) < 1e-15);

    const auto phi = state(oracle::bell(), {2, 2});
    const auto two = tensor(phi, phi);
    CHECK(two.dims() == Dims{2, 2, 2, 2});
    CHECK(oracle::max_abs_diff(two.data(), oracle::kron(oracle::bell(), oracle::bell())) < 1e-15);
    CHECK(two.purity() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hermitian_eigenvalues(two.data()).maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("partial traces") {
    const auto phi = state(oracle::bell(), {2, 2});
    const std::size_t first[] = {0};
    CHECK(oracle::max_abs_diff(partial_trace(phi, first).data(), CMatrix::Identity(2, 2) / 2.0) < 1e-15);

    const auto ket01 = DensityMatrix::basis({2, 2}, 1);
    const std::size_t second[] = {1};
    CHECK(oracle::max_abs_diff(partial_trace(ket01, second).data(), oracle::projector(oracle::ket(2, 1))) < 1e-15);

    const auto ghz = state(oracle::ghz3(), {2, 2, 2});
    const std::size_t pair[] = {0, 1};
    CMatrix expected = CMatrix::Zero(4, 4);
    expected(0, 0) = expected(3, 3) = 0.5;
    CHECK(oracle::max_abs_diff(partial_trace(ghz, pair).data(), expected) < 1e-15);
    CHECK(oracle::max_abs_diff(partial_trace(ghz, pair).data(), oracle::trace_right(oracle::ghz3(), 4, 2)) < 1e-15);

    const std::size_t out_of_range[] = {3};
    CHECK_THROWS(partial_trace(ghz, out_of_range));
    CHECK_THROWS(partial_trace(ghz, std::span<const std::size_t>{}));
}

TEST_CASE("partial trace inverts tensor") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const auto a = state(oracle::random_density(2, rng), {2});
        const auto b = state(oracle::random_density(3, rng), {3});
        const auto ab = tensor(a, b);
        const std::size_t left[] = {0};
        const std::size_t right[] = {1};
        CHECK(oracle::max_abs_diff(partial_trace(ab, left).data(), a.data()) <= 1e-12);
        CHECK(oracle::max_abs_diff(partial_trace(ab, right).data(), b.data()) <= 1e-12);
    }
}

TEST_CASE("permutation of subsystems") {
    const auto ket01 = DensityMatrix::basis({2, 3}, 1).with_labels({"A", "B"});
    const std::size_t swap[] = {1, 0};
    const auto swapped = permute(ket01, swap);
    CHECK(swapped.dims() == Dims{3, 2});
    CHECK(swapped.labels() == std::vector<std::string>{"B", "A"});
    // |0>_A |1>_B becomes |1>_B |0>_A, flat index 1*2 + 0.
    CHECK(oracle::max_abs_diff(swapped.data(), oracle::projector(oracle::ket(6, 2))) < 1e-15);
}

TEST_CASE("embedded operators act on the chosen subsystems") {
    const Dims dims{2, 2, 2};
    const std::size_t targets[] = {2};
    const CMatrix x2 = embed_operator(oracle::pauli_x(), dims, targets);
    const CMatrix expected = oracle::kron(CMatrix::Identity(4, 4), oracle::pauli_x());
    CHECK(oracle::max_abs_diff(x2, expected) < 1e-15);

    const auto rho = DensityMatrix::basis(dims, 0);
    const auto flipped = apply_unitary(rho, oracle::pauli_x(), targets);
    CHECK(oracle::max_abs_diff(flipped.data(), oracle::projector(oracle::ket(8, 1))) < 1e-15);
}

TEST_CASE("von Neumann entropy") {
    CHECK(von_neumann_entropy(DensityMatrix::basis({2}, 0)) == doctest::Approx(0.0));
    CHECK(von_neumann_entropy(DensityMatrix::maximally_mixed({2})) == doctest::Approx(1.0).epsilon(1e-12));
    CMatrix diag = CMatrix::Zero(2, 2);
    diag(0, 0) = 0.9;
    diag(1, 1) = 0.1;
    CHECK(von_neumann_entropy(state(diag, {2})) == doctest::Approx(oracle::binary_entropy(0.1)).epsilon(1e-12));
    CHECK(oracle::binary_entropy(0.1) == doctest::Approx(0.4690).epsilon(1e-4));
    CHECK(binary_entropy(0.1) == doctest::Approx(oracle::binary_entropy(0.1)).epsilon(1e-14));
    const double probs[] = {0.5, 0.25, 0.25, 0.0};
    CHECK(shannon_entropy(probs) == doctest::Approx(1.5));
}

TEST_CASE("entropy is additive over tensor products") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = state(oracle::random_density(2, rng), {2});
        const auto b = state(oracle::random_density(4, rng), {2, 2});
        const double lhs = von_neumann_entropy(tensor(a, b));
        CHECK(std::abs(lhs - von_neumann_entropy(a) - von_neumann_entropy(b)) <= 1e-9);
        CHECK(std::abs(von_neumann_entropy(a) - oracle::entropy(a.data())) <= 1e-12);
    }
}

TEST_CASE("relative entropy examples") {
    std::mt19937_64 rng(3);
    const auto rho = random_qubits(2, rng);
    CHECK(relative_entropy(rho, rho) == doctest::Approx(0.0).epsilon(1e-9));

    const auto phi = state(oracle::bell(), {2, 2});
    const auto mixed = DensityMatrix::maximally_mixed({2, 2});
    CHECK(relative_entropy(phi, mixed) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(relative_entropy(phi, mixed) ==
          doctest::Approx(oracle::relative_entropy_diagonal_sigma(oracle::bell(), mixed.data())).epsilon(1e-12));

    CHECK(std::isinf(relative_entropy(DensityMatrix::basis({2}, 0), DensityMatrix::basis({2}, 1))));
    CHECK_THROWS_AS(relative_entropy(phi, DensityMatrix::maximally_mixed({4})), std::invalid_argument);

    CMatrix witness = CMatrix::Zero(4, 4);
    witness(0, 0) = witness(3, 3) = 0.5;
    CHECK(relative_entropy(phi, state(witness, {2, 2})) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("relative entropy is non-negative and vanishes only on equal states") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const auto rho = random_qubits(2, rng);
        const auto sigma = random_qubits(2, rng);
        const double s = relative_entropy(rho, sigma);
        CHECK(s >= -1e-9);
        CHECK((s <= 1e-9) == (trace_distance(rho, sigma) <= 1e-9));
        CHECK(relative_entropy(rho, rho) <= 1e-9);
    }
}

TEST_CASE("relative entropy is monotone under partial trace") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const auto rho = random_qubits(2, rng);
        const auto sigma = random_qubits(2, rng);
        const std::size_t keep[] = {static_cast<std::size_t>(trial % 2)};
        const double reduced = relative_entropy(partial_trace(rho, keep), partial_trace(sigma, keep));
        CHECK(reduced <= relative_entropy(rho, sigma) + 1e-9);
    }
}

TEST_CASE("trace distance") {
    std::mt19937_64 rng(2);
    const auto rho = random_qubits(1, rng);
    CHECK(trace_distance(rho, rho) == doctest::Approx(0.0));
    CHECK(trace_distance(DensityMatrix::basis({2}, 0), DensityMatrix::basis({2}, 1)) == doctest::Approx(1.0));
    CHECK(trace_distance(DensityMatrix::basis({2}, 0), DensityMatrix::maximally_mixed({2})) == doctest::Approx(0.5));
    CHECK_THROWS_AS(trace_distance(rho, DensityMatrix::maximally_mixed({3})), std::invalid_argument);
}

TEST_CASE("clipping small negative eigenvalues") {
    CMatrix m(2, 2);
    m << 1.0 + 5e-9, 0, 0, -5e-9;
    const CMatrix clipped = clip_to_state(m);
    CHECK(hermitian_eigenvalues(clipped).minCoeff() >= 0.0);
    CHECK(clipped.trace().real() == doctest::Approx(1.0));
    CMatrix far(2, 2);
    far << 1.0 + 1e-6, 0, 0, -1e-6;
    CHECK_THROWS(clip_to_state(far));
}
