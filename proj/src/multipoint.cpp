#include "entflux/multipoint.hpp"

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

namespace entflux {

namespace {

constexpr std::size_t kMaxChoiDim = 64;
constexpr std::size_t kMaxUses = 3;
constexpr double kBranchCutoff = 1e-10;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

CMatrix two_qubit_gate(std::initializer_list<cplx> entries) {
    CMatrix m(4, 4);
    auto it = entries.begin();
    for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) m(i, j) = *it++;
    }
    return m;
}

const CMatrix& cnot() {
    static const CMatrix m = two_qubit_gate({1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0});
    return m;
}

const CMatrix& swap_gate() {
    static const CMatrix m = two_qubit_gate({1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1});
    return m;
}

const CMatrix& cz_gate() {
    static const CMatrix m = two_qubit_gate({1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, -1});
    return m;
}

// The 24 single-qubit Cliffords modulo global phase, generated from H and S.
const std::vector<CMatrix>& single_qubit_cliffords() {
    static const std::vector<CMatrix> group = [] {
        CMatrix h(2, 2), s(2, 2);
        h << 1, 1, 1, -1;
        h /= std::sqrt(2.0);
        s << 1, 0, 0, cplx(0, 1);
        auto canonical = [](const CMatrix& m) {
            Eigen::Index i = 0;
            while (std::abs(m(i)) < 1e-9) ++i;
            return CMatrix(m * (std::abs(m(i)) / m(i)));
        };
        auto same = [](const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff() < 1e-9; };
        std::vector<CMatrix> out{CMatrix::Identity(2, 2)};
        for (std::size_t k = 0; k < out.size(); ++k) {
            for (const CMatrix* g : {&h, &s}) {
                const CMatrix next = canonical(*g * out[k]);
                bool seen = false;
                for (const auto& e : out) seen = seen || same(e, next);
                if (!seen) out.push_back(next);
            }
        }
        return out;
    }();
    return group;
}

CMatrix haar_unitary(std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    CMatrix g(idx(d), idx(d));
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = cplx(normal(rng), normal(rng));
    }
    Eigen::HouseholderQR<CMatrix> qr(g);
    const CMatrix q = qr.householderQ();
    const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    CMatrix phases = CMatrix::Zero(idx(d), idx(d));
    for (Eigen::Index i = 0; i < phases.rows(); ++i) phases(i, i) = r(i, i) / std::abs(r(i, i));
    return q * phases;
}

// Depth-2 brickwork of random single-qubit Cliffords and a CNOT chain when
// every local system is a qubit; a seeded Haar unitary otherwise.
CMatrix random_local_unitary(const Dims& dims, std::mt19937_64& rng) {
    const bool qubits = std::all_of(dims.begin(), dims.end(), [](auto d) { return d == 2; });
    if (!qubits) return haar_unitary(product(dims), rng);
    const auto& cliffords = single_qubit_cliffords();
    std::uniform_int_distribution<std::size_t> pick(0, cliffords.size() - 1);
    const auto n = dims.size();
    CMatrix u = CMatrix::Identity(idx(product(dims)), idx(product(dims)));
    for (int layer = 0; layer < 2; ++layer) {
        CMatrix singles = CMatrix::Identity(1, 1);
        for (std::size_t q = 0; q < n; ++q) singles = kron(singles, cliffords[pick(rng)]);
        u = singles * u;
        for (std::size_t q = 0; q + 1 < n; ++q) {
            const std::size_t targets[] = {q, q + 1};
            u = embed_operator(cnot(), dims, targets) * u;
        }
    }
    return u;
}

std::mt19937_64 party_rng(unsigned long long seed, std::size_t round, const std::vector<std::size_t>& history,
                          std::size_t side, std::size_t party) {
    std::vector<std::uint32_t> key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                                   static_cast<std::uint32_t>(round), static_cast<std::uint32_t>(side),
                                   static_cast<std::uint32_t>(party)};
    for (auto h : history) key.push_back(static_cast<std::uint32_t>(h));
    std::seed_seq seq(key.begin(), key.end());
    return std::mt19937_64(seq);
}

struct Branch {
    double prob = 1.0;
    DensityMatrix state;
};

using Ensemble = std::map<std::vector<std::size_t>, Branch>;

std::string sender_label(std::size_t i) { return "a" + std::to_string(i + 1); }
std::string receiver_label(std::size_t j) { return "b" + std::to_string(j + 1); }

Ensemble run_protocol(const MultipointFixture& f, const CovarianceReport* report, std::size_t uses,
                      unsigned long long seed) {
    const auto& ch = f.channel;
    Dims mem_dims(f.senders + f.receivers, 2);
    std::vector<std::string> mem_labels;
    for (std::size_t i = 0; i < f.senders; ++i) mem_labels.push_back("MA" + std::to_string(i + 1));
    for (std::size_t j = 0; j < f.receivers; ++j) mem_labels.push_back("MB" + std::to_string(j + 1));

    Ensemble ensemble;
    ensemble.emplace(std::vector<std::size_t>{}, Branch{1.0, DensityMatrix::basis(mem_dims, 0).with_labels(mem_labels)});

    for (std::size_t round = 0; round < uses; ++round) {
        Ensemble next;
        for (const auto& [history, branch] : ensemble) {
            DensityMatrix rho = branch.state;
            for (std::size_t i = 0; i < f.senders; ++i) {
                const Dims d{ch.in_dims()[i]};
                rho = tensor(rho, DensityMatrix::basis(d, 0).with_labels({sender_label(i)}));
            }
            std::vector<std::size_t> targets;
            for (std::size_t i = 0; i < f.senders; ++i) {
                auto rng = party_rng(seed, round, history, 0, i);
                const std::size_t where[] = {rho.index_of("MA" + std::to_string(i + 1)), rho.index_of(sender_label(i))};
                rho = apply_unitary(rho, random_local_unitary({2, ch.in_dims()[i]}, rng), where);
                targets.push_back(where[1]);
            }

            const auto layout = channel_output_layout(rho.subsystems(), targets, ch.out_dims().size());
            std::vector<std::string> labels;
            for (long entry : layout) {
                labels.push_back(entry < 0 ? receiver_label(static_cast<std::size_t>(-1 - entry))
                                           : rho.labels()[static_cast<std::size_t>(entry)]);
            }
            rho = (report ? teleport_simulate(ch, rho, *report, targets) : apply_channel(ch, rho, targets))
                      .with_labels(labels);

            for (std::size_t j = 0; j < f.receivers; ++j) {
                auto rng = party_rng(seed, round, history, 1, j);
                const std::size_t where[] = {rho.index_of("MB" + std::to_string(j + 1)),
                                             rho.index_of(receiver_label(j))};
                rho = apply_unitary(rho, random_local_unitary({2, ch.out_dims()[j]}, rng), where);
            }

            // The first receiver measures its output and broadcasts the outcome.
            const std::size_t measured[] = {rho.index_of(receiver_label(0))};
            std::vector<std::size_t> memories;
            for (const auto& l : mem_labels) memories.push_back(rho.index_of(l));
            const std::size_t dm = ch.out_dims()[0];
            for (std::size_t m = 0; m < dm; ++m) {
                CMatrix proj = CMatrix::Zero(idx(dm), idx(dm));
                proj(idx(m), idx(m)) = 1.0;
                const CMatrix full = embed_operator(proj, rho.dims(), measured);
                const CMatrix post = full * rho.data() * full.adjoint();
                const double q = post.trace().real();
                if (q < kBranchCutoff) continue;
                const DensityMatrix collapsed(post / q, rho.dims(), rho.labels());
                auto h = history;
                h.push_back(m);
                next.emplace(std::move(h), Branch{branch.prob * q, partial_trace(collapsed, memories)});
            }
        }
        ensemble = std::move(next);
    }
    return ensemble;
}

double ensemble_distance(const Ensemble& a, const Ensemble& b) {
    std::set<std::vector<std::size_t>> keys;
    for (const auto& [k, _] : a) keys.insert(k);
    for (const auto& [k, _] : b) keys.insert(k);
    double total = 0.0;
    for (const auto& k : keys) {
        const auto ia = a.find(k);
        const auto ib = b.find(k);
        if (ia == a.end() || ib == b.end()) {
            total += 0.5 * (ia != a.end() ? ia->second.prob : ib->second.prob);
            continue;
        }
        const CMatrix diff = ia->second.prob * ia->second.state.data() - ib->second.prob * ib->second.state.data();
        total += 0.5 * hermitian_eigenvalues(diff).cwiseAbs().sum();
    }
    return total;
}

std::string party_list(const char* prefix, std::size_t n) {
    std::string out;
    for (std::size_t k = 0; k < n; ++k) {
        if (k) out += ",";
        out += prefix + std::to_string(k + 1);
    }
    return out;
}

}  // namespace

std::string to_string(Topology t) {
    switch (t) {
        case Topology::point_to_point: return "point-to-point";
        case Topology::broadcast: return "broadcast";
        case Topology::mac: return "mac";
        case Topology::interference: return "interference";
    }
    return "unknown";
}

CovarianceMode covariance_mode(Topology t) {
    switch (t) {
        case Topology::point_to_point: return CovarianceMode::point_to_point;
        case Topology::broadcast: return CovarianceMode::broadcast;
        case Topology::mac: return CovarianceMode::mac;
        case Topology::interference: return CovarianceMode::interference;
    }
    throw std::invalid_argument("unknown topology");
}

MultipointFixture make_fixture(std::string name, Topology topology, KrausChannel channel) {
    const auto nin = channel.in_dims().size();
    const auto nout = channel.out_dims().size();
    bool ok = false;
    switch (topology) {
        case Topology::point_to_point: ok = nin == 1 && nout == 1; break;
        case Topology::broadcast: ok = nin == 1 && nout >= 2; break;
        case Topology::mac: ok = nin >= 2 && nout == 1; break;
        case Topology::interference: ok = nin >= 2 && nout >= 2; break;
    }
    if (!ok) throw std::invalid_argument("fixture " + name + ": topology does not match channel dims");
    return MultipointFixture{std::move(name), topology, std::move(channel), nin, nout};
}

std::vector<std::string> fixture_names() {
    return {"identity",          "dephasing",       "non-covariant", "copying-broadcast",
            "swap-interference", "cz-interference", "cz-mac",        "dephasing-interference"};
}

MultipointFixture make_fixture(const std::string& name) {
    if (name == "identity") {
        return make_fixture(name, Topology::point_to_point, make_channel(RawKrausSpec{{CMatrix::Identity(2, 2)}, {2}, {2}}));
    }
    if (name == "dephasing") {
        return make_fixture(name, Topology::point_to_point, make_channel(qubit_dephasing(0.25)));
    }
    if (name == "non-covariant") {
        // rho -> <0|rho|0> |0><0| + <1|rho|1> |+><+|
        CMatrix k0 = CMatrix::Zero(2, 2), k1 = CMatrix::Zero(2, 2);
        k0(0, 0) = 1.0;
        k1(0, 1) = k1(1, 1) = 1.0 / std::sqrt(2.0);
        return make_fixture(name, Topology::point_to_point, make_channel(RawKrausSpec{{k0, k1}, {2}, {2}}));
    }
    if (name == "copying-broadcast") {
        return make_fixture(name, Topology::broadcast, make_channel(WiringSpec{cnot(), {2}, {2}, {0, 1}}));
    }
    if (name == "swap-interference") {
        return make_fixture(name, Topology::interference, make_channel(WiringSpec{swap_gate(), {2, 2}, {}, {0, 1}}));
    }
    if (name == "cz-interference") {
        return make_fixture(name, Topology::interference, make_channel(WiringSpec{cz_gate(), {2, 2}, {}, {0, 1}}));
    }
    if (name == "cz-mac") {
        return make_fixture(name, Topology::mac, make_channel(WiringSpec{cz_gate(), {2, 2}, {}, {0}}));
    }
    if (name == "dephasing-interference") {
        const auto deph = make_channel(qubit_dephasing(0.1));
        return make_fixture(name, Topology::interference, parallel(deph, deph));
    }
    throw std::invalid_argument("unknown fixture: " + name);
}

ChoiMatrix multipoint_choi(const MultipointFixture& f) {
    if (f.channel.in_size() * f.channel.out_size() > kMaxChoiDim) {
        throw std::invalid_argument("multipoint_choi: Choi dimension above 64");
    }
    return choi_matrix(f.channel);
}

StretchingReport verify_stretching(const MultipointFixture& f, std::size_t uses, unsigned long long seed) {
    if (uses == 0 || uses > kMaxUses) throw std::invalid_argument("verify_stretching: uses must be in [1, 3]");
    StretchingReport out;
    out.uses = uses;
    out.covariance = check_covariance(f.channel, covariance_mode(f.topology));
    if (!out.covariance.covariant) {
        out.message = "not teleportation covariant; stretching skipped";
        return out;
    }
    const Ensemble direct = run_protocol(f, nullptr, uses, seed);
    const Ensemble simulated = run_protocol(f, &out.covariance, uses, seed);
    out.ran = true;
    out.branches = direct.size();
    out.max_deviation = ensemble_distance(direct, simulated);
    out.passed = out.max_deviation <= kStretchingTolerance;
    out.message = out.passed ? "channel and teleportation simulation agree on every branch"
                             : "teleportation simulation deviates from the channel";
    return out;
}

std::vector<BoundReport> pair_flux_bounds(const MultipointFixture& f, const EstimatorOptions& options) {
    const ChoiMatrix choi = multipoint_choi(f);
    const auto& rho = choi.state;

    EstimatorOptions fine_opts = options;
    fine_opts.warm_start.reset();
    const ReeEstimate fine = ree_upper_estimate(rho, {fully_separable_cut(rho.subsystems()), 0}, fine_opts);

    EstimatorOptions coarse_opts = options;
    coarse_opts.warm_start = fine.witness;
    const ReeEstimate coarse =
        ree_upper_estimate(rho, {bipartite_cut(choi.sender_indices, choi.receiver_indices), 0}, coarse_opts);

    const std::string tag =
        "E_R(" + party_list("a", f.senders) + "|" + party_list("b", f.receivers) + ") heuristic upper bound";
    std::vector<BoundReport> reports;
    for (std::size_t i = 0; i < f.senders; ++i) {
        for (std::size_t j = 0; j < f.receivers; ++j) {
            BoundReport r;
            r.channel_id = f.name;
            r.pair = {i, j};
            r.bound_bits = coarse.bits;
            r.formula = tag;
            r.params = {{"budget", static_cast<double>(options.budget)}, {"seed", static_cast<double>(options.seed)}};
            r.diagnostics = {{"fully_separable_bits", fine.bits},
                             {"evaluations", static_cast<double>(coarse.evaluations + fine.evaluations)}};
            if (rho.subsystems() > 2) {
                const std::size_t keep[] = {choi.sender_indices[i], choi.receiver_indices[j]};
                const ReeEstimate reduced =
                    ree_upper_estimate(partial_trace(rho, keep), {bipartite_cut({0}, {1}), 0}, fine_opts);
                r.diagnostics["reduced_pair_bits"] = reduced.bits;
            }
            validate(r);
            reports.push_back(std::move(r));
        }
    }
    return reports;
}

}  // namespace entflux
