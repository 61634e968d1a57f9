#include "entflux/dv_channels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace entflux {

namespace {

constexpr double kProbTolerance = 1e-10;
constexpr std::size_t kCovarianceProbes = 10;
constexpr unsigned long long kProbeSeed = 0x5eed'c0ffeeULL;
constexpr std::size_t kMaxCovarianceDim = 16;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void validate_distribution(std::span<const double> probs, const char* what) {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= -kProbTolerance && p <= 1.0 + kProbTolerance)) {
            throw std::invalid_argument(std::string(what) + ": probability outside [0,1]");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProbTolerance) {
        throw std::invalid_argument(std::string(what) + ": probabilities do not sum to 1");
    }
}

void validate_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + ": probability outside [0,1]");
}

CMatrix permute_matrix(const CMatrix& m, const Dims& dims, std::span<const std::size_t> order) {
    const auto map = permutation_index_map(dims, order);
    const auto n = idx(map.size());
    CMatrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = m(idx(map[i]), idx(map[j]));
    }
    return out;
}

std::vector<std::size_t> targets_then_rest(std::size_t n, std::span<const std::size_t> targets) {
    std::vector<bool> used(n, false);
    std::vector<std::size_t> order;
    for (auto t : targets) {
        if (t >= n) throw std::out_of_range("target subsystem out of range");
        if (used[t]) throw std::invalid_argument("duplicate target subsystem");
        used[t] = true;
        order.push_back(t);
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (!used[k]) order.push_back(k);
    }
    return order;
}

// rho is laid out as (head (x) tail) with head dimension ops.cols(); returns
// sum_K (K (x) I) rho (K (x) I)^dagger without forming the Kronecker product.
CMatrix apply_on_head(const std::vector<CMatrix>& ops, const CMatrix& rho, std::size_t tail) {
    const auto t = idx(tail);
    const auto din = ops.front().cols();
    const auto dout = ops.front().rows();
    CMatrix out = CMatrix::Zero(dout * t, dout * t);
    for (const auto& k : ops) {
        // First contract the row index, then the column index.
        CMatrix half = CMatrix::Zero(dout * t, din * t);
        for (Eigen::Index o = 0; o < dout; ++o) {
            for (Eigen::Index i = 0; i < din; ++i) {
                const cplx kv = k(o, i);
                if (kv == cplx(0.0)) continue;
                half.middleRows(o * t, t) += kv * rho.middleRows(i * t, t);
            }
        }
        for (Eigen::Index o = 0; o < dout; ++o) {
            for (Eigen::Index i = 0; i < din; ++i) {
                const cplx kv = std::conj(k(o, i));
                if (kv == cplx(0.0)) continue;
                out.middleCols(o * t, t) += kv * half.middleCols(i * t, t);
            }
        }
    }
    return out;
}

std::vector<std::vector<std::size_t>> index_tuples(const Dims& radices) {
    std::vector<std::vector<std::size_t>> tuples;
    std::vector<std::size_t> cur(radices.size(), 0);
    const std::size_t total = product(radices);
    for (std::size_t n = 0; n < total; ++n) {
        tuples.push_back(cur);
        for (std::size_t k = radices.size(); k-- > 0;) {
            if (++cur[k] < radices[k]) break;
            cur[k] = 0;
        }
    }
    return tuples;
}

CMatrix leg_unitary(const Dims& dims, std::span<const std::size_t> indices) {
    CMatrix u = CMatrix::Identity(1, 1);
    for (std::size_t k = 0; k < dims.size(); ++k) u = kron(u, heisenberg_weyl(dims[k], indices[k]));
    return u;
}

// Heisenberg-Weyl on the first `logical` levels, identity on the flag levels.
CMatrix flagged_weyl(std::size_t dim, std::size_t logical, std::size_t index) {
    CMatrix u = CMatrix::Identity(idx(dim), idx(dim));
    u.topLeftCorner(idx(logical), idx(logical)) = heisenberg_weyl(logical, index);
    return u;
}

std::string weyl_label(std::size_t d, std::size_t index) {
    return "W" + std::to_string(d) + "(" + std::to_string(index / d) + "," + std::to_string(index % d) + ")";
}

std::vector<Correction> correction_candidates(const KrausChannel& ch, CovarianceMode mode) {
    const auto& out = ch.out_dims();
    const auto& logical = ch.out_logical_dims();
    Dims radices;
    for (auto l : logical) radices.push_back(l * l);

    std::vector<Correction> cands;
    for (const auto& tuple : index_tuples(radices)) {
        CMatrix u = CMatrix::Identity(1, 1);
        std::string label;
        for (std::size_t k = 0; k < out.size(); ++k) {
            u = kron(u, flagged_weyl(out[k], logical[k], tuple[k]));
            if (!label.empty()) label += "x";
            label += weyl_label(logical[k], tuple[k]);
        }
        cands.push_back({std::move(label), std::move(u)});
    }
    const bool joint = mode == CovarianceMode::point_to_point || mode == CovarianceMode::mac;
    if (joint && out.size() > 1 && logical == out) {
        const std::size_t d = product(out);
        for (std::size_t k = 0; k < d * d; ++k) {
            cands.push_back({"joint:" + weyl_label(d, k), heisenberg_weyl(d, k)});
        }
    }
    return cands;
}

void check_topology(const KrausChannel& ch, CovarianceMode mode) {
    const auto nin = ch.in_dims().size();
    const auto nout = ch.out_dims().size();
    bool ok = false;
    switch (mode) {
        case CovarianceMode::point_to_point: ok = nin == 1 && nout == 1; break;
        case CovarianceMode::broadcast: ok = nin == 1 && nout >= 2; break;
        case CovarianceMode::mac: ok = nin >= 2 && nout == 1; break;
        case CovarianceMode::interference: ok = nin >= 2 && nout >= 2; break;
    }
    if (!ok) throw std::invalid_argument("check_covariance: channel shape does not match mode " + to_string(mode));
}

DensityMatrix conjugate(const CMatrix& u, const DensityMatrix& rho) {
    return {u * rho.data() * u.adjoint(), rho.dims()};
}

}  // namespace

std::string spec_name(const ChannelSpec& spec) {
    return std::visit(overloaded{
                          [](const PauliSpec&) { return std::string("pauli"); },
                          [](const DephasingSpec&) { return std::string("dephasing"); },
                          [](const ErasureSpec&) { return std::string("erasure"); },
                          [](const DepolarizingSpec&) { return std::string("depolarizing"); },
                          [](const RawKrausSpec&) { return std::string("kraus"); },
                          [](const WiringSpec&) { return std::string("wiring"); },
                          [](const LossySpec&) { return std::string("lossy"); },
                          [](const AmplifierSpec&) { return std::string("amplifier"); },
                          [](const ThermalLossSpec&) { return std::string("thermal_loss"); },
                      },
                      spec);
}

DephasingSpec qubit_dephasing(double p) { return DephasingSpec{2, {1.0 - p, p}}; }

std::string to_string(CovarianceMode mode) {
    switch (mode) {
        case CovarianceMode::point_to_point: return "point-to-point";
        case CovarianceMode::broadcast: return "broadcast";
        case CovarianceMode::mac: return "mac";
        case CovarianceMode::interference: return "interference";
    }
    return "unknown";
}

KrausChannel::KrausChannel(std::vector<CMatrix> ops, Dims in_dims, Dims out_dims, Dims out_logical_dims)
    : ops_(std::move(ops)),
      in_dims_(std::move(in_dims)),
      out_dims_(std::move(out_dims)),
      out_logical_dims_(std::move(out_logical_dims)) {
    if (ops_.empty()) throw std::invalid_argument("KrausChannel: no Kraus operators");
    if (in_dims_.empty() || out_dims_.empty()) throw std::invalid_argument("KrausChannel: empty dims");
    if (out_logical_dims_.empty()) out_logical_dims_ = out_dims_;
    if (out_logical_dims_.size() != out_dims_.size()) {
        throw std::invalid_argument("KrausChannel: logical dims do not match outputs");
    }
    for (std::size_t k = 0; k < out_dims_.size(); ++k) {
        if (out_logical_dims_[k] == 0 || out_logical_dims_[k] > out_dims_[k]) {
            throw std::invalid_argument("KrausChannel: invalid logical dimension");
        }
    }
    const auto din = idx(in_size());
    const auto dout = idx(out_size());
    CMatrix sum = CMatrix::Zero(din, din);
    for (const auto& k : ops_) {
        if (k.rows() != dout || k.cols() != din) throw std::invalid_argument("KrausChannel: Kraus operator shape mismatch");
        sum += k.adjoint() * k;
    }
    if ((sum - CMatrix::Identity(din, din)).cwiseAbs().maxCoeff() > kStateTolerance) {
        throw std::invalid_argument("KrausChannel: Kraus operators are not trace preserving");
    }
}

CMatrix heisenberg_weyl(std::size_t d, std::size_t index) {
    if (d == 0 || index >= d * d) throw std::out_of_range("heisenberg_weyl: index out of range");
    const std::size_t a = index / d;
    const std::size_t b = index % d;
    CMatrix w = CMatrix::Zero(idx(d), idx(d));
    for (std::size_t j = 0; j < d; ++j) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>((b * j) % d) / static_cast<double>(d);
        w(idx((j + a) % d), idx(j)) = std::polar(1.0, angle);
    }
    return w;
}

std::size_t heisenberg_weyl_conjugate_index(std::size_t d, std::size_t index) {
    const std::size_t a = index / d;
    const std::size_t b = index % d;
    return a * d + (d - b) % d;
}

KrausChannel make_channel(const ChannelSpec& spec) {
    return std::visit(
        overloaded{
            [](const PauliSpec& s) {
                if (s.d < 2) throw std::invalid_argument("pauli: d must be >= 2");
                if (s.probs.size() != s.d * s.d) throw std::invalid_argument("pauli: need d^2 probabilities");
                validate_distribution(s.probs, "pauli");
                std::vector<CMatrix> ops;
                for (std::size_t k = 0; k < s.probs.size(); ++k) {
                    if (s.probs[k] > 0.0) ops.push_back(std::sqrt(s.probs[k]) * heisenberg_weyl(s.d, k));
                }
                return KrausChannel(std::move(ops), {s.d}, {s.d});
            },
            [](const DephasingSpec& s) {
                if (s.d < 2) throw std::invalid_argument("dephasing: d must be >= 2");
                if (s.probs.size() != s.d) throw std::invalid_argument("dephasing: need d probabilities");
                validate_distribution(s.probs, "dephasing");
                std::vector<CMatrix> ops;
                for (std::size_t i = 0; i < s.d; ++i) {
                    if (s.probs[i] > 0.0) ops.push_back(std::sqrt(s.probs[i]) * heisenberg_weyl(s.d, i));
                }
                return KrausChannel(std::move(ops), {s.d}, {s.d});
            },
            [](const ErasureSpec& s) {
                if (s.d < 2) throw std::invalid_argument("erasure: d must be >= 2");
                validate_probability(s.p, "erasure");
                const auto d = idx(s.d);
                std::vector<CMatrix> ops;
                CMatrix keep = CMatrix::Zero(d + 1, d);
                keep.topRows(d) = CMatrix::Identity(d, d);
                ops.push_back(std::sqrt(1.0 - s.p) * keep);
                for (Eigen::Index j = 0; j < d; ++j) {
                    CMatrix erase = CMatrix::Zero(d + 1, d);
                    erase(d, j) = std::sqrt(s.p);
                    ops.push_back(std::move(erase));
                }
                return KrausChannel(std::move(ops), {s.d}, {s.d + 1}, {s.d});
            },
            [](const DepolarizingSpec& s) {
                validate_probability(s.p, "depolarizing");
                const double dd = static_cast<double>(s.d * s.d);
                std::vector<double> probs(s.d * s.d, s.p / dd);
                probs[0] = 1.0 - s.p + s.p / dd;
                return make_channel(PauliSpec{s.d, std::move(probs)});
            },
            [](const RawKrausSpec& s) { return KrausChannel(s.ops, s.in_dims, s.out_dims); },
            [](const WiringSpec& s) {
                Dims joint = s.in_dims;
                joint.insert(joint.end(), s.ancilla_dims.begin(), s.ancilla_dims.end());
                const auto din = product(s.in_dims);
                const auto danc = product(s.ancilla_dims);
                const auto dj = din * danc;
                if (s.unitary.rows() != idx(dj) || s.unitary.cols() != idx(dj)) {
                    throw std::invalid_argument("wiring: unitary shape mismatch");
                }
                if ((s.unitary.adjoint() * s.unitary - CMatrix::Identity(idx(dj), idx(dj))).cwiseAbs().maxCoeff() >
                    kStateTolerance) {
                    throw std::invalid_argument("wiring: matrix is not unitary");
                }
                if (s.keep.empty()) throw std::invalid_argument("wiring: keep set is empty");
                // Isometry: columns of U on |i>|0...0>.
                CMatrix iso(idx(dj), idx(din));
                for (std::size_t i = 0; i < din; ++i) iso.col(idx(i)) = s.unitary.col(idx(i * danc));

                const auto order = targets_then_rest(joint.size(), s.keep);
                const auto map = permutation_index_map(joint, order);
                Dims out_dims;
                for (auto k : s.keep) out_dims.push_back(joint[k]);
                const auto dout = product(out_dims);
                const auto ddisc = dj / dout;
                std::vector<CMatrix> ops;
                for (std::size_t t = 0; t < ddisc; ++t) {
                    CMatrix k(idx(dout), idx(din));
                    for (std::size_t o = 0; o < dout; ++o) k.row(idx(o)) = iso.row(idx(map[o * ddisc + t]));
                    if (k.cwiseAbs().maxCoeff() > 0.0) ops.push_back(std::move(k));
                }
                return KrausChannel(std::move(ops), s.in_dims, std::move(out_dims));
            },
            [](const auto&) -> KrausChannel {
                throw std::invalid_argument("make_channel: bosonic channels have no finite Kraus form");
            },
        },
        spec);
}

KrausChannel parallel(const KrausChannel& a, const KrausChannel& b) {
    std::vector<CMatrix> ops;
    for (const auto& ka : a.kraus_ops()) {
        for (const auto& kb : b.kraus_ops()) ops.push_back(kron(ka, kb));
    }
    auto cat = [](Dims x, const Dims& y) {
        x.insert(x.end(), y.begin(), y.end());
        return x;
    };
    return {std::move(ops), cat(a.in_dims(), b.in_dims()), cat(a.out_dims(), b.out_dims()),
            cat(a.out_logical_dims(), b.out_logical_dims())};
}

KrausChannel restrict_outputs(const KrausChannel& ch, std::span<const std::size_t> keep) {
    if (keep.empty()) throw std::invalid_argument("restrict_outputs: keep set is empty");
    const auto order = targets_then_rest(ch.out_dims().size(), keep);
    const auto map = permutation_index_map(ch.out_dims(), order);
    Dims out, logical;
    for (auto k : keep) {
        out.push_back(ch.out_dims()[k]);
        logical.push_back(ch.out_logical_dims()[k]);
    }
    const auto dout = product(out);
    const auto ddisc = ch.out_size() / dout;
    std::vector<CMatrix> ops;
    for (const auto& k : ch.kraus_ops()) {
        for (std::size_t t = 0; t < ddisc; ++t) {
            CMatrix kt(idx(dout), k.cols());
            for (std::size_t o = 0; o < dout; ++o) kt.row(idx(o)) = k.row(idx(map[o * ddisc + t]));
            if (kt.cwiseAbs().maxCoeff() > 0.0) ops.push_back(std::move(kt));
        }
    }
    return {std::move(ops), ch.in_dims(), std::move(out), std::move(logical)};
}

DensityMatrix apply_channel(const KrausChannel& ch, const DensityMatrix& rho) {
    if (rho.dims() != ch.in_dims()) throw std::invalid_argument("apply_channel: dimension mismatch");
    CMatrix out = CMatrix::Zero(idx(ch.out_size()), idx(ch.out_size()));
    for (const auto& k : ch.kraus_ops()) out += k * rho.data() * k.adjoint();
    return {std::move(out), ch.out_dims()};
}

std::vector<long> channel_output_layout(std::size_t subsystems, std::span<const std::size_t> targets,
                                        std::size_t outputs) {
    const std::size_t first = *std::min_element(targets.begin(), targets.end());
    std::vector<long> layout;
    for (std::size_t k = 0; k < subsystems; ++k) {
        if (k == first) {
            for (std::size_t o = 0; o < outputs; ++o) layout.push_back(-1 - static_cast<long>(o));
        }
        if (std::find(targets.begin(), targets.end(), k) == targets.end()) layout.push_back(static_cast<long>(k));
    }
    return layout;
}

namespace {

// `local` is laid out as (outputs..., spectators...) where spectators are the
// non-target subsystems of `dims` in original order.
DensityMatrix restore_layout(const CMatrix& local, const Dims& dims, std::span<const std::size_t> targets,
                             const Dims& out_dims) {
    std::vector<std::size_t> spectators;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (std::find(targets.begin(), targets.end(), k) == targets.end()) spectators.push_back(k);
    }
    Dims local_dims = out_dims;
    for (auto s : spectators) local_dims.push_back(dims[s]);

    const auto layout = channel_output_layout(dims.size(), targets, out_dims.size());
    std::vector<std::size_t> order;
    Dims final_dims;
    for (long entry : layout) {
        if (entry < 0) {
            order.push_back(static_cast<std::size_t>(-1 - entry));
        } else {
            const auto pos = std::find(spectators.begin(), spectators.end(), static_cast<std::size_t>(entry)) -
                             spectators.begin();
            order.push_back(out_dims.size() + static_cast<std::size_t>(pos));
        }
        final_dims.push_back(local_dims[order.back()]);
    }
    return {permute_matrix(local, local_dims, order), std::move(final_dims)};
}

void check_targets(const KrausChannel& ch, const DensityMatrix& rho, std::span<const std::size_t> targets) {
    if (targets.size() != ch.in_dims().size()) throw std::invalid_argument("channel: target count mismatch");
    for (std::size_t k = 0; k < targets.size(); ++k) {
        if (targets[k] >= rho.subsystems()) throw std::out_of_range("channel: target out of range");
        if (rho.dims()[targets[k]] != ch.in_dims()[k]) throw std::invalid_argument("channel: dimension mismatch");
    }
}

}  // namespace

DensityMatrix apply_channel(const KrausChannel& ch, const DensityMatrix& rho, std::span<const std::size_t> targets) {
    check_targets(ch, rho, targets);
    const auto order = targets_then_rest(rho.subsystems(), targets);
    const CMatrix moved = permute_matrix(rho.data(), rho.dims(), order);
    const std::size_t tail = rho.size() / ch.in_size();
    return restore_layout(apply_on_head(ch.kraus_ops(), moved, tail), rho.dims(), targets, ch.out_dims());
}

ChoiMatrix choi_matrix(const KrausChannel& ch) {
    const auto din = idx(ch.in_size());
    const auto dout = idx(ch.out_size());
    const double norm = 1.0 / std::sqrt(static_cast<double>(din));
    CMatrix choi = CMatrix::Zero(din * dout, din * dout);
    for (const auto& k : ch.kraus_ops()) {
        CVector v(din * dout);
        for (Eigen::Index i = 0; i < din; ++i) v.segment(i * dout, dout) = norm * k.col(i);
        choi += v * v.adjoint();
    }
    Dims dims = ch.in_dims();
    dims.insert(dims.end(), ch.out_dims().begin(), ch.out_dims().end());
    ChoiMatrix out{DensityMatrix(std::move(choi), std::move(dims)), {}, {}};
    for (std::size_t k = 0; k < ch.in_dims().size(); ++k) out.sender_indices.push_back(k);
    for (std::size_t k = 0; k < ch.out_dims().size(); ++k) out.receiver_indices.push_back(ch.in_dims().size() + k);
    return out;
}

DensityMatrix random_state(const Dims& dims, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto n = idx(product(dims));
    CMatrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) g(i, j) = cplx(normal(rng), normal(rng));
    }
    CMatrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    return {0.5 * (rho + rho.adjoint()), dims};
}

CovarianceReport check_covariance(const KrausChannel& ch, CovarianceMode mode) {
    check_topology(ch, mode);
    if (ch.in_size() > kMaxCovarianceDim || ch.out_size() > kMaxCovarianceDim) {
        throw std::invalid_argument("check_covariance: dimension too large to enumerate");
    }
    std::vector<DensityMatrix> probes;
    std::vector<DensityMatrix> outputs;
    for (std::size_t s = 0; s < kCovarianceProbes; ++s) {
        probes.push_back(random_state(ch.in_dims(), kProbeSeed + s));
        outputs.push_back(apply_channel(ch, probes.back()));
    }
    const auto candidates = correction_candidates(ch, mode);

    Dims radices;
    for (auto d : ch.in_dims()) radices.push_back(d * d);

    CovarianceReport report;
    report.mode = mode;
    for (const auto& tuple : index_tuples(radices)) {
        const CMatrix u = leg_unitary(ch.in_dims(), tuple);
        std::vector<DensityMatrix> moved;
        for (const auto& p : probes) moved.push_back(apply_channel(ch, conjugate(u, p)));

        double best = kInfinity;
        const Correction* best_cand = nullptr;
        for (const auto& cand : candidates) {
            double dev = 0.0;
            for (std::size_t s = 0; s < probes.size() && dev < best; ++s) {
                dev = std::max(dev, trace_distance(moved[s], conjugate(cand.unitary, outputs[s])));
            }
            if (dev < best) {
                best = dev;
                best_cand = &cand;
            }
            if (best <= 1e-13) break;
        }
        report.worst_deviation = std::max(report.worst_deviation, best);
        report.correction_table.emplace(tuple, *best_cand);
    }
    report.covariant = report.worst_deviation <= kCovarianceTolerance;
    return report;
}

DensityMatrix teleport_simulate(const KrausChannel& ch, const DensityMatrix& rho_in, const CovarianceReport& report) {
    std::vector<std::size_t> targets(ch.in_dims().size());
    for (std::size_t k = 0; k < targets.size(); ++k) targets[k] = k;
    if (rho_in.dims() != ch.in_dims()) throw std::invalid_argument("teleport_simulate: dimension mismatch");
    return teleport_simulate(ch, rho_in, report, targets);
}

DensityMatrix teleport_simulate(const KrausChannel& ch, const DensityMatrix& rho, const CovarianceReport& report,
                                std::span<const std::size_t> targets) {
    if (!report.covariant) throw std::invalid_argument("teleport_simulate: channel report is not covariant");
    check_targets(ch, rho, targets);

    const ChoiMatrix choi = choi_matrix(ch);
    const std::size_t legs = ch.in_dims().size();
    const std::size_t din = ch.in_size();
    const std::size_t dout = ch.out_size();
    const std::size_t dspec = rho.size() / din;

    // rho -> (a..., S...), joint with the Choi matrix (R..., B...).
    const auto order = targets_then_rest(rho.subsystems(), targets);
    const CMatrix moved = permute_matrix(rho.data(), rho.dims(), order);
    Dims joint_dims;
    for (auto k : order) joint_dims.push_back(rho.dims()[k]);
    const std::size_t nspec = joint_dims.size() - legs;
    joint_dims.insert(joint_dims.end(), choi.state.dims().begin(), choi.state.dims().end());

    // Regroup to (a..., R..., S..., B...).
    std::vector<std::size_t> regroup;
    for (std::size_t k = 0; k < legs; ++k) regroup.push_back(k);
    for (std::size_t k = 0; k < legs; ++k) regroup.push_back(legs + nspec + k);
    for (std::size_t k = 0; k < nspec; ++k) regroup.push_back(legs + k);
    for (std::size_t k = 0; k < ch.out_dims().size(); ++k) regroup.push_back(2 * legs + nspec + k);
    const CMatrix joint = permute_matrix(kron(moved, choi.state.data()), joint_dims, regroup);

    const auto rest = idx(dspec * dout);
    const double norm = 1.0 / std::sqrt(static_cast<double>(din));
    Dims radices;
    for (auto d : ch.in_dims()) radices.push_back(d * d);

    CMatrix total = CMatrix::Zero(rest, rest);
    for (const auto& outcome : index_tuples(radices)) {
        // Bell vector (I (x) W)|Phi> on (a..., R...): component (i, j) = W(j, i)/sqrt(D).
        const CMatrix w = leg_unitary(ch.in_dims(), outcome);
        std::vector<std::pair<std::size_t, cplx>> bell;
        for (std::size_t i = 0; i < din; ++i) {
            for (std::size_t j = 0; j < din; ++j) {
                const cplx v = w(idx(j), idx(i));
                if (v != cplx(0.0)) bell.emplace_back(i * din + j, norm * v);
            }
        }
        CMatrix post = CMatrix::Zero(rest, rest);
        for (const auto& [x, fx] : bell) {
            for (const auto& [y, fy] : bell) {
                post += std::conj(fx) * fy * joint.block(idx(x) * rest, idx(y) * rest, rest, rest);
            }
        }
        // The measured input saw conj(W); undo the matching output correction.
        std::vector<std::size_t> key(legs);
        for (std::size_t k = 0; k < legs; ++k) key[k] = heisenberg_weyl_conjugate_index(ch.in_dims()[k], outcome[k]);
        const auto it = report.correction_table.find(key);
        if (it == report.correction_table.end()) {
            throw std::invalid_argument("teleport_simulate: correction table has no entry for an outcome");
        }
        const CMatrix fix = kron(CMatrix::Identity(idx(dspec), idx(dspec)), it->second.unitary.adjoint());
        total += fix * post * fix.adjoint();
    }

    // total is laid out as (S..., B...); move outputs to the front for restore_layout.
    Dims sb_dims;
    for (std::size_t k = 0; k < nspec; ++k) sb_dims.push_back(joint_dims[legs + k]);
    sb_dims.insert(sb_dims.end(), ch.out_dims().begin(), ch.out_dims().end());
    std::vector<std::size_t> outputs_first;
    for (std::size_t k = 0; k < ch.out_dims().size(); ++k) outputs_first.push_back(nspec + k);
    for (std::size_t k = 0; k < nspec; ++k) outputs_first.push_back(k);
    return restore_layout(permute_matrix(total, sb_dims, outputs_first), rho.dims(), targets, ch.out_dims());
}

CoherentInformation coherent_information(const KrausChannel& ch, const DensityMatrix& rho_in) {
    if (rho_in.dims() != ch.in_dims()) throw std::invalid_argument("coherent_information: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(rho_in.data());
    const auto d = idx(ch.in_size());
    CVector psi = CVector::Zero(d * d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double l = std::max(solver.eigenvalues()(i), 0.0);
        psi.segment(i * d, d) = std::sqrt(l) * solver.eigenvectors().col(i);
    }
    Dims dims{ch.in_size()};
    dims.insert(dims.end(), ch.in_dims().begin(), ch.in_dims().end());
    std::vector<std::size_t> targets;
    for (std::size_t k = 0; k < ch.in_dims().size(); ++k) targets.push_back(k + 1);

    const DensityMatrix omega = apply_channel(ch, DensityMatrix::pure(psi, dims), targets);
    const std::size_t ref[] = {0};
    std::vector<std::size_t> outputs;
    for (std::size_t k = 1; k < omega.subsystems(); ++k) outputs.push_back(k);

    const double s_ab = von_neumann_entropy(omega);
    const double s_a = von_neumann_entropy(partial_trace(omega, ref));
    const double s_b = von_neumann_entropy(partial_trace(omega, outputs));
    return {s_b - s_ab, s_a - s_ab};
}

}  // namespace entflux
