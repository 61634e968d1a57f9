#include "entflux/capacity_bounds.hpp"
#include "entflux/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace entflux {

namespace {

constexpr double kPadding = 1e-9;
constexpr double kStartTemperature = 0.1;
constexpr double kEndTemperature = 1e-5;
constexpr double kStartStep = 0.5;
constexpr double kEndStep = 1e-3;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

// x_0 = cos t_0, x_1 = sin t_0 cos t_1, ..., x_{n-1} = prod sin t_k.
void unit_from_angles(const double* angles, std::size_t n, double* out) {
    double s = 1.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        out[k] = s * std::cos(angles[k]);
        s *= std::sin(angles[k]);
    }
    out[n - 1] = s;
}

void angles_from_unit(const double* x, std::size_t n, double* angles) {
    // tail[k] = norm of x_k .. x_{n-1}
    std::vector<double> tail(n + 1, 0.0);
    for (std::size_t k = n; k-- > 0;) tail[k] = std::hypot(tail[k + 1], x[k]);
    for (std::size_t k = 0; k + 1 < n; ++k) angles[k] = std::atan2(tail[k + 1], x[k]);
}

// Parameter layout: (K-1) weight angles, then per term and group
// (D_g - 1) amplitude angles followed by (D_g - 1) relative phases.
class AnsatzModel {
public:
    AnsatzModel(const Dims& dims, Cut cut, std::size_t components) : dims_(dims), cut_(std::move(cut)) {
        std::vector<std::size_t> concat;
        for (const auto& g : cut_) {
            Dims gd;
            for (auto s : g) {
                gd.push_back(dims_[s]);
                concat.push_back(s);
            }
            group_dims_.push_back(product(gd));
            group_sub_dims_.push_back(std::move(gd));
        }
        // Product vectors are built in group order; map back to subsystem order.
        Dims concat_dims;
        for (auto s : concat) concat_dims.push_back(dims_[s]);
        std::vector<std::size_t> order(dims_.size());
        for (std::size_t k = 0; k < concat.size(); ++k) order[concat[k]] = k;
        to_original_ = permutation_index_map(concat_dims, order);

        std::size_t largest = *std::max_element(group_dims_.begin(), group_dims_.end());
        components_ = std::max<std::size_t>(components == 0 ? largest * largest : components, 1);
        per_term_ = 0;
        for (auto d : group_dims_) per_term_ += 2 * (d - 1);
        total_ = product(dims_);
    }

    std::size_t components() const { return components_; }
    std::size_t parameter_count() const { return components_ - 1 + components_ * per_term_; }
    const Cut& cut() const { return cut_; }
    const std::vector<std::size_t>& group_dims() const { return group_dims_; }

    std::vector<double> weights(const std::vector<double>& p) const {
        std::vector<double> w(components_);
        unit_from_angles(p.data(), components_, w.data());
        for (auto& x : w) x *= x;
        return w;
    }

    CVector group_state(const std::vector<double>& p, std::size_t term, std::size_t group) const {
        const std::size_t d = group_dims_[group];
        std::size_t off = components_ - 1 + term * per_term_;
        for (std::size_t g = 0; g < group; ++g) off += 2 * (group_dims_[g] - 1);
        std::vector<double> amp(d);
        unit_from_angles(p.data() + off, d, amp.data());
        CVector v(idx(d));
        v(0) = amp[0];
        for (std::size_t k = 1; k < d; ++k) v(idx(k)) = std::polar(amp[k], p[off + d - 1 + k - 1]);
        return v;
    }

    void encode_group_state(std::vector<double>& p, std::size_t term, std::size_t group, const CVector& v) const {
        const std::size_t d = group_dims_[group];
        std::size_t off = components_ - 1 + term * per_term_;
        for (std::size_t g = 0; g < group; ++g) off += 2 * (group_dims_[g] - 1);
        std::vector<double> mag(d);
        for (std::size_t k = 0; k < d; ++k) mag[k] = std::abs(v(idx(k)));
        const double norm = std::sqrt(std::inner_product(mag.begin(), mag.end(), mag.begin(), 0.0));
        for (auto& m : mag) m /= norm;
        angles_from_unit(mag.data(), d, p.data() + off);
        const double ref = std::arg(v(0));
        for (std::size_t k = 1; k < d; ++k) p[off + d - 1 + k - 1] = std::arg(v(idx(k))) - ref;
    }

    void encode_weights(std::vector<double>& p, std::vector<double> w) const {
        for (auto& x : w) x = std::sqrt(std::max(x, 0.0));
        const double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
        for (auto& x : w) x /= norm;
        angles_from_unit(w.data(), components_, p.data());
    }

    /// Columns are product vectors in subsystem order.
    CMatrix product_vectors(const std::vector<double>& p) const {
        CMatrix vecs(idx(total_), idx(components_));
        for (std::size_t t = 0; t < components_; ++t) {
            CVector v = CVector::Ones(1);
            for (std::size_t g = 0; g < cut_.size(); ++g) v = kron(v, group_state(p, t, g));
            for (std::size_t f = 0; f < total_; ++f) vecs(idx(f), idx(t)) = v(idx(to_original_[f]));
        }
        return vecs;
    }

    CMatrix sigma(const std::vector<double>& p) const {
        const CMatrix vecs = product_vectors(p);
        const auto w = weights(p);
        Eigen::VectorXd wv(idx(components_));
        for (std::size_t t = 0; t < components_; ++t) wv(idx(t)) = w[t];
        return vecs * wv.asDiagonal() * vecs.adjoint();
    }

    SeparableWitness witness(const std::vector<double>& p) const {
        SeparableWitness w{cut_, weights(p), {}};
        for (std::size_t t = 0; t < components_; ++t) {
            std::vector<CVector> term;
            for (std::size_t g = 0; g < cut_.size(); ++g) term.push_back(group_state(p, t, g));
            w.states.push_back(std::move(term));
        }
        return w;
    }

private:
    Dims dims_;
    Cut cut_;
    std::vector<std::size_t> group_dims_;
    std::vector<Dims> group_sub_dims_;
    std::vector<std::size_t> to_original_;
    std::size_t components_ = 1;
    std::size_t per_term_ = 0;
    std::size_t total_ = 1;
};

// Objective: S(rho || (1-eps) sigma + eps I/D) with Tr[rho log rho] precomputed.
class Objective {
public:
    Objective(const DensityMatrix& rho, const AnsatzModel& model) : rho_(rho.data()), model_(model) {
        neg_entropy_ = 0.0;
        for (double l : hermitian_eigenvalues(rho_)) {
            if (l > 0.0) neg_entropy_ += l * std::log2(l);
        }
    }

    double padded(const std::vector<double>& p) const {
        const auto n = rho_.rows();
        CMatrix s = (1.0 - kPadding) * model_.sigma(p);
        s.diagonal().array() += kPadding / static_cast<double>(n);
        Eigen::SelfAdjointEigenSolver<CMatrix> solver(s);
        const CMatrix rv = rho_ * solver.eigenvectors();
        double value = neg_entropy_;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double weight = solver.eigenvectors().col(j).dot(rv.col(j)).real();
            value -= weight * std::log2(std::max(solver.eigenvalues()(j), kPadding * 1e-3));
        }
        return value;
    }

private:
    const CMatrix& rho_;
    const AnsatzModel& model_;
    double neg_entropy_ = 0.0;
};

std::vector<std::size_t> digits(std::size_t flat, const Dims& dims) {
    std::vector<std::size_t> out(dims.size());
    for (std::size_t k = dims.size(); k-- > 0;) {
        out[k] = flat % dims[k];
        flat /= dims[k];
    }
    return out;
}

// Dephasing in the product computational basis: a fully separable state whose
// support always contains supp(rho).
std::vector<double> pinched_start(const DensityMatrix& rho, const AnsatzModel& model, const Dims& dims) {
    std::vector<double> p(model.parameter_count(), 0.0);
    const auto diag = rho.data().diagonal().real();
    std::vector<std::size_t> order(static_cast<std::size_t>(diag.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return diag(idx(a)) > diag(idx(b)); });

    const std::size_t k = model.components();
    std::vector<double> w(k, 0.0);
    for (std::size_t t = 0; t < k; ++t) {
        const std::size_t flat = t < order.size() ? order[t] : 0;
        if (t < order.size()) w[t] = std::max(diag(idx(flat)), 0.0);
        const auto dig = digits(flat, dims);
        for (std::size_t g = 0; g < model.cut().size(); ++g) {
            std::size_t local = 0;
            for (auto s : model.cut()[g]) local = local * dims[s] + dig[s];
            CVector v = CVector::Zero(idx(model.group_dims()[g]));
            v(idx(local)) = 1.0;
            model.encode_group_state(p, t, g, v);
        }
    }
    if (std::accumulate(w.begin(), w.end(), 0.0) <= 0.0) w[0] = 1.0;
    model.encode_weights(p, w);
    return p;
}

std::vector<double> warm_start_params(const SeparableWitness& warm, const AnsatzModel& model, const Dims& dims) {
    std::vector<double> p(model.parameter_count(), 0.0);
    const std::size_t k = model.components();
    if (warm.weights.size() > k) throw std::invalid_argument("ree_upper_estimate: warm start has too many terms");
    std::vector<double> w(k, 0.0);
    for (std::size_t t = 0; t < k; ++t) {
        const bool real_term = t < warm.weights.size();
        if (real_term) w[t] = warm.weights[t];
        for (std::size_t g = 0; g < model.cut().size(); ++g) {
            const auto& target = model.cut()[g];
            // Fine groups inside this target group, concatenated in their own order.
            std::vector<std::size_t> concat;
            CVector v = CVector::Ones(1);
            for (std::size_t fg = 0; fg < warm.cut.size(); ++fg) {
                const auto& fine = warm.cut[fg];
                const bool inside = std::all_of(fine.begin(), fine.end(), [&](auto s) {
                    return std::find(target.begin(), target.end(), s) != target.end();
                });
                if (!inside) continue;
                concat.insert(concat.end(), fine.begin(), fine.end());
                if (real_term) {
                    v = kron(v, warm.states[t][fg]);
                } else {
                    std::size_t fine_dim = 1;
                    for (auto s : fine) fine_dim *= dims[s];
                    v = kron(v, CVector(CVector::Unit(idx(fine_dim), 0)));
                }
            }
            if (concat.size() != target.size()) {
                throw std::invalid_argument("ree_upper_estimate: warm start cut does not refine the ansatz cut");
            }
            Dims concat_dims;
            for (auto s : concat) concat_dims.push_back(dims[s]);
            std::vector<std::size_t> order(target.size());
            for (std::size_t i = 0; i < target.size(); ++i) {
                order[i] = static_cast<std::size_t>(std::find(concat.begin(), concat.end(), target[i]) - concat.begin());
            }
            const auto map = permutation_index_map(concat_dims, order);
            CVector reordered(v.size());
            for (std::size_t f = 0; f < map.size(); ++f) reordered(idx(f)) = v(idx(map[f]));
            model.encode_group_state(p, t, g, reordered);
        }
    }
    model.encode_weights(p, w);
    return p;
}

std::vector<double> random_start(const AnsatzModel& model, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi / 2.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::vector<double> p(model.parameter_count());
    // Phases and angles are not distinguished here; both are periodic.
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = (i % 2 == 0) ? angle(rng) : phase(rng);
    return p;
}

struct RestartResult {
    double energy = kInfinity;
    std::vector<double> params;
    std::size_t evaluations = 0;
};

RestartResult anneal(const Objective& objective, std::vector<double> start, std::size_t budget,
                     std::mt19937_64& rng) {
    RestartResult best;
    std::vector<double> current = std::move(start);
    double energy = objective.padded(current);
    best.energy = energy;
    best.params = current;
    best.evaluations = 1;
    if (budget <= 1 || current.empty()) return best;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> coord(0, current.size() - 1);
    std::uniform_int_distribution<int> how_many(1, 3);

    const std::size_t steps = budget - 1;
    for (std::size_t i = 0; i < steps; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(steps);
        const double temperature = kStartTemperature * std::pow(kEndTemperature / kStartTemperature, frac);
        const double step = kStartStep * std::pow(kEndStep / kStartStep, frac);

        std::vector<double> proposal = current;
        const int n = how_many(rng);
        for (int k = 0; k < n; ++k) proposal[coord(rng)] += step * normal(rng);
        const double e = objective.padded(proposal);
        ++best.evaluations;
        if (e <= energy || unit(rng) < std::exp(-(e - energy) / temperature)) {
            current = std::move(proposal);
            energy = e;
            if (energy < best.energy) {
                best.energy = energy;
                best.params = current;
            }
        }
    }
    return best;
}

void validate_cut(const Cut& cut, std::size_t subsystems) {
    if (cut.empty()) throw std::invalid_argument("SeparableAnsatz: empty cut");
    std::vector<int> seen(subsystems, 0);
    for (const auto& g : cut) {
        if (g.empty()) throw std::invalid_argument("SeparableAnsatz: empty group");
        for (auto s : g) {
            if (s >= subsystems) throw std::out_of_range("SeparableAnsatz: subsystem index out of range");
            ++seen[s];
        }
    }
    if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
        throw std::invalid_argument("SeparableAnsatz: cut must partition all subsystems");
    }
}

}  // namespace

Cut bipartite_cut(std::vector<std::size_t> left, std::vector<std::size_t> right) {
    return {std::move(left), std::move(right)};
}

Cut fully_separable_cut(std::size_t subsystems) {
    Cut cut;
    for (std::size_t k = 0; k < subsystems; ++k) cut.push_back({k});
    return cut;
}

std::string cut_label(const Cut& cut) {
    std::ostringstream os;
    for (std::size_t g = 0; g < cut.size(); ++g) {
        if (g) os << '|';
        for (std::size_t k = 0; k < cut[g].size(); ++k) {
            if (k) os << ',';
            os << cut[g][k];
        }
    }
    return os.str();
}

DensityMatrix witness_state(const SeparableWitness& witness, const Dims& dims) {
    validate_cut(witness.cut, dims.size());
    AnsatzModel model(dims, witness.cut, witness.weights.size());
    std::vector<double> p(model.parameter_count(), 0.0);
    for (std::size_t t = 0; t < witness.weights.size(); ++t) {
        for (std::size_t g = 0; g < witness.cut.size(); ++g) model.encode_group_state(p, t, g, witness.states[t][g]);
    }
    model.encode_weights(p, witness.weights);
    CMatrix s = model.sigma(p);
    return {0.5 * (s + s.adjoint()), dims};
}

ReeEstimate ree_upper_estimate(const DensityMatrix& rho, const SeparableAnsatz& ansatz,
                               const EstimatorOptions& options) {
    if (rho.size() > kMaxEstimatorDim) throw std::invalid_argument("ree_upper_estimate: dimension above 64");
    validate_cut(ansatz.cut, rho.subsystems());
    if (options.restarts == 0) throw std::invalid_argument("ree_upper_estimate: need at least one restart");

    std::size_t components = ansatz.components;
    if (options.warm_start) {
        const AnsatzModel probe(rho.dims(), ansatz.cut, ansatz.components);
        components = std::max(probe.components(), options.warm_start->weights.size());
    }
    const AnsatzModel model(rho.dims(), ansatz.cut, components);
    const Objective objective(rho, model);

    const std::size_t restarts = options.restarts;
    const std::size_t per_restart = std::max<std::size_t>(1, options.budget / restarts);
    std::vector<RestartResult> results(restarts);
    parallel_for(restarts, options.threads, [&](std::size_t r) {
        std::seed_seq seq{static_cast<unsigned long long>(options.seed), static_cast<unsigned long long>(r),
                          0x5eedULL};
        std::mt19937_64 rng(seq);
        std::vector<double> start;
        if (r == 0) {
            start = pinched_start(rho, model, rho.dims());
        } else if (r == 1 && options.warm_start) {
            start = warm_start_params(*options.warm_start, model, rho.dims());
        } else {
            start = random_start(model, rng);
        }
        results[r] = anneal(objective, std::move(start), per_restart, rng);
    });

    ReeEstimate out;
    std::size_t best = 0;
    for (std::size_t r = 0; r < restarts; ++r) {
        out.evaluations += results[r].evaluations;
        if (results[r].energy < results[best].energy) best = r;
    }
    out.witness = model.witness(results[best].params);
    const DensityMatrix sigma = witness_state(out.witness, rho.dims());
    out.bits = relative_entropy(rho, sigma);
    out.finite = std::isfinite(out.bits);
    if (!out.finite) {
        out.diagnostic = "no probed separable state contains the support of rho";
    }
    return out;
}

}  // namespace entflux
