#include "entflux/operator_core.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace entflux {

namespace {

constexpr double kSupportTolerance = 1e-12;

void require_same_dims(const DensityMatrix& a, const DensityMatrix& b, const char* op) {
    if (a.dims() != b.dims()) {
        throw std::invalid_argument(std::string(op) + ": dimension mismatch");
    }
}

double xlog2x(double x) { return x > 0.0 ? x * std::log2(x) : 0.0; }

}  // namespace

std::size_t product(std::span<const std::size_t> dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

DensityMatrix::DensityMatrix(CMatrix data, Dims dims, std::vector<std::string> labels)
    : data_(std::move(data)), dims_(std::move(dims)), labels_(std::move(labels)) {
    if (dims_.empty()) throw std::invalid_argument("DensityMatrix: empty dims");
    for (auto d : dims_) {
        if (d == 0) throw std::invalid_argument("DensityMatrix: zero subsystem dimension");
    }
    const auto n = product(dims_);
    if (data_.rows() != static_cast<Eigen::Index>(n) || data_.cols() != static_cast<Eigen::Index>(n)) {
        throw std::invalid_argument("DensityMatrix: matrix size does not match dims");
    }
    if (!labels_.empty() && labels_.size() != dims_.size()) {
        throw std::invalid_argument("DensityMatrix: label count does not match dims");
    }
    const double herm = (data_ - data_.adjoint()).cwiseAbs().maxCoeff();
    if (herm > kStateTolerance) throw std::invalid_argument("DensityMatrix: not Hermitian");
    if (std::abs(data_.trace() - cplx(1.0)) > kStateTolerance) {
        throw std::invalid_argument("DensityMatrix: trace is not one");
    }
    data_ = (0.5 * (data_ + data_.adjoint())).eval();
    if (hermitian_eigenvalues(data_).minCoeff() < -kStateTolerance) {
        throw std::invalid_argument("DensityMatrix: negative eigenvalue");
    }
}

DensityMatrix DensityMatrix::maximally_mixed(const Dims& dims) {
    const auto n = static_cast<Eigen::Index>(product(dims));
    return {CMatrix::Identity(n, n) / static_cast<double>(n), dims};
}

DensityMatrix DensityMatrix::pure(const CVector& psi, Dims dims) {
    const CVector v = psi.normalized();
    return {v * v.adjoint(), std::move(dims)};
}

DensityMatrix DensityMatrix::basis(const Dims& dims, std::size_t index) {
    const auto n = static_cast<Eigen::Index>(product(dims));
    if (index >= static_cast<std::size_t>(n)) throw std::out_of_range("basis: index out of range");
    CMatrix m = CMatrix::Zero(n, n);
    m(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(index)) = 1.0;
    return {std::move(m), dims};
}

std::size_t DensityMatrix::index_of(const std::string& label) const {
    const auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw std::out_of_range("DensityMatrix: no subsystem labeled " + label);
    return static_cast<std::size_t>(it - labels_.begin());
}

DensityMatrix DensityMatrix::with_labels(std::vector<std::string> labels) const {
    DensityMatrix out = *this;
    if (!labels.empty() && labels.size() != dims_.size()) {
        throw std::invalid_argument("DensityMatrix: label count does not match dims");
    }
    out.labels_ = std::move(labels);
    return out;
}

double DensityMatrix::purity() const { return (data_ * data_).trace().real(); }

Eigen::VectorXd hermitian_eigenvalues(const CMatrix& m) {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

CMatrix kron(const CMatrix& a, const CMatrix& b) { return Eigen::kroneckerProduct(a, b).eval(); }

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
    Dims dims = a.dims();
    dims.insert(dims.end(), b.dims().begin(), b.dims().end());
    std::vector<std::string> labels;
    if (!a.labels().empty() && !b.labels().empty()) {
        labels = a.labels();
        labels.insert(labels.end(), b.labels().begin(), b.labels().end());
    }
    return {kron(a.data(), b.data()), std::move(dims), std::move(labels)};
}

std::vector<std::size_t> permutation_index_map(const Dims& dims,
                                               std::span<const std::size_t> order) {
    const std::size_t n = dims.size();
    if (order.size() != n) throw std::invalid_argument("permute: order size mismatch");
    std::vector<bool> seen(n, false);
    for (auto k : order) {
        if (k >= n || seen[k]) throw std::invalid_argument("permute: order is not a permutation");
        seen[k] = true;
    }
    std::vector<std::size_t> old_stride(n, 1);
    for (std::size_t k = n; k-- > 1;) old_stride[k - 1] = old_stride[k] * dims[k];

    const std::size_t total = product(dims);
    std::vector<std::size_t> map(total);
    std::vector<std::size_t> digit(n, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t old = 0;
        for (std::size_t k = 0; k < n; ++k) old += digit[k] * old_stride[order[k]];
        map[flat] = old;
        for (std::size_t k = n; k-- > 0;) {
            if (++digit[k] < dims[order[k]]) break;
            digit[k] = 0;
        }
    }
    return map;
}

DensityMatrix permute(const DensityMatrix& rho, std::span<const std::size_t> order) {
    const auto map = permutation_index_map(rho.dims(), order);
    const auto n = static_cast<Eigen::Index>(map.size());
    CMatrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            out(i, j) = rho.data()(static_cast<Eigen::Index>(map[i]), static_cast<Eigen::Index>(map[j]));
        }
    }
    Dims dims;
    std::vector<std::string> labels;
    for (auto k : order) {
        dims.push_back(rho.dims()[k]);
        if (!rho.labels().empty()) labels.push_back(rho.labels()[k]);
    }
    return {std::move(out), std::move(dims), std::move(labels)};
}

namespace {

// Targets first (in the given order), remaining subsystems after in original order.
std::vector<std::size_t> targets_first_order(std::size_t n, std::span<const std::size_t> targets) {
    std::vector<bool> used(n, false);
    std::vector<std::size_t> order;
    for (auto t : targets) {
        if (t >= n) throw std::out_of_range("subsystem index out of range");
        if (used[t]) throw std::invalid_argument("duplicate subsystem index");
        used[t] = true;
        order.push_back(t);
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (!used[k]) order.push_back(k);
    }
    return order;
}

}  // namespace

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> keep) {
    if (keep.empty()) throw std::invalid_argument("partial_trace: keep set is empty");
    std::vector<std::size_t> kept(keep.begin(), keep.end());
    std::sort(kept.begin(), kept.end());
    if (std::adjacent_find(kept.begin(), kept.end()) != kept.end()) {
        throw std::invalid_argument("partial_trace: duplicate index");
    }
    if (kept.back() >= rho.subsystems()) throw std::out_of_range("partial_trace: index out of range");

    const auto order = targets_first_order(rho.subsystems(), kept);
    const auto map = permutation_index_map(rho.dims(), order);
    Dims kept_dims;
    std::vector<std::string> labels;
    for (auto k : kept) {
        kept_dims.push_back(rho.dims()[k]);
        if (!rho.labels().empty()) labels.push_back(rho.labels()[k]);
    }
    const std::size_t dk = product(kept_dims);
    const std::size_t dt = map.size() / dk;
    CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
    const auto& m = rho.data();
    for (std::size_t i = 0; i < dk; ++i) {
        for (std::size_t j = 0; j < dk; ++j) {
            cplx acc = 0.0;
            for (std::size_t t = 0; t < dt; ++t) {
                acc += m(static_cast<Eigen::Index>(map[i * dt + t]), static_cast<Eigen::Index>(map[j * dt + t]));
            }
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc;
        }
    }
    return {std::move(out), std::move(kept_dims), std::move(labels)};
}

CMatrix embed_operator(const CMatrix& op, const Dims& dims, std::span<const std::size_t> targets) {
    const auto order = targets_first_order(dims.size(), targets);
    Dims target_dims;
    for (auto t : targets) target_dims.push_back(dims[t]);
    const auto dt = static_cast<Eigen::Index>(product(target_dims));
    if (op.rows() != dt || op.cols() != dt) throw std::invalid_argument("embed_operator: operator shape mismatch");
    const auto total = static_cast<Eigen::Index>(product(dims));
    const CMatrix local = kron(op, CMatrix::Identity(total / dt, total / dt));
    const auto map = permutation_index_map(dims, order);
    CMatrix full(total, total);
    for (Eigen::Index i = 0; i < total; ++i) {
        for (Eigen::Index j = 0; j < total; ++j) {
            full(static_cast<Eigen::Index>(map[i]), static_cast<Eigen::Index>(map[j])) = local(i, j);
        }
    }
    return full;
}

DensityMatrix apply_unitary(const DensityMatrix& rho, const CMatrix& u,
                            std::span<const std::size_t> targets) {
    const CMatrix full = embed_operator(u, rho.dims(), targets);
    return {full * rho.data() * full.adjoint(), rho.dims(), rho.labels()};
}

double shannon_entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs) h -= xlog2x(p);
    return h;
}

double binary_entropy(double p) {
    const double probs[] = {p, 1.0 - p};
    return shannon_entropy(probs);
}

double von_neumann_entropy(const DensityMatrix& rho) {
    const Eigen::VectorXd ev = hermitian_eigenvalues(rho.data());
    double s = 0.0;
    for (double l : ev) s -= xlog2x(std::max(l, 0.0));
    return std::max(s, 0.0);
}

double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma) {
    require_same_dims(rho, sigma, "relative_entropy");
    Eigen::SelfAdjointEigenSolver<CMatrix> rs(rho.data(), Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<CMatrix> ss(sigma.data());

    double s = 0.0;
    for (double l : rs.eigenvalues()) s += xlog2x(std::max(l, 0.0));

    const CMatrix& v = ss.eigenvectors();
    const CMatrix rv = rho.data() * v;
    double kernel_weight = 0.0;
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        const double weight = v.col(j).dot(rv.col(j)).real();
        const double mu = ss.eigenvalues()(j);
        if (mu <= kSupportTolerance) {
            kernel_weight += weight;
        } else {
            s -= weight * std::log2(mu);
        }
    }
    if (kernel_weight > kSupportTolerance) return kInfinity;
    return std::max(s, 0.0);
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
    require_same_dims(rho, sigma, "trace_distance");
    const Eigen::VectorXd ev = hermitian_eigenvalues(rho.data() - sigma.data());
    return 0.5 * ev.cwiseAbs().sum();
}

CMatrix clip_to_state(const CMatrix& m) {
    const CMatrix h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
    Eigen::VectorXd ev = solver.eigenvalues();
    if (ev.minCoeff() < -kClipLimit) throw std::domain_error("clip_to_state: eigenvalue below clip limit");
    ev = ev.cwiseMax(0.0);
    ev /= ev.sum();
    return solver.eigenvectors() * ev.asDiagonal() * solver.eigenvectors().adjoint();
}

}  // namespace entflux
