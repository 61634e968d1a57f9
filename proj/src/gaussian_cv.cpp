#include "entflux/gaussian_cv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace entflux {

namespace {

constexpr double kSymmetryTolerance = 1e-10;
constexpr double kBonaFideTolerance = 1e-8;
constexpr double kFitTolerance = 1e-9;
// Any positive mu gives the same fitted link; 1 keeps the fit well conditioned.
constexpr double kProbePhotons = 1.0;

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Index idx(std::size_t i) { return static_cast<Index>(i); }

void require_mode(const GaussianState& s, std::size_t mode) {
    if (mode >= s.modes()) throw std::out_of_range("Gaussian: mode index out of range");
}

void require_photons(double nbar, const char* what) {
    if (!(nbar >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative mean photon number");
}

}  // namespace

GaussianState::GaussianState(VectorXd mean, MatrixXd cov, std::vector<std::string> labels)
    : mean_(std::move(mean)), cov_(std::move(cov)), labels_(std::move(labels)) {
    if (mean_.size() == 0 || mean_.size() % 2 != 0) throw std::invalid_argument("GaussianState: odd or empty mean");
    if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
        throw std::invalid_argument("GaussianState: covariance shape mismatch");
    }
    if (!labels_.empty() && labels_.size() != modes()) throw std::invalid_argument("GaussianState: label count");
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance) {
        throw std::invalid_argument("GaussianState: covariance not symmetric");
    }
    cov_ = (0.5 * (cov_ + cov_.transpose())).eval();
    if (bona_fide_margin(cov_) < -kBonaFideTolerance) {
        throw std::invalid_argument("GaussianState: covariance violates the uncertainty principle");
    }
}

std::size_t GaussianState::index_of(const std::string& label) const {
    const auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw std::out_of_range("GaussianState: no mode labeled " + label);
    return static_cast<std::size_t>(it - labels_.begin());
}

GaussianState GaussianState::with_labels(std::vector<std::string> labels) const {
    return {mean_, cov_, std::move(labels)};
}

MatrixXd symplectic_form(std::size_t modes) {
    MatrixXd omega = MatrixXd::Zero(idx(2 * modes), idx(2 * modes));
    for (std::size_t k = 0; k < modes; ++k) {
        omega(idx(2 * k), idx(2 * k + 1)) = 1.0;
        omega(idx(2 * k + 1), idx(2 * k)) = -1.0;
    }
    return omega;
}

double bona_fide_margin(const MatrixXd& cov) {
    const std::size_t modes = static_cast<std::size_t>(cov.rows() / 2);
    const CMatrix m = cov.cast<cplx>() + cplx(0.0, 1.0) * symplectic_form(modes).cast<cplx>();
    return hermitian_eigenvalues(m).minCoeff();
}

GaussianState vacuum() { return {VectorXd::Zero(2), MatrixXd::Identity(2, 2)}; }

GaussianState thermal_state(double nbar) {
    require_photons(nbar, "thermal_state");
    return {VectorXd::Zero(2), (2.0 * nbar + 1.0) * MatrixXd::Identity(2, 2)};
}

GaussianState tmsv(double nbar) {
    require_photons(nbar, "tmsv");
    const double nu = 2.0 * nbar + 1.0;
    const double c = std::sqrt(nu * nu - 1.0);
    MatrixXd cov = nu * MatrixXd::Identity(4, 4);
    cov(0, 2) = cov(2, 0) = c;
    cov(1, 3) = cov(3, 1) = -c;
    return {VectorXd::Zero(4), std::move(cov)};
}

GaussianState direct_sum(const GaussianState& a, const GaussianState& b) {
    const Index na = a.mean().size();
    const Index nb = b.mean().size();
    VectorXd mean(na + nb);
    mean << a.mean(), b.mean();
    MatrixXd cov = MatrixXd::Zero(na + nb, na + nb);
    cov.topLeftCorner(na, na) = a.cov();
    cov.bottomRightCorner(nb, nb) = b.cov();
    std::vector<std::string> labels;
    if (!a.labels().empty() && !b.labels().empty()) {
        labels = a.labels();
        labels.insert(labels.end(), b.labels().begin(), b.labels().end());
    }
    return {std::move(mean), std::move(cov), std::move(labels)};
}

MatrixXd beamsplitter_matrix(std::size_t modes, double eta, std::size_t i, std::size_t j) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("beamsplitter: transmissivity outside [0,1]");
    if (i == j || i >= modes || j >= modes) throw std::invalid_argument("beamsplitter: invalid modes");
    const double t = std::sqrt(eta);
    const double r = std::sqrt(1.0 - eta);
    MatrixXd s = MatrixXd::Identity(idx(2 * modes), idx(2 * modes));
    for (std::size_t q = 0; q < 2; ++q) {
        const Index a = idx(2 * i + q);
        const Index b = idx(2 * j + q);
        s(a, a) = t;
        s(a, b) = r;
        s(b, a) = -r;
        s(b, b) = t;
    }
    return s;
}

GaussianState apply_symplectic(const GaussianState& s, const MatrixXd& sym) {
    // Congruence preserves symmetry exactly; drop the roundoff asymmetry.
    const MatrixXd cov = sym * s.cov() * sym.transpose();
    return {sym * s.mean(), 0.5 * (cov + cov.transpose()), s.labels()};
}

GaussianState apply_beamsplitter(const GaussianState& s, double eta, std::size_t i, std::size_t j) {
    return apply_symplectic(s, beamsplitter_matrix(s.modes(), eta, i, j));
}

GaussianState apply_squeezer(const GaussianState& s, double r, std::size_t mode) {
    require_mode(s, mode);
    MatrixXd sym = MatrixXd::Identity(s.cov().rows(), s.cov().cols());
    sym(idx(2 * mode), idx(2 * mode)) = std::exp(-r);
    sym(idx(2 * mode + 1), idx(2 * mode + 1)) = std::exp(r);
    return apply_symplectic(s, sym);
}

GaussianState apply_phase_rotation(const GaussianState& s, double theta, std::size_t mode) {
    require_mode(s, mode);
    MatrixXd sym = MatrixXd::Identity(s.cov().rows(), s.cov().cols());
    const Index a = idx(2 * mode);
    sym(a, a) = std::cos(theta);
    sym(a, a + 1) = std::sin(theta);
    sym(a + 1, a) = -std::sin(theta);
    sym(a + 1, a + 1) = std::cos(theta);
    return apply_symplectic(s, sym);
}

GaussianState apply_thermal_loss(const GaussianState& s, std::size_t mode, double eta, double nbar) {
    require_mode(s, mode);
    const std::size_t env = s.modes();
    GaussianState joint = direct_sum(s.with_labels({}), thermal_state(nbar));
    joint = apply_beamsplitter(joint, eta, mode, env);
    std::vector<std::size_t> keep(env);
    for (std::size_t k = 0; k < env; ++k) keep[k] = k;
    return reduce_modes(joint, keep).with_labels(s.labels());
}

GaussianState apply_additive_noise(const GaussianState& s, std::size_t mode, double variance) {
    require_mode(s, mode);
    if (!(variance >= 0.0)) throw std::invalid_argument("additive noise: negative variance");
    MatrixXd cov = s.cov();
    cov(idx(2 * mode), idx(2 * mode)) += variance;
    cov(idx(2 * mode + 1), idx(2 * mode + 1)) += variance;
    return {s.mean(), std::move(cov), s.labels()};
}

GaussianState select_modes(const GaussianState& s, std::span<const std::size_t> order) {
    if (order.empty()) throw std::invalid_argument("reduce_modes: empty keep set");
    const Index n = idx(2 * order.size());
    VectorXd mean(n);
    MatrixXd cov(n, n);
    std::vector<std::string> labels;
    for (std::size_t a = 0; a < order.size(); ++a) {
        require_mode(s, order[a]);
        if (!s.labels().empty()) labels.push_back(s.labels()[order[a]]);
        for (std::size_t qa = 0; qa < 2; ++qa) {
            const Index ra = idx(2 * a + qa);
            mean(ra) = s.mean()(idx(2 * order[a] + qa));
            for (std::size_t b = 0; b < order.size(); ++b) {
                for (std::size_t qb = 0; qb < 2; ++qb) {
                    cov(ra, idx(2 * b + qb)) = s.cov()(idx(2 * order[a] + qa), idx(2 * order[b] + qb));
                }
            }
        }
    }
    return {std::move(mean), std::move(cov), std::move(labels)};
}

GaussianState reduce_modes(const GaussianState& s, std::span<const std::size_t> keep) {
    std::vector<std::size_t> sorted(keep.begin(), keep.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::invalid_argument("reduce_modes: duplicate mode");
    }
    return select_modes(s, sorted);
}

VectorXd symplectic_eigenvalues(const GaussianState& s) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(s.cov());
    const VectorXd root = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const MatrixXd half = solver.eigenvectors() * root.asDiagonal() * solver.eigenvectors().transpose();
    // i V^{1/2} Omega V^{1/2} is Hermitian with spectrum {+nu_k, -nu_k}.
    const CMatrix m = cplx(0.0, 1.0) * (half * symplectic_form(s.modes()) * half).cast<cplx>();
    const VectorXd ev = hermitian_eigenvalues(m);
    return ev.tail(idx(s.modes()));
}

double gaussian_entropy(const GaussianState& s) {
    double total = 0.0;
    for (double nu : symplectic_eigenvalues(s)) {
        if (nu < 1.0 - kBonaFideTolerance) throw std::domain_error("gaussian_entropy: symplectic eigenvalue below 1");
        total += h_function(std::max(nu - 1.0, 0.0) / 2.0);
    }
    return total;
}

void NetworkSpec::validate() const {
    if (etas.size() < 2) throw std::invalid_argument("NetworkSpec: need eta_0 and at least one receiver");
    if (nbars.size() != etas.size()) throw std::invalid_argument("NetworkSpec: etas and nbars differ in length");
    for (double e : etas) {
        if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("NetworkSpec: transmissivity outside [0,1]");
    }
    for (double n : nbars) {
        if (!(n >= 0.0)) throw std::invalid_argument("NetworkSpec: negative thermal photon number");
    }
}

GaussianState build_multisplitter(const NetworkSpec& spec, const GaussianState& input) {
    spec.validate();
    if (input.modes() != 2) throw std::invalid_argument("build_multisplitter: input must be two-mode (A, A')");
    const std::size_t m = spec.receivers();
    GaussianState state = input.with_labels({});
    for (double n : spec.nbars) state = direct_sum(state, thermal_state(n));
    // Modes: 0 = A, 1 = A', 2 = E_0, 2 + i = E_i.
    std::size_t signal = 1;
    state = apply_beamsplitter(state, spec.etas[0], signal, 2);
    std::vector<std::size_t> bobs;
    for (std::size_t i = 1; i <= m; ++i) {
        const std::size_t env = 2 + i;
        state = apply_beamsplitter(state, spec.etas[i], signal, env);
        if (spec.tap == TapConvention::reflect) {
            bobs.push_back(env);
        } else {
            bobs.push_back(signal);
            signal = env;
        }
    }
    std::vector<std::size_t> order{0};
    std::vector<std::string> labels{"A"};
    for (std::size_t i = 0; i < m; ++i) {
        order.push_back(bobs[i]);
        labels.push_back("B" + std::to_string(i + 1));
    }
    order.push_back(2);
    labels.push_back("E");
    order.push_back(signal);
    labels.push_back("E'");
    return select_modes(state, order).with_labels(std::move(labels));
}

LinkParams effective_channel_params(const GaussianState& net_state, std::size_t bob) {
    const std::size_t modes[] = {net_state.index_of("A"), net_state.index_of("B" + std::to_string(bob))};
    const MatrixXd cov = select_modes(net_state, modes).cov();
    const MatrixXd a = cov.topLeftCorner(2, 2);
    const MatrixXd b = cov.bottomRightCorner(2, 2);
    const MatrixXd c = cov.topRightCorner(2, 2);

    const double nu = 0.5 * a.trace();
    const double bv = 0.5 * b.trace();
    const double cz = 0.5 * (c(0, 0) - c(1, 1));
    if (nu * nu - 1.0 < 1e-12) throw std::invalid_argument("effective_channel_params: input carries no entanglement");

    MatrixXd z = MatrixXd::Identity(2, 2);
    z(1, 1) = -1.0;
    LinkParams out;
    out.residual = std::max({(a - nu * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(),
                             (b - bv * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(),
                             (c - cz * z).cwiseAbs().maxCoeff()});
    if (out.residual > kFitTolerance) {
        throw std::domain_error("effective_channel_params: reduction is not a phase-insensitive thermal-loss link");
    }
    out.tau = cz * cz / (nu * nu - 1.0);
    if (1.0 - out.tau > 1e-12) {
        out.nbar_eff = ((bv - out.tau * nu) / (1.0 - out.tau) - 1.0) / 2.0;
        if (out.nbar_eff < 0.0 && out.nbar_eff > -1e-9) out.nbar_eff = 0.0;
    }
    return out;
}

std::vector<BoundReport> broadcast_bottleneck_bound(const NetworkSpec& spec) {
    spec.validate();
    const double eta0 = spec.etas[0];
    const double nbar0 = spec.nbars[0];
    const bool pure_loss = std::all_of(spec.nbars.begin(), spec.nbars.end(), [](double n) { return n == 0.0; });
    const double bound = pure_loss ? lossy_bound(eta0) : thermal_loss_flux(eta0, nbar0);

    const GaussianState net = build_multisplitter(spec, tmsv(kProbePhotons));
    std::vector<BoundReport> reports;
    for (std::size_t i = 1; i <= spec.receivers(); ++i) {
        const LinkParams link = effective_channel_params(net, i);
        BoundReport r;
        r.channel_id = pure_loss ? "lossy-multisplitter" : "thermal-loss-multisplitter";
        r.pair = {0, i};
        r.bound_bits = bound;
        r.formula = pure_loss ? "bottleneck: first-link pure-loss flux -log2(1-eta0)"
                              : "bottleneck: first-link thermal-loss flux";
        r.params = {{"eta0", eta0}, {"nbar0", nbar0}, {"receivers", static_cast<double>(spec.receivers())}};
        r.diagnostics = {{"tau", link.tau},
                         {"nbar_eff", link.nbar_eff},
                         {"fit_residual", link.residual},
                         {"reduced_link_flux_bits", thermal_loss_flux(link.tau, std::max(link.nbar_eff, 0.0))}};
        validate(r);
        reports.push_back(std::move(r));
    }
    return reports;
}

double rci_lower_estimate(double eta, double nbar, double mu) {
    require_photons(mu, "rci_lower_estimate");
    const GaussianState out = apply_thermal_loss(tmsv(mu), 1, eta, nbar);
    const std::size_t a[] = {0};
    return gaussian_entropy(reduce_modes(out, a)) - gaussian_entropy(out);
}

double rci_lower_estimate(const NetworkSpec& spec, double mu, std::optional<std::size_t> bob) {
    spec.validate();
    if (!bob) return rci_lower_estimate(spec.etas[0], spec.nbars[0], mu);
    require_photons(mu, "rci_lower_estimate");
    const GaussianState net = build_multisplitter(spec, tmsv(mu));
    const std::size_t modes[] = {net.index_of("A"), net.index_of("B" + std::to_string(*bob))};
    const GaussianState ab = select_modes(net, modes);
    const std::size_t a[] = {0};
    return gaussian_entropy(reduce_modes(ab, a)) - gaussian_entropy(ab);
}

double teleportation_added_noise(double mu) {
    require_photons(mu, "teleportation_added_noise");
    // 2 e^{-2r} with sinh^2 r = mu.
    return 2.0 / (2.0 * mu + 1.0 + 2.0 * std::sqrt(mu * (mu + 1.0)));
}

double simulation_error_proxy(double eta, double nbar, double mu) {
    const double noise = teleportation_added_noise(mu);
    const GaussianState probes[] = {vacuum(), thermal_state(1.0), apply_squeezer(vacuum(), 0.5, 0)};
    double worst = 0.0;
    for (const auto& probe : probes) {
        const GaussianState exact = apply_thermal_loss(probe, 0, eta, nbar);
        const GaussianState simulated = apply_thermal_loss(apply_additive_noise(probe, 0, noise), 0, eta, nbar);
        worst = std::max(worst, (exact.cov() - simulated.cov()).norm());
    }
    return worst;
}

}  // namespace entflux
