// gaussian_cv.hpp: covariance-matrix simulator for bosonic Gaussian states
// and the thermal-loss multisplitter broadcast network.
//
// Convention: quadratures ordered (x1, p1, x2, p2, ...), vacuum covariance is
// the identity (vacuum variance 1). A thermal state with mean photon number n
// has covariance (2n+1) I.

#pragma once

#include "entflux/capacity_bounds.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace entflux {

class GaussianState {
public:
    /// Throws std::invalid_argument unless cov is symmetric (1e-10) and
    /// cov + i Omega >= -1e-8.
    GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov, std::vector<std::string> labels = {});

    std::size_t modes() const noexcept { return static_cast<std::size_t>(mean_.size() / 2); }
    const Eigen::VectorXd& mean() const noexcept { return mean_; }
    const Eigen::MatrixXd& cov() const noexcept { return cov_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    std::size_t index_of(const std::string& label) const;
    GaussianState with_labels(std::vector<std::string> labels) const;

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
    std::vector<std::string> labels_;
};

Eigen::MatrixXd symplectic_form(std::size_t modes);
/// Smallest eigenvalue of cov + i Omega (non-negative for physical states).
double bona_fide_margin(const Eigen::MatrixXd& cov);

GaussianState vacuum();
GaussianState thermal_state(double nbar);
/// Two-mode squeezed vacuum with nbar photons per mode; cov [[v I, c Z], [c Z, v I]].
GaussianState tmsv(double nbar);
GaussianState direct_sum(const GaussianState& a, const GaussianState& b);

Eigen::MatrixXd beamsplitter_matrix(std::size_t modes, double eta, std::size_t i, std::size_t j);
GaussianState apply_symplectic(const GaussianState& s, const Eigen::MatrixXd& sym);
/// x_i -> sqrt(eta) x_i + sqrt(1-eta) x_j, x_j -> -sqrt(1-eta) x_i + sqrt(eta) x_j (same for p).
GaussianState apply_beamsplitter(const GaussianState& s, double eta, std::size_t i, std::size_t j);
GaussianState apply_squeezer(const GaussianState& s, double r, std::size_t mode);
GaussianState apply_phase_rotation(const GaussianState& s, double theta, std::size_t mode);
/// Thermal-loss channel on one mode via its beamsplitter dilation.
GaussianState apply_thermal_loss(const GaussianState& s, std::size_t mode, double eta, double nbar);
/// Adds `variance` (vacuum units) to both quadratures of one mode.
GaussianState apply_additive_noise(const GaussianState& s, std::size_t mode, double variance);

/// Keeps the listed modes in original order.
GaussianState reduce_modes(const GaussianState& s, std::span<const std::size_t> keep);
/// Keeps the listed modes in the listed order.
GaussianState select_modes(const GaussianState& s, std::span<const std::size_t> order);

Eigen::VectorXd symplectic_eigenvalues(const GaussianState& s);
double gaussian_entropy(const GaussianState& s);

enum class TapConvention { reflect, transmit };

struct NetworkSpec {
    std::vector<double> etas;   // eta_0 ... eta_M
    std::vector<double> nbars;  // nbar_0 ... nbar_M
    TapConvention tap = TapConvention::reflect;

    std::size_t receivers() const { return etas.empty() ? 0 : etas.size() - 1; }
    void validate() const;
};

/// Input modes (A, A'). Output labels: A, B1..BM, E (first-splitter leakage),
/// E' (beam leaving the last splitter).
GaussianState build_multisplitter(const NetworkSpec& spec, const GaussianState& input);

struct LinkParams {
    double tau = 0.0;
    double nbar_eff = 0.0;
    double residual = 0.0;
};

/// Fits the (A, B_bob) reduction to a thermal-loss Choi form; bob is 1-based.
LinkParams effective_channel_params(const GaussianState& net_state, std::size_t bob);

/// One report per Bob with the first-link bottleneck bound plus the
/// reduced-link diagnostic (not itself a bound on that Bob's capacity).
std::vector<BoundReport> broadcast_bottleneck_bound(const NetworkSpec& spec);

/// Reverse coherent information S(A) - S(AB) of a thermal-loss link probed by TMSV(mu).
double rci_lower_estimate(double eta, double nbar, double mu);
/// First link by default, or the (A, B_bob) reduction of the network.
double rci_lower_estimate(const NetworkSpec& spec, double mu, std::optional<std::size_t> bob = std::nullopt);

/// Added quadrature noise of ideal-measurement CV teleportation over TMSV(mu).
double teleportation_added_noise(double mu);
/// Covariance discrepancy (Frobenius, max over fixed probes) between a
/// thermal-loss link and its finite-mu teleportation simulation. A proxy only,
/// not a diamond-norm distance.
double simulation_error_proxy(double eta, double nbar, double mu);

}  // namespace entflux
