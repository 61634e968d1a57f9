// dv_channels.hpp: finite-dimensional channels in Kraus form, Choi matrices,
// teleportation-covariance search and executable teleportation simulation.

#pragma once

#include "entflux/channel_spec.hpp"
#include "entflux/operator_core.hpp"

#include <map>
#include <string>
#include <vector>

namespace entflux {

inline constexpr double kCovarianceTolerance = 1e-8;

class KrausChannel {
public:
    /// `out_logical_dims[k]` is the number of leading levels of output k on
    /// which teleportation corrections act; remaining levels are classical
    /// flags (e.g. the erasure level). Defaults to out_dims.
    KrausChannel(std::vector<CMatrix> ops, Dims in_dims, Dims out_dims,
                 Dims out_logical_dims = {});

    const std::vector<CMatrix>& kraus_ops() const noexcept { return ops_; }
    const Dims& in_dims() const noexcept { return in_dims_; }
    const Dims& out_dims() const noexcept { return out_dims_; }
    const Dims& out_logical_dims() const noexcept { return out_logical_dims_; }
    std::size_t in_size() const { return product(in_dims_); }
    std::size_t out_size() const { return product(out_dims_); }

private:
    std::vector<CMatrix> ops_;
    Dims in_dims_;
    Dims out_dims_;
    Dims out_logical_dims_;
};

struct ChoiMatrix {
    DensityMatrix state;
    std::vector<std::size_t> sender_indices;
    std::vector<std::size_t> receiver_indices;
};

enum class CovarianceMode { point_to_point, broadcast, mac, interference };

std::string to_string(CovarianceMode mode);

struct Correction {
    std::string label;
    CMatrix unitary;
};

struct CovarianceReport {
    CovarianceMode mode = CovarianceMode::point_to_point;
    bool covariant = false;
    double worst_deviation = 0.0;
    /// Keyed by per-input-leg Heisenberg-Weyl indices (a*d + b for X^a Z^b).
    std::map<std::vector<std::size_t>, Correction> correction_table;
};

/// X^a Z^b with index = a*d + b, X|j> = |j+1>, Z|j> = w^j |j>.
CMatrix heisenberg_weyl(std::size_t d, std::size_t index);
/// Index of conj(W_index), which is again a Heisenberg-Weyl element.
std::size_t heisenberg_weyl_conjugate_index(std::size_t d, std::size_t index);

KrausChannel make_channel(const ChannelSpec& spec);

/// Product channel acting on the concatenated inputs.
KrausChannel parallel(const KrausChannel& a, const KrausChannel& b);
/// Same channel followed by tracing out every output not listed in `keep`.
KrausChannel restrict_outputs(const KrausChannel& ch, std::span<const std::size_t> keep);

DensityMatrix apply_channel(const KrausChannel& ch, const DensityMatrix& rho);

/// Applies `ch` to the subsystems `targets` (matched to in_dims in order)
/// with identity on the remaining spectators. The outputs replace the target
/// block at the position of the lowest target index, in out_dims order.
DensityMatrix apply_channel(const KrausChannel& ch, const DensityMatrix& rho,
                            std::span<const std::size_t> targets);

/// Subsystem layout after `apply_channel(ch, rho, targets)`: entry k is
/// either an old spectator index or -(1 + output index).
std::vector<long> channel_output_layout(std::size_t subsystems, std::span<const std::size_t> targets,
                                        std::size_t outputs);

/// One maximally entangled pair per input leg. Layout: references
/// (sender_indices) first, then channel outputs (receiver_indices).
ChoiMatrix choi_matrix(const KrausChannel& ch);

/// Searches Heisenberg-Weyl output corrections for every tuple of input
/// teleportation unitaries. Broadcast and interference modes use corrections
/// factorized per output subsystem; point-to-point and mac modes also admit
/// the joint Heisenberg-Weyl group on the whole output space.
CovarianceReport check_covariance(const KrausChannel& ch, CovarianceMode mode);

/// Runs teleportation of every input leg over the channel's Choi matrix:
/// generalized Bell measurement of each input with its reference half,
/// correction from `report`, uniform average over outcomes.
DensityMatrix teleport_simulate(const KrausChannel& ch, const DensityMatrix& rho_in,
                                const CovarianceReport& report);

/// As above with spectators; layout identical to the targeted apply_channel.
DensityMatrix teleport_simulate(const KrausChannel& ch, const DensityMatrix& rho,
                                const CovarianceReport& report,
                                std::span<const std::size_t> targets);

struct CoherentInformation {
    double coherent = 0.0;          // S(B) - S(AB)
    double reverse_coherent = 0.0;  // S(A) - S(AB)
};

CoherentInformation coherent_information(const KrausChannel& ch, const DensityMatrix& rho_in);

/// Seeded Ginibre-distributed mixed state.
DensityMatrix random_state(const Dims& dims, unsigned long long seed);

}  // namespace entflux
