// multipoint.hpp: broadcast, multiple-access and interference fixtures at
// qubit scale, multi-use stretching verification and per-pair flux bounds.

#pragma once

#include "entflux/capacity_bounds.hpp"
#include "entflux/dv_channels.hpp"

#include <string>
#include <vector>

namespace entflux {

enum class Topology { point_to_point, broadcast, mac, interference };

std::string to_string(Topology t);
CovarianceMode covariance_mode(Topology t);

struct MultipointFixture {
    std::string name;
    Topology topology;
    KrausChannel channel;
    std::size_t senders = 1;
    std::size_t receivers = 1;
};

/// Throws std::invalid_argument if the topology disagrees with the channel shape.
MultipointFixture make_fixture(std::string name, Topology topology, KrausChannel channel);

/// Catalog: identity, dephasing, non-covariant, copying-broadcast,
/// swap-interference, cz-interference, cz-mac, dephasing-interference.
std::vector<std::string> fixture_names();
MultipointFixture make_fixture(const std::string& name);

ChoiMatrix multipoint_choi(const MultipointFixture& f);

struct StretchingReport {
    CovarianceReport covariance;
    bool ran = false;      // false when the fixture is not teleportation covariant
    bool passed = false;
    double max_deviation = 0.0;
    std::size_t uses = 0;
    std::size_t branches = 0;
    std::string message;
};

inline constexpr double kStretchingTolerance = 1e-8;

/// Runs a seeded adaptive protocol (depth-2 random local Cliffords, one
/// receiver measurement broadcast per round) twice: once through the channel,
/// once through teleportation over its Choi matrix. Compares every branch.
StretchingReport verify_stretching(const MultipointFixture& f, std::size_t uses, unsigned long long seed);

/// For every (sender, receiver) pair: the coarse-cut (senders | receivers)
/// estimate as the bound, with fully separable and reduced-pair estimates
/// as diagnostics. The coarse search is warm-started from the fully separable
/// witness, so coarse <= fully separable holds for the reported values.
std::vector<BoundReport> pair_flux_bounds(const MultipointFixture& f, const EstimatorOptions& options = {});

}  // namespace entflux
