// capacity_bounds.hpp: closed-form two-way capacity bounds and a numerical
// upper-bound estimator for the relative entropy of entanglement (REE).

#pragma once

#include "entflux/channel_spec.hpp"
#include "entflux/operator_core.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace entflux {

struct BoundReport {
    std::string channel_id;
    std::pair<std::size_t, std::size_t> pair{0, 0};
    double bound_bits = 0.0;  // may be kInfinity
    std::optional<double> lower_bound_bits;
    std::string formula;
    std::map<std::string, double> params;
    /// Quantities that are not bounds (e.g. reduced-link flux, fit residuals).
    std::map<std::string, double> diagnostics;
};

/// Throws std::logic_error if the report violates its invariants.
void validate(const BoundReport& report);

/// h(x) = (x+1) log2(x+1) - x log2 x, h(0) = 0.
double h_function(double x);

/// -log2(1-eta); kInfinity at eta = 1.
double lossy_bound(double eta);
/// -log2(1 - 1/g) for gain g > 1.
double amplifier_bound(double gain);
/// log2 d - H(P).
double dephasing_bound(std::size_t d, std::span<const double> probs);
double dephasing_bound(double p);
/// (1-p) log2 d.
double erasure_bound(std::size_t d, double p);
/// Thermal-loss flux bound; exactly 0 once nbar >= eta/(1-eta).
double thermal_loss_flux(double eta, double nbar);

BoundReport closed_form_bound(const ChannelSpec& spec);

// ---------------------------------------------------------------------------
// REE upper-bound estimator

using Cut = std::vector<std::vector<std::size_t>>;

struct SeparableAnsatz {
    /// Partition of all subsystem indices; states are products across groups.
    Cut cut;
    /// Number of product terms; 0 selects (largest group dimension)^2.
    std::size_t components = 0;
};

/// sigma = sum_t weights[t] * (x)_g |states[t][g]><states[t][g]|.
struct SeparableWitness {
    Cut cut;
    std::vector<double> weights;
    std::vector<std::vector<CVector>> states;
};

Cut bipartite_cut(std::vector<std::size_t> left, std::vector<std::size_t> right);
Cut fully_separable_cut(std::size_t subsystems);
/// Cut string such as "0,1|2" for report tags.
std::string cut_label(const Cut& cut);

DensityMatrix witness_state(const SeparableWitness& witness, const Dims& dims);

struct EstimatorOptions {
    std::size_t budget = 20000;  // total objective evaluations across restarts
    unsigned long long seed = 0;
    std::size_t restarts = 8;
    std::size_t threads = 0;     // 0: ENTFLUX_THREADS or hardware concurrency
    /// Witness on a cut that refines the ansatz cut; seeds one restart.
    std::optional<SeparableWitness> warm_start;
};

struct ReeEstimate {
    double bits = kInfinity;  // upper bound (heuristic infimum), never the REE itself
    SeparableWitness witness;
    std::size_t evaluations = 0;
    bool finite = false;
    std::string diagnostic;
};

inline constexpr std::size_t kMaxEstimatorDim = 64;

/// Simulated annealing over separable ansatz parameters. Deterministic given
/// the seed; restart r uses an RNG derived from (seed, r).
ReeEstimate ree_upper_estimate(const DensityMatrix& rho, const SeparableAnsatz& ansatz,
                               const EstimatorOptions& options = {});

}  // namespace entflux
