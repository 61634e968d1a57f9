#include "entflux/capacity_bounds.hpp"

#include "entflux/dv_channels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace entflux {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double neg_log2_one_minus(double x) { return -std::log1p(-x) / std::numbers::ln2; }

double best_lower_bound(const KrausChannel& ch) {
    const auto info = coherent_information(ch, DensityMatrix::maximally_mixed(ch.in_dims()));
    return std::max({info.coherent, info.reverse_coherent, 0.0});
}

}  // namespace

void validate(const BoundReport& report) {
    if (std::isnan(report.bound_bits) || report.bound_bits < 0.0) {
        throw std::logic_error("BoundReport: bound must be non-negative");
    }
    if (report.lower_bound_bits && *report.lower_bound_bits > report.bound_bits + 1e-6) {
        throw std::logic_error("BoundReport: lower bound exceeds upper bound");
    }
}

double h_function(double x) {
    if (!(x >= 0.0)) throw std::invalid_argument("h_function: negative mean photon number");
    if (x == 0.0) return 0.0;
    return (x + 1.0) * std::log2(x + 1.0) - x * std::log2(x);
}

double lossy_bound(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("lossy_bound: transmissivity outside [0,1]");
    if (eta == 1.0) return kInfinity;
    return neg_log2_one_minus(eta);
}

double amplifier_bound(double gain) {
    if (!(gain > 1.0)) throw std::invalid_argument("amplifier_bound: gain must exceed 1");
    return neg_log2_one_minus(1.0 / gain);
}

double dephasing_bound(std::size_t d, std::span<const double> probs) {
    if (d < 2 || probs.size() != d) throw std::invalid_argument("dephasing_bound: need d >= 2 probabilities");
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("dephasing_bound: probability outside [0,1]");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-10) throw std::invalid_argument("dephasing_bound: probabilities do not sum to 1");
    return std::max(0.0, std::log2(static_cast<double>(d)) - shannon_entropy(probs));
}

double dephasing_bound(double p) {
    const double probs[] = {1.0 - p, p};
    return dephasing_bound(2, probs);
}

double erasure_bound(std::size_t d, double p) {
    if (d < 2) throw std::invalid_argument("erasure_bound: d must be >= 2");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("erasure_bound: probability outside [0,1]");
    return (1.0 - p) * std::log2(static_cast<double>(d));
}

double thermal_loss_flux(double eta, double nbar) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("thermal_loss_flux: transmissivity outside [0,1]");
    if (!(nbar >= 0.0)) throw std::invalid_argument("thermal_loss_flux: negative thermal photon number");
    if (eta == 0.0) return 0.0;
    if (eta == 1.0) return kInfinity;
    if (nbar >= eta / (1.0 - eta)) return 0.0;
    const double value = neg_log2_one_minus(eta) - nbar * std::log2(eta) - h_function(nbar);
    return std::max(value, 0.0);
}

BoundReport closed_form_bound(const ChannelSpec& spec) {
    BoundReport r;
    r.channel_id = spec_name(spec);
    std::visit(overloaded{
                   [&](const LossySpec& s) {
                       r.bound_bits = lossy_bound(s.eta);
                       r.formula = "pure-loss flux: -log2(1-eta)";
                       r.params = {{"eta", s.eta}};
                   },
                   [&](const AmplifierSpec& s) {
                       r.bound_bits = amplifier_bound(s.gain);
                       r.formula = "quantum-limited amplifier: -log2(1-1/g)";
                       r.params = {{"gain", s.gain}};
                   },
                   [&](const ThermalLossSpec& s) {
                       r.bound_bits = thermal_loss_flux(s.eta, s.nbar);
                       r.formula = "thermal-loss flux: -log2[(1-eta) eta^nbar] - h(nbar), 0 above threshold";
                       r.params = {{"eta", s.eta}, {"nbar", s.nbar}};
                   },
                   [&](const DephasingSpec& s) {
                       r.bound_bits = dephasing_bound(s.d, s.probs);
                       r.lower_bound_bits = best_lower_bound(make_channel(s));
                       r.formula = "dephasing: log2(d) - H(P)";
                       r.params = {{"d", static_cast<double>(s.d)}};
                       for (std::size_t i = 0; i < s.probs.size(); ++i) r.params["P" + std::to_string(i)] = s.probs[i];
                   },
                   [&](const ErasureSpec& s) {
                       r.bound_bits = erasure_bound(s.d, s.p);
                       r.lower_bound_bits = best_lower_bound(make_channel(s));
                       r.formula = "erasure: (1-p) log2(d)";
                       r.params = {{"d", static_cast<double>(s.d)}, {"p", s.p}};
                   },
                   [&](const auto&) {
                       throw std::invalid_argument("closed_form_bound: no closed form for channel type " +
                                                   spec_name(spec));
                   },
               },
               spec);
    validate(r);
    return r;
}

}  // namespace entflux
