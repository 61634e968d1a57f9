#include "entflux/cli.hpp"
#include "entflux/dv_channels.hpp"
#include "entflux/parallel.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace entflux::cli {

namespace {

constexpr double kRciPhotons = 50.0;
constexpr std::size_t kTeleportSamples = 5;

struct BoundBatch {
    std::vector<BoundReport> reports;
    bool converged = true;
};

EstimatorOptions estimator_options(const RunConfig& config, std::size_t threads = 0) {
    EstimatorOptions o;
    o.budget = config.budget;
    o.seed = config.seed;
    o.threads = threads;
    return o;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json run_header(const RunConfig& config, const char* command) {
    return {{"command", command}, {"seed", config.seed}, {"budget", config.budget}};
}

void echo_params(const ChannelSpec& spec, BoundReport& r) {
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, PauliSpec> || std::is_same_v<T, DephasingSpec>) {
                r.params["d"] = static_cast<double>(s.d);
                for (std::size_t i = 0; i < s.probs.size(); ++i) r.params["P" + std::to_string(i)] = s.probs[i];
            } else if constexpr (std::is_same_v<T, DepolarizingSpec> || std::is_same_v<T, ErasureSpec>) {
                r.params["d"] = static_cast<double>(s.d);
                r.params["p"] = s.p;
            } else if constexpr (std::is_same_v<T, RawKrausSpec>) {
                r.params["kraus_ops"] = static_cast<double>(s.ops.size());
            }
        },
        spec);
}

BoundReport choi_estimate(const std::string& id, const ChannelSpec& spec, const EstimatorOptions& options,
                          bool& converged) {
    const KrausChannel ch = make_channel(spec);
    const ChoiMatrix choi = choi_matrix(ch);
    if (choi.state.size() > kMaxEstimatorDim) {
        throw SpecError("", "Choi dimension " + std::to_string(choi.state.size()) + " exceeds 64");
    }
    const Cut cut = bipartite_cut(choi.sender_indices, choi.receiver_indices);
    const ReeEstimate est = ree_upper_estimate(choi.state, {cut, 0}, options);
    const auto info = coherent_information(ch, DensityMatrix::maximally_mixed(ch.in_dims()));

    BoundReport r;
    r.channel_id = id;
    r.bound_bits = est.bits;
    r.lower_bound_bits = std::max({info.coherent, info.reverse_coherent, 0.0});
    r.formula = "E_R(" + cut_label(cut) + ") heuristic upper bound on the Choi matrix";
    echo_params(spec, r);
    r.params["budget"] = static_cast<double>(options.budget);
    r.params["seed"] = static_cast<double>(options.seed);
    r.diagnostics["evaluations"] = static_cast<double>(est.evaluations);
    r.diagnostics["coherent_information"] = info.coherent;
    r.diagnostics["reverse_coherent_information"] = info.reverse_coherent;
    if (!est.finite) {
        converged = false;
        r.lower_bound_bits.reset();
    }
    validate(r);
    return r;
}

BoundBatch bound_for(const ChannelRequest& req, const EstimatorOptions& options) {
    BoundBatch batch;
    if (req.fixture) {
        batch.reports = pair_flux_bounds(make_fixture(*req.fixture), options);
        for (auto& r : batch.reports) {
            r.channel_id = req.id;
            batch.converged = batch.converged && std::isfinite(r.bound_bits);
        }
        return batch;
    }
    const ChannelSpec& spec = *req.spec;
    const bool closed = std::holds_alternative<LossySpec>(spec) || std::holds_alternative<AmplifierSpec>(spec) ||
                        std::holds_alternative<ThermalLossSpec>(spec) ||
                        std::holds_alternative<DephasingSpec>(spec) || std::holds_alternative<ErasureSpec>(spec);
    if (!closed) {
        batch.reports.push_back(choi_estimate(req.id, spec, options, batch.converged));
        return batch;
    }
    BoundReport r = closed_form_bound(spec);
    r.channel_id = req.id;
    std::optional<std::pair<double, double>> link;
    if (const auto* s = std::get_if<LossySpec>(&spec)) link = {s->eta, 0.0};
    if (const auto* s = std::get_if<ThermalLossSpec>(&spec)) link = {s->eta, s->nbar};
    if (link) {
        // Reverse coherent information at finite squeezing is an achievable rate.
        const double rci = rci_lower_estimate(link->first, link->second, kRciPhotons);
        r.lower_bound_bits = std::max(rci, 0.0);
        r.diagnostics["reverse_coherent_information"] = rci;
        r.diagnostics["rci_mu"] = kRciPhotons;
    }
    validate(r);
    batch.reports.push_back(std::move(r));
    return batch;
}

std::string bits_text(double v) {
    if (std::isinf(v)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string bound_summary(const std::vector<BoundReport>& reports) {
    std::ostringstream s;
    for (std::size_t k = 0; k < reports.size(); ++k) {
        const auto& r = reports[k];
        if (k) s << "; ";
        s << r.channel_id << " pair (" << r.pair.first << "," << r.pair.second << ") bound " << bits_text(r.bound_bits)
          << " bits";
        if (r.lower_bound_bits) s << " (lower " << bits_text(*r.lower_bound_bits) << ")";
    }
    return s.str();
}

Topology infer_topology(const KrausChannel& ch) {
    const bool one_in = ch.in_dims().size() == 1;
    const bool one_out = ch.out_dims().size() == 1;
    if (one_in) return one_out ? Topology::point_to_point : Topology::broadcast;
    return one_out ? Topology::mac : Topology::interference;
}

/// Channel versus teleportation simulation on seeded inputs entangled with a qubit reference.
double teleport_equality(const MultipointFixture& f, const CovarianceReport& report, unsigned long long seed) {
    const auto& ch = f.channel;
    Dims dims = ch.in_dims();
    dims.push_back(2);
    std::vector<std::size_t> targets(ch.in_dims().size());
    for (std::size_t i = 0; i < targets.size(); ++i) targets[i] = i;
    double worst = 0.0;
    for (std::size_t s = 0; s < kTeleportSamples; ++s) {
        const DensityMatrix rho = random_state(dims, seed * 1000003ULL + s);
        const DensityMatrix direct = apply_channel(ch, rho, targets);
        const DensityMatrix simulated = teleport_simulate(ch, rho, report, targets);
        worst = std::max(worst, trace_distance(direct, simulated));
    }
    return worst;
}

}  // namespace

CommandResult cmd_bound(const RunConfig& config, const json& spec) {
    const ChannelRequest req = parse_channel(spec);
    const BoundBatch batch = bound_for(req, estimator_options(config));

    CommandResult result;
    if (config.format == Format::csv) {
        result.output = bound_csv(batch.reports);
    } else {
        json out = run_header(config, "bound");
        out["reports"] = json::array();
        for (const auto& r : batch.reports) out["reports"].push_back(to_json(r));
        result.output = dump(out);
    }
    result.summary = bound_summary(batch.reports);
    if (!batch.converged) {
        result.exit_code = kExitNoConvergence;
        result.summary += " [estimator did not reach a finite value]";
    }
    return result;
}

CommandResult cmd_network(const RunConfig& config, const json& spec) {
    const NetworkSpec net = parse_network(spec);
    const auto reports = broadcast_bottleneck_bound(net);

    CommandResult result;
    if (config.format == Format::csv) {
        result.output = network_csv(reports);
    } else {
        json out = run_header(config, "network");
        out["tap_convention"] = net.tap == TapConvention::reflect ? "reflect" : "transmit";
        out["first_link_rci_bits"] = bits_to_json(rci_lower_estimate(net, kRciPhotons));
        out["rci_mu"] = kRciPhotons;
        out["reports"] = json::array();
        for (const auto& r : reports) out["reports"].push_back(to_json(r));
        result.output = dump(out);
    }
    std::ostringstream s;
    s << reports.size() << " receivers, bottleneck " << bits_text(reports.front().bound_bits) << " bits";
    for (const auto& r : reports) {
        s << "; B" << r.pair.second << " tau " << bits_text(r.diagnostics.at("tau")) << " reduced-link "
          << bits_text(r.diagnostics.at("reduced_link_flux_bits"));
    }
    result.summary = s.str();
    return result;
}

CommandResult cmd_verify(const RunConfig& config, const json& spec) {
    const ChannelRequest req = parse_channel(spec);
    std::optional<MultipointFixture> fixture;
    if (req.fixture) {
        fixture = make_fixture(*req.fixture);
    } else {
        KrausChannel ch = [&] {
            try {
                return make_channel(*req.spec);
            } catch (const std::invalid_argument& e) {
                throw SpecError("/type", e.what());
            }
        }();
        const Topology topology = infer_topology(ch);
        fixture = make_fixture(req.id, topology, std::move(ch));
    }
    const StretchingReport stretching = verify_stretching(*fixture, req.uses, config.seed);
    const auto& cov = stretching.covariance;
    std::optional<double> equality;
    if (cov.covariant) equality = teleport_equality(*fixture, cov, config.seed);

    CommandResult result;
    if (config.format == Format::csv) {
        std::ostringstream out;
        out << "channel_id,topology,covariant,worst_deviation,teleport_max_trace_distance,stretching_ran,"
               "stretching_passed,stretching_max_deviation\n";
        out << req.id << ',' << to_string(fixture->topology) << ',' << (cov.covariant ? "true" : "false") << ','
            << format_number(cov.worst_deviation) << ',' << (equality ? format_number(*equality) : "") << ','
            << (stretching.ran ? "true" : "false") << ',' << (stretching.passed ? "true" : "false") << ','
            << format_number(stretching.max_deviation) << '\n';
        result.output = out.str();
    } else {
        json out = run_header(config, "verify");
        out.erase("budget");
        out["channel_id"] = req.id;
        out["topology"] = to_string(fixture->topology);
        out["covariance"] = to_json(cov);
        out["teleport_equality"] = equality ? json{{"samples", kTeleportSamples}, {"max_trace_distance", *equality}}
                                            : json(nullptr);
        out["stretching"] = to_json(stretching);
        result.output = dump(out);
    }
    std::ostringstream s;
    s << req.id << ": covariant " << (cov.covariant ? "true" : "false");
    if (equality) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2e", *equality);
        s << ", teleport equality " << buf;
    }
    if (stretching.ran) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2e", stretching.max_deviation);
        s << ", stretching " << (stretching.passed ? "pass" : "FAIL") << " (" << buf << ")";
    } else {
        s << ", stretching skipped";
    }
    result.summary = s.str();
    return result;
}

CommandResult cmd_sweep(const RunConfig& config, const json& spec) {
    const SweepSpec sweep = parse_sweep(spec);
    const auto grid = sweep.grid();
    std::vector<BoundReport> reports(grid.size());
    std::vector<char> converged(grid.size(), 1);
    parallel_for(grid.size(), 0, [&](std::size_t k) {
        json point = sweep.channel;
        point[sweep.param] = grid[k];
        const auto batch = bound_for(parse_channel(point, "/channel"), estimator_options(config, 1));
        reports[k] = batch.reports.front();
        converged[k] = batch.converged;
    });

    CommandResult result;
    if (config.format == Format::csv) {
        result.output = sweep_csv(sweep.param, grid, reports);
    } else {
        json out = run_header(config, "sweep");
        out["param"] = sweep.param;
        out["grid"] = grid;
        out["reports"] = json::array();
        for (const auto& r : reports) out["reports"].push_back(to_json(r));
        result.output = dump(out);
    }
    std::ostringstream s;
    s << reports.front().channel_id << " sweep over " << sweep.param << ": " << grid.size() << " points, bound "
      << bits_text(reports.front().bound_bits) << " .. " << bits_text(reports.back().bound_bits) << " bits";
    result.summary = s.str();
    if (std::find(converged.begin(), converged.end(), 0) != converged.end()) result.exit_code = kExitNoConvergence;
    return result;
}

CommandResult run(const RunConfig& config) {
    try {
        const json spec = load_json_file(config.spec_path);
        switch (config.command) {
            case Command::bound: return cmd_bound(config, spec);
            case Command::network: return cmd_network(config, spec);
            case Command::verify: return cmd_verify(config, spec);
            case Command::sweep: return cmd_sweep(config, spec);
        }
    } catch (const SpecError& e) {
        return {kExitBadSpec, "", std::string("malformed spec: ") + e.what()};
    } catch (const std::exception& e) {
        return {kExitInternal, "", std::string("error: ") + e.what()};
    }
    return {kExitInternal, "", "error: unknown command"};
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Two-way capacity bounds for quantum channels and networks", "entflux"};
    app.require_subcommand(1);
    RunConfig config;
    std::string format = "json";
    const std::pair<const char*, Command> commands[] = {
        {"bound", Command::bound},
        {"network", Command::network},
        {"verify", Command::verify},
        {"sweep", Command::sweep},
    };
    const char* descriptions[] = {
        "Capacity bound for a channel spec or multipoint fixture",
        "Bottleneck bounds for a thermal-loss multisplitter network",
        "Teleportation covariance and stretching checks",
        "Bound over a one-parameter grid",
    };
    for (std::size_t k = 0; k < 4; ++k) {
        const auto cmd = commands[k].second;
        auto* sub = app.add_subcommand(commands[k].first, descriptions[k]);
        sub->add_option("--spec", config.spec_path, "JSON spec file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", config.output_path, "Report file (default: standard output)");
        sub->add_option("--seed", config.seed, "Estimator and protocol seed")->capture_default_str();
        sub->add_option("--budget", config.budget, "Objective evaluations for the REE estimator")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        sub->add_option("--format", format, "Report format")->capture_default_str()->check(CLI::IsMember({"json", "csv"}));
        sub->callback([&config, cmd] { config.command = cmd; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitBadSpec;
    }
    config.format = format == "csv" ? Format::csv : Format::json;

    const CommandResult result = run(config);
    if (result.exit_code == kExitBadSpec || result.exit_code == kExitInternal) {
        err << result.summary << "\n";
        return result.exit_code;
    }
    if (config.output_path.empty()) {
        out << result.output;
        err << result.summary << "\n";
    } else {
        std::ofstream file(config.output_path, std::ios::binary);
        file << result.output;
        if (!file) {
            err << "error: cannot write " << config.output_path << "\n";
            return kExitInternal;
        }
        out << result.summary << "\n";
    }
    return result.exit_code;
}

}  // namespace entflux::cli
