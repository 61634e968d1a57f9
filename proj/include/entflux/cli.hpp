// cli.hpp: JSON spec parsing, command dispatch and report serialization for
// the entflux command-line tool.

#pragma once

#include "entflux/capacity_bounds.hpp"
#include "entflux/gaussian_cv.hpp"
#include "entflux/multipoint.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace entflux::cli {

using nlohmann::json;

enum class Command { bound, network, verify, sweep };
enum class Format { json, csv };

struct RunConfig {
    Command command = Command::bound;
    std::string spec_path;
    std::string output_path;  // empty: standard output
    unsigned long long seed = 0;
    std::size_t budget = 20000;
    Format format = Format::json;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitBadSpec = 2;
inline constexpr int kExitNoConvergence = 3;

/// Malformed input; `field` is a JSON pointer such as "/etas/1".
class SpecError : public std::runtime_error {
public:
    SpecError(std::string field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// --- spec parsing (config.cpp) ----------------------------------------------

/// A channel spec or a named multipoint fixture.
struct ChannelRequest {
    std::string id;
    std::optional<ChannelSpec> spec;
    std::optional<std::string> fixture;
    std::size_t uses = 2;  // verify only
};

/// Parse errors carry line and column.
json parse_json_text(const std::string& text);
json load_json_file(const std::string& path);

ChannelRequest parse_channel(const json& j, const std::string& where = "");
NetworkSpec parse_network(const json& j);

struct SweepSpec {
    json channel;
    std::string param;
    double from = 0.0;
    double to = 0.0;
    std::size_t steps = 0;

    /// Evenly spaced, endpoints included.
    std::vector<double> grid() const;
};

SweepSpec parse_sweep(const json& j);

// --- commands (commands.cpp) ------------------------------------------------

struct CommandResult {
    int exit_code = kExitOk;
    std::string output;   // report file contents
    std::string summary;  // one human-readable line
};

CommandResult cmd_bound(const RunConfig& config, const json& spec);
CommandResult cmd_network(const RunConfig& config, const json& spec);
CommandResult cmd_verify(const RunConfig& config, const json& spec);
CommandResult cmd_sweep(const RunConfig& config, const json& spec);

/// Loads the spec, dispatches, maps SpecError to exit 2 and other exceptions to 1.
CommandResult run(const RunConfig& config);

/// Full front end: flags, run, output file, summary. Returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// --- serialization (report_io.cpp) ------------------------------------------

/// Finite values as numbers, infinities as "inf".
json bits_to_json(double value);
json to_json(const BoundReport& report);
json to_json(const CovarianceReport& report);
json to_json(const StretchingReport& report);

std::string format_number(double value);
std::string bound_csv(const std::vector<BoundReport>& reports);
/// Columns: bob_index, tau_i, nbar_eff_i, bottleneck_bits, reduced_link_flux_bits.
std::string network_csv(const std::vector<BoundReport>& reports);
std::string sweep_csv(const std::string& param, const std::vector<double>& grid,
                      const std::vector<BoundReport>& reports);

}  // namespace entflux::cli
