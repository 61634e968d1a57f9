#include "entflux/cli.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace entflux::cli {

json bits_to_json(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    return value;
}

std::string format_number(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

json to_json(const BoundReport& report) {
    json params = json::object();
    for (const auto& [k, v] : report.params) params[k] = bits_to_json(v);
    json diagnostics = json::object();
    for (const auto& [k, v] : report.diagnostics) diagnostics[k] = bits_to_json(v);
    return {
        {"channel_id", report.channel_id},
        {"pair", {report.pair.first, report.pair.second}},
        {"bound_bits", bits_to_json(report.bound_bits)},
        {"lower_bound_bits", report.lower_bound_bits ? bits_to_json(*report.lower_bound_bits) : json(nullptr)},
        {"formula", report.formula},
        {"params", params},
        {"diagnostics", diagnostics},
    };
}

json to_json(const CovarianceReport& report) {
    json table = json::array();
    for (const auto& [indices, correction] : report.correction_table) {
        table.push_back({{"input", indices}, {"correction", correction.label}});
    }
    return {
        {"mode", to_string(report.mode)},
        {"covariant", report.covariant},
        {"worst_deviation", report.worst_deviation},
        {"correction_table", table},
    };
}

json to_json(const StretchingReport& report) {
    return {
        {"ran", report.ran},
        {"passed", report.passed},
        {"max_deviation", report.max_deviation},
        {"uses", report.uses},
        {"branches", report.branches},
        {"message", report.message},
    };
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

double diagnostic(const BoundReport& r, const std::string& key) {
    const auto it = r.diagnostics.find(key);
    if (it == r.diagnostics.end()) throw std::logic_error("report lacks diagnostic " + key);
    return it->second;
}

}  // namespace

std::string bound_csv(const std::vector<BoundReport>& reports) {
    std::ostringstream out;
    out << "channel_id,sender,receiver,bound_bits,lower_bound_bits,formula\n";
    for (const auto& r : reports) {
        out << csv_field(r.channel_id) << ',' << r.pair.first << ',' << r.pair.second << ','
            << format_number(r.bound_bits) << ',' << optional_number(r.lower_bound_bits) << ','
            << csv_field(r.formula) << '\n';
    }
    return out.str();
}

std::string network_csv(const std::vector<BoundReport>& reports) {
    std::ostringstream out;
    out << "bob_index,tau_i,nbar_eff_i,bottleneck_bits,reduced_link_flux_bits\n";
    for (const auto& r : reports) {
        out << r.pair.second << ',' << format_number(diagnostic(r, "tau")) << ','
            << format_number(diagnostic(r, "nbar_eff")) << ',' << format_number(r.bound_bits) << ','
            << format_number(diagnostic(r, "reduced_link_flux_bits")) << '\n';
    }
    return out.str();
}

std::string sweep_csv(const std::string& param, const std::vector<double>& grid,
                      const std::vector<BoundReport>& reports) {
    std::ostringstream out;
    out << csv_field(param) << ",bound_bits,lower_bound_bits\n";
    for (std::size_t k = 0; k < grid.size(); ++k) {
        out << format_number(grid[k]) << ',' << format_number(reports[k].bound_bits) << ','
            << optional_number(reports[k].lower_bound_bits) << '\n';
    }
    return out.str();
}

}  // namespace entflux::cli
