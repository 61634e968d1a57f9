#include "entflux/cli.hpp"
#include "entflux/dv_channels.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace entflux::cli {

namespace {

void require_object(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw SpecError(where, "expected an object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) throw SpecError(where + "/" + key, "unknown field");
    }
}

const json& field(const json& j, const std::string& where, const std::string& key) {
    if (!j.contains(key)) throw SpecError(where + "/" + key, "missing required field");
    return j.at(key);
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw SpecError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SpecError(path, "expected a finite number");
    return v;
}

double number_field(const json& j, const std::string& where, const std::string& key) {
    return number(field(j, where, key), where + "/" + key);
}

std::size_t count(const json& j, const std::string& path) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) throw SpecError(path, "expected a non-negative integer");
    const auto v = j.get<long long>();
    if (v < 0) throw SpecError(path, "expected a non-negative integer");
    return static_cast<std::size_t>(v);
}

std::size_t count_field(const json& j, const std::string& where, const std::string& key, std::size_t fallback) {
    return j.contains(key) ? count(j.at(key), where + "/" + key) : fallback;
}

std::vector<double> number_list(const json& j, const std::string& path) {
    if (!j.is_array()) throw SpecError(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "/" + std::to_string(i)));
    return out;
}

Dims dims_list(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw SpecError(path, "expected a non-empty array of dimensions");
    Dims out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto d = count(j[i], path + "/" + std::to_string(i));
        if (d < 1) throw SpecError(path + "/" + std::to_string(i), "dimension must be positive");
        out.push_back(d);
    }
    return out;
}

void in_range(double v, double lo, double hi, const std::string& path) {
    if (v < lo || v > hi) {
        std::ostringstream msg;
        msg << "value " << v << " outside [" << lo << ", " << hi << "]";
        throw SpecError(path, msg.str());
    }
}

std::size_t qudit_dim(const json& j, const std::string& where) {
    const auto d = count_field(j, where, "d", 2);
    if (d < 2) throw SpecError(where + "/d", "dimension must be at least 2");
    return d;
}

cplx complex_entry(const json& j, const std::string& path) {
    if (j.is_number()) return {number(j, path), 0.0};
    if (j.is_array() && j.size() == 2) return {number(j[0], path + "/0"), number(j[1], path + "/1")};
    throw SpecError(path, "expected a number or a [re, im] pair");
}

CMatrix complex_matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty()) {
        throw SpecError(path, "expected a non-empty array of rows");
    }
    const auto rows = j.size();
    const auto cols = j[0].size();
    CMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const std::string row_path = path + "/" + std::to_string(r);
        if (!j[r].is_array() || j[r].size() != cols) throw SpecError(row_path, "ragged matrix row");
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                complex_entry(j[r][c], row_path + "/" + std::to_string(c));
        }
    }
    return m;
}

const std::set<std::string> kCommonFields{"type", "id", "uses"};

std::set<std::string> with_common(std::initializer_list<std::string> extra) {
    std::set<std::string> out = kCommonFields;
    out.insert(extra);
    return out;
}

ChannelSpec parse_spec_body(const json& j, const std::string& where, const std::string& type) {
    if (type == "lossy") {
        require_object(j, where, with_common({"eta"}));
        const double eta = number_field(j, where, "eta");
        in_range(eta, 0.0, 1.0, where + "/eta");
        return LossySpec{eta};
    }
    if (type == "amplifier") {
        require_object(j, where, with_common({"gain"}));
        const double gain = number_field(j, where, "gain");
        if (!(gain > 1.0)) throw SpecError(where + "/gain", "gain must exceed 1");
        return AmplifierSpec{gain};
    }
    if (type == "thermal_loss") {
        require_object(j, where, with_common({"eta", "nbar"}));
        const double eta = number_field(j, where, "eta");
        const double nbar = number_field(j, where, "nbar");
        in_range(eta, 0.0, 1.0, where + "/eta");
        if (nbar < 0.0) throw SpecError(where + "/nbar", "thermal photon number must be non-negative");
        return ThermalLossSpec{eta, nbar};
    }
    if (type == "dephasing") {
        require_object(j, where, with_common({"d", "p", "probs"}));
        const auto d = qudit_dim(j, where);
        if (j.contains("p") == j.contains("probs")) throw SpecError(where, "give exactly one of p or probs");
        if (j.contains("p")) {
            if (d != 2) throw SpecError(where + "/p", "p is only defined for d = 2; use probs");
            const double p = number_field(j, where, "p");
            in_range(p, 0.0, 1.0, where + "/p");
            return qubit_dephasing(p);
        }
        auto probs = number_list(j.at("probs"), where + "/probs");
        if (probs.size() != d) throw SpecError(where + "/probs", "expected d entries");
        return DephasingSpec{d, std::move(probs)};
    }
    if (type == "erasure" || type == "depolarizing") {
        require_object(j, where, with_common({"d", "p"}));
        const auto d = qudit_dim(j, where);
        const double p = number_field(j, where, "p");
        in_range(p, 0.0, 1.0, where + "/p");
        if (type == "erasure") return ErasureSpec{d, p};
        return DepolarizingSpec{d, p};
    }
    if (type == "pauli") {
        require_object(j, where, with_common({"d", "probs"}));
        const auto d = qudit_dim(j, where);
        auto probs = number_list(field(j, where, "probs"), where + "/probs");
        if (probs.size() != d * d) throw SpecError(where + "/probs", "expected d*d entries");
        return PauliSpec{d, std::move(probs)};
    }
    if (type == "kraus") {
        require_object(j, where, with_common({"in_dims", "out_dims", "ops"}));
        RawKrausSpec spec;
        spec.in_dims = dims_list(field(j, where, "in_dims"), where + "/in_dims");
        spec.out_dims = dims_list(field(j, where, "out_dims"), where + "/out_dims");
        const json& ops = field(j, where, "ops");
        if (!ops.is_array() || ops.empty()) throw SpecError(where + "/ops", "expected a non-empty array of matrices");
        for (std::size_t k = 0; k < ops.size(); ++k) {
            spec.ops.push_back(complex_matrix(ops[k], where + "/ops/" + std::to_string(k)));
        }
        return spec;
    }
    throw SpecError(where + "/type", "unknown channel type '" + type + "'");
}

}  // namespace

json parse_json_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw SpecError("", std::string("invalid JSON: ") + e.what());
    }
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("", "cannot read spec file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_json_text(buffer.str());
}

ChannelRequest parse_channel(const json& j, const std::string& where) {
    if (!j.is_object()) throw SpecError(where, "expected an object");
    const json& type_node = field(j, where, "type");
    if (!type_node.is_string()) throw SpecError(where + "/type", "expected a string");
    const auto type = type_node.get<std::string>();

    ChannelRequest req;
    if (j.contains("id")) {
        if (!j.at("id").is_string()) throw SpecError(where + "/id", "expected a string");
        req.id = j.at("id").get<std::string>();
    }
    req.uses = count_field(j, where, "uses", 2);
    if (req.uses < 1 || req.uses > 3) throw SpecError(where + "/uses", "uses must be 1, 2 or 3");

    if (type == "fixture") {
        require_object(j, where, with_common({"name"}));
        const json& name = field(j, where, "name");
        if (!name.is_string()) throw SpecError(where + "/name", "expected a string");
        const auto names = fixture_names();
        if (std::find(names.begin(), names.end(), name.get<std::string>()) == names.end()) {
            throw SpecError(where + "/name", "unknown fixture '" + name.get<std::string>() + "'");
        }
        req.fixture = name.get<std::string>();
        if (req.id.empty()) req.id = *req.fixture;
        return req;
    }

    req.spec = parse_spec_body(j, where, type);
    if (req.id.empty()) req.id = type;
    const bool continuous = std::holds_alternative<LossySpec>(*req.spec) ||
                            std::holds_alternative<AmplifierSpec>(*req.spec) ||
                            std::holds_alternative<ThermalLossSpec>(*req.spec);
    if (!continuous) {
        try {
            (void)make_channel(*req.spec);
        } catch (const std::invalid_argument& e) {
            throw SpecError(where, e.what());
        }
    }
    return req;
}

NetworkSpec parse_network(const json& j) {
    require_object(j, "", {"etas", "nbars", "tap_convention"});
    NetworkSpec spec;
    spec.etas = number_list(field(j, "", "etas"), "/etas");
    spec.nbars = number_list(field(j, "", "nbars"), "/nbars");
    if (j.contains("tap_convention")) {
        const json& tap = j.at("tap_convention");
        if (tap == "reflect") {
            spec.tap = TapConvention::reflect;
        } else if (tap == "transmit") {
            spec.tap = TapConvention::transmit;
        } else {
            throw SpecError("/tap_convention", "expected \"reflect\" or \"transmit\"");
        }
    }
    for (std::size_t i = 0; i < spec.etas.size(); ++i) in_range(spec.etas[i], 0.0, 1.0, "/etas/" + std::to_string(i));
    for (std::size_t i = 0; i < spec.nbars.size(); ++i) {
        if (spec.nbars[i] < 0.0) throw SpecError("/nbars/" + std::to_string(i), "must be non-negative");
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw SpecError("", e.what());
    }
    return spec;
}

std::vector<double> SweepSpec::grid() const {
    std::vector<double> out;
    for (std::size_t k = 0; k < steps; ++k) {
        out.push_back(steps == 1 ? from : from + (to - from) * static_cast<double>(k) / static_cast<double>(steps - 1));
    }
    if (!out.empty()) out.back() = steps == 1 ? from : to;
    return out;
}

SweepSpec parse_sweep(const json& j) {
    require_object(j, "", {"channel", "param", "from", "to", "steps"});
    SweepSpec s;
    s.channel = field(j, "", "channel");
    const json& param = field(j, "", "param");
    if (!param.is_string()) throw SpecError("/param", "expected a string");
    s.param = param.get<std::string>();
    if (s.param == "type" || s.param == "id" || s.param == "uses") throw SpecError("/param", "not a sweepable parameter");
    s.from = number_field(j, "", "from");
    s.to = number_field(j, "", "to");
    s.steps = count(field(j, "", "steps"), "/steps");
    if (s.steps == 0 || s.to < s.from || (s.steps > 1 && s.to == s.from)) {
        throw SpecError("/steps", "empty sweep range");
    }
    // Every grid point must itself be a valid channel.
    for (double v : s.grid()) {
        json point = s.channel;
        if (!point.is_object()) throw SpecError("/channel", "expected an object");
        point[s.param] = v;
        const auto req = parse_channel(point, "/channel");
        if (req.fixture) throw SpecError("/channel/type", "fixtures have no sweepable parameter");
    }
    return s;
}

}  // namespace entflux::cli
