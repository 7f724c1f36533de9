#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mwqed/cli.hpp"
#include "mwqed/units.hpp"

namespace mwqed::cli {

namespace {

// Leaf descriptors carry "$type"; plain objects are nested blocks.
Json leaf(const char* type, Json def, bool nullable = false) {
    Json j = {{"$type", type}, {"$default", std::move(def)}};
    if (nullable) j["$nullable"] = true;
    return j;
}
Json num(double d) { return leaf("number", d); }
Json num_or_null() { return leaf("number", nullptr, true); }
Json integer(int i) { return leaf("integer", i); }
Json boolean(bool b) { return leaf("boolean", b); }
Json text(const std::string& s) { return leaf("string", s); }
Json choice(const std::string& s, std::vector<std::string> allowed) {
    Json j = leaf("string", s);
    j["$enum"] = allowed;
    return j;
}
Json num_array(std::vector<double> v) { return leaf("number_array", v); }
Json int_array(std::vector<int> v) { return leaf("integer_array", v); }
Json choice_array(std::vector<std::string> v, std::vector<std::string> allowed) {
    Json j = leaf("string_array", v);
    j["$enum"] = allowed;
    return j;
}
Json with_min(Json j, double lo, bool strict = false) {
    j[strict ? "$gt" : "$min"] = lo;
    return j;
}
Json with_max(Json j, double hi) {
    j["$max"] = hi;
    return j;
}

const Json& schema() {
    static const Json s = [] {
        Json root;
        root["schema_version"] = integer(schema_version);
        root["mode"] = leaf("string", nullptr, true);
        root["lattice"] = {
            {"s_z", with_min(num(8.0), 0.0)},
            {"s_perp", with_min(num(40.0), 0.0)},
            {"si",
             {{"lambda_z_nm", with_min(num(790.0), 0.0, true)},
              {"lambda_perp_nm", with_min(num(1064.0), 0.0, true)},
              {"mass_amu", with_min(num(codata::rb87_mass_amu), 0.0, true)},
              {"gravity_m_s2", num(codata::g_standard)},
              {"omega_z_hz", num_or_null()}}},
        };
        root["drive"] = {
            {"omega_over_omega_r", with_min(num(1.0), 0.0)},
            {"delta_over_omega_r", num(4.0)},
            {"phi", num(0.0)},
            {"pulse_ms", with_min(num(0.25), 0.0)},
        };
        root["model"] = {
            {"sites", with_max(with_min(integer(3), 1), 64)},
            {"initial_state", choice("tds", {"tds", "localized"})},
            {"localized_site", integer(0)},
            {"k_cutoff_over_kr", with_min(num(6.0), 0.0, true)},
            {"box_length_sites", with_min(num(400.0), 0.0, true)},
            {"q_grid", with_min(integer(300), 6)},
            {"sigma_k", with_min(num(0.15), 0.0)},
            {"time_points", with_min(integer(101), 2)},
            {"method", choice("modes", {"modes", "spectral"})},
        };
        root["output"] = {
            {"float_precision", with_max(with_min(integer(12), 6), 17)},
            {"snapshots", with_min(integer(5), 0)},
            {"z_points", with_min(integer(241), 2)},
            {"z_range_sites", with_min(num(30.0), 0.0, true)},
            {"population_scale", with_min(num(1.0), 0.0, true)},
        };
        root["sweep"] = {
            {"delta_min", num(2.0)},
            {"delta_max", num(8.0)},
            {"delta_step", with_min(num(0.5), 0.0, true)},
            {"phi_count", with_min(integer(9), 1)},
            {"t_ms", with_min(num(0.2), 0.0)},
            {"sites", with_min(integer(4), 1)},
            {"omega_over_omega_r", with_min(num(0.6), 0.0)},
            {"k_cutoff_over_kr", with_min(num(10.0), 0.0, true)},
            {"k_points", with_min(integer(241), 2)},
        };
        root["master"] = {
            {"register", choice_array({"sup", "sup", "empty"}, {"empty", "r", "g", "sup"})},
            {"mixing_angle", num(pi / 2)},
            {"delta_g", num(0.0)},
            {"lamb_shift", boolean(true)},
            {"t_ms", with_min(num(0.2), 0.0)},
            {"time_points", with_min(integer(21), 2)},
            {"rtol", with_min(num(1e-10), 0.0, true)},
        };
        root["spectrum"] = {
            {"re_min", num_or_null()},
            {"re_max", num_or_null()},
            {"im_min", num_or_null()},
            {"im_max", num_or_null()},
            {"cut_angle", with_min(num(pi / 12), 0.0, true)},
            {"grid_points", with_min(integer(161), 8)},
            {"reconstruct", boolean(true)},
        };
        root["fit"] = {
            {"input", text("")},
            {"kind", choice("piecewise", {"piecewise", "beat", "array_size"})},
            {"t_column", text("t_ms")},
            {"y_column", text("P_excited")},
            {"sigma_column", text("sigma")},
            {"window_ms", num_array({0.0, 0.25})},
            {"min_points", with_min(integer(6), 2)},
            {"form", choice("decaying_amplitude", {"decaying_amplitude", "dissipative_vs_bound"})},
            {"gamma_over_omega_r", num_or_null()},
            {"candidates", int_array({1, 2, 3, 4, 5})},
        };
        root["render"] = {
            {"input_dir", text("")},
            {"normalization", choice("per_row", {"per_row", "global"})},
            {"light_cones", boolean(true)},
        };
        return root;
    }();
    return s;
}

bool is_leaf(const Json& s) { return s.is_object() && s.contains("$type"); }

std::string escape_pointer(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

Json check_leaf(const Json& s, const Json& v, const std::string& ptr) {
    const std::string type = s["$type"];
    if (v.is_null()) {
        if (s.value("$nullable", false)) return v;
        throw ConfigError(ptr, "null is not allowed");
    }
    auto bounds = [&](double x) {
        if (!std::isfinite(x)) throw ConfigError(ptr, "must be finite");
        if (s.contains("$min") && x < s["$min"].get<double>())
            throw ConfigError(ptr, "must be >= " + s["$min"].dump());
        if (s.contains("$gt") && !(x > s["$gt"].get<double>()))
            throw ConfigError(ptr, "must be > " + s["$gt"].dump());
        if (s.contains("$max") && x > s["$max"].get<double>())
            throw ConfigError(ptr, "must be <= " + s["$max"].dump());
    };
    auto in_enum = [&](const std::string& x, const std::string& p) {
        if (!s.contains("$enum")) return;
        for (const auto& e : s["$enum"])
            if (e == x) return;
        throw ConfigError(p, "'" + x + "' is not one of " + s["$enum"].dump());
    };
    if (type == "number") {
        if (!v.is_number()) throw ConfigError(ptr, "expected a number");
        bounds(v.get<double>());
        return v.get<double>();
    }
    if (type == "integer") {
        if (!v.is_number_integer() &&
            !(v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()))
            throw ConfigError(ptr, "expected an integer");
        bounds(v.get<double>());
        return static_cast<long long>(v.get<double>());
    }
    if (type == "boolean") {
        if (!v.is_boolean()) throw ConfigError(ptr, "expected true or false");
        return v;
    }
    if (type == "string") {
        if (!v.is_string()) throw ConfigError(ptr, "expected a string");
        in_enum(v.get<std::string>(), ptr);
        return v;
    }
    if (!v.is_array()) throw ConfigError(ptr, "expected an array");
    Json out = Json::array();
    for (size_t i = 0; i < v.size(); ++i) {
        const std::string p = ptr + "/" + std::to_string(i);
        const Json& x = v[i];
        if (type == "number_array") {
            if (!x.is_number()) throw ConfigError(p, "expected a number");
            out.push_back(x.get<double>());
        } else if (type == "integer_array") {
            if (!x.is_number_integer()) throw ConfigError(p, "expected an integer");
            out.push_back(x.get<long long>());
        } else {
            if (!x.is_string()) throw ConfigError(p, "expected a string");
            in_enum(x.get<std::string>(), p);
            out.push_back(x);
        }
    }
    return out;
}

Json resolve_block(const Json& s, const Json& raw, const std::string& ptr) {
    if (!raw.is_object()) throw ConfigError(ptr.empty() ? "/" : ptr, "expected an object");
    for (auto it = raw.begin(); it != raw.end(); ++it)
        if (!s.contains(it.key())) throw ConfigError(ptr + "/" + escape_pointer(it.key()), "unknown key");
    Json out = Json::object();
    for (auto it = s.begin(); it != s.end(); ++it) {
        const std::string p = ptr + "/" + escape_pointer(it.key());
        if (is_leaf(it.value())) {
            out[it.key()] = raw.contains(it.key()) ? check_leaf(it.value(), raw[it.key()], p) : it.value()["$default"];
        } else {
            out[it.key()] = resolve_block(it.value(), raw.contains(it.key()) ? raw[it.key()] : Json::object(), p);
        }
    }
    return out;
}

}  // namespace

const std::vector<std::string>& modes() {
    static const std::vector<std::string> m = {"rates", "evolve", "sweep", "master", "spectrum", "fit", "render"};
    return m;
}

Json resolve_config(const Json& raw_in, const std::string& mode) {
    if (std::find(modes().begin(), modes().end(), mode) == modes().end())
        throw ConfigError("/mode", "unknown mode '" + mode + "'");
    Json raw = raw_in;
    if (raw.is_object() && raw.contains("manifest_version") && raw.contains("config")) raw = raw["config"];
    if (!raw.is_object()) throw ConfigError("/", "config must be a JSON object");
    if (raw.contains("schema_version")) {
        if (!raw["schema_version"].is_number_integer() || raw["schema_version"].get<int>() != schema_version)
            throw ConfigError("/schema_version", "unsupported schema version, expected " +
                                                     std::to_string(schema_version));
    }
    if (raw.contains("mode") && !raw["mode"].is_null()) {
        if (!raw["mode"].is_string()) throw ConfigError("/mode", "expected a string");
        if (raw["mode"].get<std::string>() != mode)
            throw ConfigError("/mode", "config is for '" + raw["mode"].get<std::string>() + "' but the subcommand is '" +
                                           mode + "'");
    }
    Json full = resolve_block(schema(), raw, "");
    full["mode"] = mode;

    // cross-field checks
    const auto& sw = full["sweep"];
    if (sw["delta_max"].get<double>() < sw["delta_min"].get<double>())
        throw ConfigError("/sweep/delta_max", "must be >= delta_min");
    const auto& w = full["fit"]["window_ms"];
    if (w.size() != 2 || w[1].get<double>() <= w[0].get<double>())
        throw ConfigError("/fit/window_ms", "expected [t_min, t_max] with t_max > t_min");
    if (full["model"]["q_grid"].get<int>() % 6 != 0)
        throw ConfigError("/model/q_grid", "must be a multiple of 6");
    if (full["master"]["register"].empty()) throw ConfigError("/master/register", "register is empty");
    if (full["master"]["register"].size() > 6) throw ConfigError("/master/register", "at most 6 sites");
    for (const auto& m : full["fit"]["candidates"])
        if (m.get<int>() < 1) throw ConfigError("/fit/candidates", "array sizes must be >= 1");

    // only the blocks this mode reads are kept
    static const std::vector<std::string> common = {"schema_version", "mode", "lattice", "drive", "model", "output"};
    Json out = Json::object();
    for (const auto& k : common) out[k] = full[k];
    if (mode != "rates" && mode != "evolve") out[mode] = full[mode];
    return out;
}

Json load_config(const std::string& path, const std::string& mode) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("/", "cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    Json raw;
    try {
        raw = Json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("/", std::string("malformed JSON: ") + e.what());
    }
    return resolve_config(raw, mode);
}

}  // namespace mwqed::cli
