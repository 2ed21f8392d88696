#include "stretchopt/io/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace stretchopt::io {

using nlohmann::json;

namespace {

int line_of(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

double number(const std::string& key, const json& v) {
    if (!v.is_number()) throw ConfigError(key, "expected a number");
    return v.get<double>();
}

int integer(const std::string& key, const json& v) {
    if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
    const auto x = v.get<long long>();
    if (x < -1000000000LL || x > 1000000000LL) throw ConfigError(key, "integer out of range");
    return static_cast<int>(x);
}

bool boolean(const std::string& key, const json& v) {
    if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
    return v.get<bool>();
}

std::string string(const std::string& key, const json& v) {
    if (!v.is_string()) throw ConfigError(key, "expected a string");
    return v.get<std::string>();
}

using Setter = std::function<void(RunConfig&, const std::string&, const json&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
#define NUM(name) t[#name] = [](RunConfig& c, const std::string& k, const json& v) { c.name = number(k, v); }
#define INT(name) t[#name] = [](RunConfig& c, const std::string& k, const json& v) { c.name = integer(k, v); }
#define BOOL(name) t[#name] = [](RunConfig& c, const std::string& k, const json& v) { c.name = boolean(k, v); }
        INT(nx); INT(ny); NUM(h);
        NUM(A10); NUM(A01); NUM(K);
        NUM(u_bar); NUM(alpha);
        NUM(energy_limit); NUM(volume_fraction); NUM(energy_p); NUM(c_eta); NUM(c_init); BOOL(failure_constraint); NUM(failure_exponent);
        NUM(beta); NUM(composite_p); NUM(rho_min); NUM(beta1); NUM(x0); NUM(pl); NUM(eps); BOOL(symmetric);
        INT(n_components); INT(degree); NUM(w_min); NUM(w_max); NUM(layout_jitter);
        NUM(move_limit); INT(max_iterations); NUM(change_tol); INT(converge_window); INT(max_rejections);
        BOOL(warmstart); INT(warmstart_iterations); NUM(warmstart_move); NUM(warmstart_filter);
        BOOL(identify); INT(identify_iterations);
        NUM(fd_step);
#undef NUM
#undef INT
#undef BOOL
        t["load"] = [](RunConfig& c, const std::string& k, const json& v) {
            try {
                c.load = pbc::parse_load_kind(string(k, v));
            } catch (const std::invalid_argument&) {
                throw ConfigError(k, "expected uniaxial, biaxial or shear");
            }
        };
        t["n_load_steps"] = [](RunConfig& c, const std::string& k, const json& v) { c.solver.n_load_steps = integer(k, v); };
        t["newton_tol"] = [](RunConfig& c, const std::string& k, const json& v) { c.solver.newton_tol = number(k, v); };
        t["max_newton_iters"] = [](RunConfig& c, const std::string& k, const json& v) { c.solver.max_newton_iters = integer(k, v); };
        t["max_cutbacks"] = [](RunConfig& c, const std::string& k, const json& v) { c.solver.max_cutbacks = integer(k, v); };
        t["seed"] = [](RunConfig& c, const std::string& k, const json& v) {
            if (!v.is_number_unsigned()) throw ConfigError(k, "expected a non-negative integer");
            c.seed = v.get<std::uint64_t>();
        };
        t["output_dir"] = [](RunConfig& c, const std::string& k, const json& v) { c.output_dir = string(k, v); };
        t["initial_design"] = [](RunConfig& c, const std::string& k, const json& v) { c.initial_design = string(k, v); };
        return t;
    }();
    return table;
}

}  // namespace

RunConfig parse_config_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigParseError(line_of(text, e.byte > 0 ? e.byte - 1 : 0), e.what());
    }
    if (!doc.is_object()) throw ConfigParseError(1, "top level must be a JSON object");
    RunConfig cfg;
    const auto& table = setters();
    for (const auto& [key, value] : doc.items()) {
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError(key, "unknown key");
        it->second(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_string(ss.str());
}

std::string config_to_json(const RunConfig& c) {
    json j = json::object();
    j["nx"] = c.nx; j["ny"] = c.ny; j["h"] = c.h;
    j["A10"] = c.A10; j["A01"] = c.A01; j["K"] = c.K;
    j["load"] = pbc::to_string(c.load); j["u_bar"] = c.effective_u_bar(); j["alpha"] = c.alpha;
    j["energy_limit"] = c.energy_limit; j["volume_fraction"] = c.volume_fraction; j["energy_p"] = c.energy_p;
    j["c_eta"] = c.c_eta; j["c_init"] = c.c_init; j["failure_constraint"] = c.failure_constraint;
    j["failure_exponent"] = c.failure_exponent;
    j["beta"] = c.beta; j["composite_p"] = c.composite_p; j["rho_min"] = c.rho_min; j["beta1"] = c.beta1;
    j["x0"] = c.x0; j["pl"] = c.pl; j["eps"] = c.eps; j["symmetric"] = c.symmetric;
    j["n_components"] = c.n_components; j["degree"] = c.degree; j["w_min"] = c.w_min; j["w_max"] = c.w_max;
    j["layout_jitter"] = c.layout_jitter;
    j["move_limit"] = c.move_limit; j["max_iterations"] = c.max_iterations; j["change_tol"] = c.change_tol;
    j["converge_window"] = c.converge_window; j["max_rejections"] = c.max_rejections;
    j["warmstart"] = c.warmstart; j["warmstart_iterations"] = c.warmstart_iterations;
    j["warmstart_move"] = c.warmstart_move; j["warmstart_filter"] = c.warmstart_filter;
    j["identify"] = c.identify; j["identify_iterations"] = c.identify_iterations;
    j["n_load_steps"] = c.solver.n_load_steps; j["newton_tol"] = c.solver.newton_tol;
    j["max_newton_iters"] = c.solver.max_newton_iters; j["max_cutbacks"] = c.solver.max_cutbacks;
    j["fd_step"] = c.fd_step; j["seed"] = c.seed; j["output_dir"] = c.output_dir;
    j["initial_design"] = c.initial_design;
    return j.dump(2) + "\n";
}

}  // namespace stretchopt::io
