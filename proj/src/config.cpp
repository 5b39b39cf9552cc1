#include "memodiff/error.hpp"
#include "memodiff/experiments.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace memodiff {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
    throw Error(ErrorCode::ConfigInvalid, field + ": " + msg);
}

const json* find(const json& j, const char* key) {
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double number(const json& j, const char* key, const std::string& path, double fallback) {
    const json* v = find(j, key);
    if (v == nullptr) return fallback;
    if (!v->is_number()) fail(path + "." + key, "expected a number");
    return v->get<double>();
}

double required_number(const json& j, const char* key, const std::string& path) {
    if (find(j, key) == nullptr) fail(path + "." + key, "missing");
    return number(j, key, path, 0.0);
}

int integer(const json& j, const char* key, const std::string& path, int fallback) {
    const json* v = find(j, key);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer()) fail(path + "." + key, "expected an integer");
    return v->get<int>();
}

std::string text(const json& j, const char* key, const std::string& path, const std::string& fallback) {
    const json* v = find(j, key);
    if (v == nullptr) return fallback;
    if (!v->is_string()) fail(path + "." + key, "expected a string");
    return v->get<std::string>();
}

std::vector<double> numbers(const json& j, const char* key, const std::string& path) {
    const json* v = find(j, key);
    if (v == nullptr) return {};
    if (!v->is_array()) fail(path + "." + key, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_number()) fail(path + "." + key + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back((*v)[i].get<double>());
    }
    return out;
}

const json& section(const json& root, const char* key) {
    static const json empty = json::object();
    const json* v = find(root, key);
    if (v == nullptr) return empty;
    if (!v->is_object()) fail(key, "expected an object");
    return *v;
}

AcDensity parse_density(const json& j, const std::string& type, const std::string& path) {
    if (type == "fractional") {
        return Fractional{number(j, "alpha", path, 0.5), number(j, "weight", path, number(j, "mass", path, 1.0))};
    }
    if (type == "exponential") return Exponential{number(j, "beta", path, 1.0), number(j, "mass", path, 1.0)};
    if (type == "mollified") {
        return Mollified{number(j, "mass", path, 1.0), required_number(j, "tau", path), required_number(j, "eps", path)};
    }
    if (type == "tabulated") return Tabulated{numbers(j, "grid", path), numbers(j, "values", path)};
    fail(path + ".type", "unknown density type '" + type + "'");
}

MeasureKernel parse_kernel(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    const std::string type = text(j, "type", path, "none");
    const double tau_max = number(j, "tau_max", path, 0.0);
    MeasureKernel k;
    if (type == "none") {
        k = no_memory(tau_max > 0.0 ? tau_max : 1.0);
    } else if (type == "atom") {
        k = atom_kernel(required_number(j, "tau", path), number(j, "mass", path, 1.0));
        if (tau_max > 0.0) k.tau_max = tau_max;
    } else if (type == "mixed") {
        const json* comps = find(j, "components");
        if (comps == nullptr || !comps->is_array()) fail(path + ".components", "expected an array of kernel blocks");
        AcDensity ac = NoDensity{};
        std::vector<Atom> atoms;
        double support = 0.0;
        for (std::size_t i = 0; i < comps->size(); ++i) {
            const std::string sub = path + ".components[" + std::to_string(i) + "]";
            const MeasureKernel part = parse_kernel((*comps)[i], sub);
            if (part.has_density()) {
                if (!std::holds_alternative<NoDensity>(ac)) fail(sub, "at most one density component is allowed");
                ac = part.ac;
            }
            atoms.insert(atoms.end(), part.atoms.begin(), part.atoms.end());
            if (!part.is_zero()) support = std::max(support, part.tau_max);
        }
        k = mixed_kernel(ac, atoms, tau_max > 0.0 ? tau_max : support);
    } else {
        if (type == "mollified") {
            const double mass = number(j, "mass", path, 1.0);
            k = mollify_delay(mass, required_number(j, "tau", path), required_number(j, "eps", path));
        } else {
            const AcDensity ac = parse_density(j, type, path);
            double support = tau_max;
            if (support <= 0.0) {
                if (const auto* tab = std::get_if<Tabulated>(&ac); tab != nullptr && !tab->grid.empty()) {
                    support = tab->grid.back();
                } else {
                    fail(path + ".tau_max", "required for " + type + " kernels");
                }
            }
            k = mixed_kernel(ac, {}, support);
        }
    }
    try {
        validate(k);
    } catch (const Error& e) {
        fail(path, e.what());
    }
    return k;
}

CoefficientSpec parse_coefficient(const json& j, const std::string& path) {
    CoefficientSpec c;
    if (j.is_number()) {
        c.c0 = j.get<double>();
        return c;
    }
    if (!j.is_object()) fail(path, "expected a number or an object");
    const std::string type = text(j, "type", path, "constant");
    if (type == "constant") {
        c.c0 = number(j, "value", path, 1.0);
    } else if (type == "linear") {
        c.c0 = number(j, "c0", path, 1.0);
        c.c1 = number(j, "c1", path, 0.0);
    } else {
        fail(path + ".type", "unknown coefficient type '" + type + "'");
    }
    return c;
}

FieldSpec parse_field(const json& j, const std::string& path, const std::vector<std::string>& allowed,
                      const FieldSpec& fallback) {
    if (j.empty()) return fallback;
    FieldSpec f;
    f.type = text(j, "type", path, fallback.type);
    if (std::find(allowed.begin(), allowed.end(), f.type) == allowed.end()) {
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : "|") + a;
        fail(path + ".type", "'" + f.type + "' is not one of " + list);
    }
    f.amplitude = number(j, "amplitude", path, 1.0);
    f.mode = integer(j, "mode", path, 1);
    if (f.mode < 1) fail(path + ".mode", "must be a positive integer");
    f.rate = number(j, "rate", path, 0.0);
    f.times = numbers(j, "times", path);
    f.values = numbers(j, "values", path);
    if (f.type == "tabulated") {
        if (f.times.size() < 2 || f.times.size() != f.values.size()) {
            fail(path, "tabulated data needs matching 'times' and 'values' with at least 2 entries");
        }
        for (std::size_t i = 1; i < f.times.size(); ++i) {
            if (!(f.times[i] > f.times[i - 1])) fail(path + ".times", "must be strictly increasing");
        }
    }
    return f;
}

} // namespace

MeasureKernel parse_kernel_block(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigInvalid, std::string("kernel block: ") + e.what());
    }
    return parse_kernel(j, "kernel");
}

Scenario parse_scenario(const std::string& text_in, const std::string& source) {
    json root;
    try {
        root = json::parse(text_in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigInvalid, source + ": " + e.what());
    }
    if (!root.is_object()) fail(source, "top level must be an object");

    Scenario s;
    s.source = source;
    const json& domain = section(root, "domain");
    s.length = number(domain, "L", "domain", 1.0);
    s.n_elements = integer(domain, "n_elements", "domain", 32);
    if (!(s.length > 0.0)) fail("domain.L", "must be positive");
    if (s.n_elements < 2) fail("domain.n_elements", "must be at least 2");

    const json& coeffs = section(root, "coefficients");
    if (const json* a = find(coeffs, "a0")) s.a0 = parse_coefficient(*a, "coefficients.a0");
    if (const json* a = find(coeffs, "a1")) s.a1 = parse_coefficient(*a, "coefficients.a1");

    const json& time = section(root, "time");
    s.T = number(time, "T", "time", 1.0);
    s.dt = number(time, "dt", "time", 1e-2);
    if (!(s.T > 0.0)) fail("time.T", "must be positive");
    if (!(s.dt > 0.0)) fail("time.dt", "must be positive");

    if (const json* k = find(root, "kernel")) s.kernel = parse_kernel(*k, "kernel");
    else s.kernel = no_memory(s.T);

    s.forcing = parse_field(section(root, "forcing"), "forcing", {"zero", "eigenmode", "manufactured", "tabulated"},
                            FieldSpec{"zero"});
    s.initial = parse_field(section(root, "initial"), "initial", {"zero", "eigenmode", "constant"},
                            FieldSpec{"eigenmode"});
    s.history = parse_field(section(root, "history"), "history", {"zero", "constant", "tabulated"},
                            FieldSpec{"constant"});

    const json& exp = section(root, "experiment");
    s.experiment = text(exp, "name", "experiment", "solve");
    static const std::vector<std::string> names{"solve",     "vanishing_memory", "memory_to_delay",
                                                "kernel_stability", "longtime", "prototype_ode",
                                                "two_path_crosscheck", "positive_type"};
    if (std::find(names.begin(), names.end(), s.experiment) == names.end()) {
        fail("experiment.name", "unknown experiment '" + s.experiment + "'");
    }
    s.levels = integer(exp, "levels", "experiment", s.levels);
    if (const auto eps = numbers(exp, "eps_fractions", "experiment"); !eps.empty()) s.eps_fractions = eps;
    s.ensemble = integer(exp, "ensemble", "experiment", s.ensemble);
    s.safety = number(exp, "safety", "experiment", s.safety);
    s.picard_tol = number(exp, "picard_tol", "experiment", s.picard_tol);
    s.crosscheck_tol = number(exp, "tolerance", "experiment", s.crosscheck_tol);
    s.oracle_tol = number(exp, "oracle_tol", "experiment", s.oracle_tol);
    s.min_checkpoint_steps = integer(exp, "min_checkpoint_steps", "experiment", s.min_checkpoint_steps);
    s.ode_alpha = number(exp, "alpha", "experiment", s.ode_alpha);
    s.ode_m = number(exp, "m", "experiment", s.ode_m);
    s.ode_tau = number(exp, "tau", "experiment", s.ode_tau);
    s.ode_T = number(exp, "T", "experiment", s.ode_T);
    s.ode_dt = number(exp, "dt", "experiment", s.ode_dt);
    s.bernstein_nodes = integer(exp, "bernstein_nodes", "experiment", s.bernstein_nodes);
    s.bernstein_t_lo = number(exp, "bernstein_t_lo", "experiment", s.bernstein_t_lo);
    if (const json* pairs = find(exp, "pairs")) {
        if (!pairs->is_array()) fail("experiment.pairs", "expected an array");
        for (std::size_t i = 0; i < pairs->size(); ++i) {
            const std::string p = "experiment.pairs[" + std::to_string(i) + "]";
            const json& pj = (*pairs)[i];
            if (!pj.is_object() || find(pj, "first") == nullptr || find(pj, "second") == nullptr) {
                fail(p, "expected {\"first\": kernel, \"second\": kernel}");
            }
            s.pairs.push_back({parse_kernel(pj["first"], p + ".first"), parse_kernel(pj["second"], p + ".second")});
        }
    }
    if (s.levels < 3) fail("experiment.levels", "a slope fit needs at least 3 levels");

    s.output_directory = text(section(root, "output"), "directory", "output", "");
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string());
}

} // namespace memodiff
