// SPDX-License-Identifier: Apache-2.0
#include "mustructure/config.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mustructure {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
    throw Error(ErrorKind::ConfigError, where + ": " + msg);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(where, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) fail(where, "unknown key \"" + it.key() + "\"");
}

const json& required(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) fail(where, std::string("missing key \"") + key + "\"");
    return j.at(key);
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) fail(where, "expected an integer");
    return j.get<int>();
}

std::string text(const json& j, const std::string& where) {
    if (!j.is_string()) fail(where, "expected a string");
    return j.get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& where) {
    if (!j.is_array()) fail(where, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], where + "[" + std::to_string(k) + "]"));
    return out;
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const json& j, const std::string& where) {
    const auto v = numbers(j, where);
    if (static_cast<int>(v.size()) != N) fail(where, "expected " + std::to_string(N) + " numbers");
    Eigen::Matrix<double, N, 1> out;
    for (int k = 0; k < N; ++k) out[k] = v[k];
    return out;
}

ShapeSpec shape(const json& j, const std::string& where) {
    ShapeSpec s;
    const std::string type = text(required(j, where, "type"), where + ".type");
    if (type == "interval") {
        only_keys(j, where, {"type", "a", "b"});
        s.kind = ShapeKind::Interval;
        s.a = number(required(j, where, "a"), where + ".a");
        s.b = number(required(j, where, "b"), where + ".b");
    } else if (type == "rectangle") {
        only_keys(j, where, {"type", "lo", "hi"});
        s.kind = ShapeKind::Rectangle;
        s.lo = vec<2>(required(j, where, "lo"), where + ".lo");
        s.hi = vec<2>(required(j, where, "hi"), where + ".hi");
    } else if (type == "polygon") {
        only_keys(j, where, {"type", "vertices"});
        s.kind = ShapeKind::Polygon;
        const json& v = required(j, where, "vertices");
        if (!v.is_array()) fail(where + ".vertices", "expected an array");
        for (std::size_t k = 0; k < v.size(); ++k) s.vertices.push_back(vec<2>(v[k], where + ".vertices[" + std::to_string(k) + "]"));
    } else if (type == "disc") {
        only_keys(j, where, {"type", "center", "radius"});
        s.kind = ShapeKind::Disc;
        if (j.contains("center")) s.center = vec<2>(j.at("center"), where + ".center");
        s.radius = number(required(j, where, "radius"), where + ".radius");
    } else {
        fail(where + ".type", "unknown shape \"" + type + "\"");
    }
    return s;
}

ComponentSpec component(const json& j, const std::string& where) {
    only_keys(j, where, {"id", "dim", "origin", "tangents", "shape", "density_expr", "boundary"});
    ComponentSpec c;
    c.id = integer(required(j, where, "id"), where + ".id");
    c.dim = integer(required(j, where, "dim"), where + ".dim");
    if (j.contains("origin")) c.origin = vec<3>(j.at("origin"), where + ".origin");
    const json& t = required(j, where, "tangents");
    if (!t.is_array()) fail(where + ".tangents", "expected an array of vectors");
    for (std::size_t k = 0; k < t.size(); ++k) c.tangents.push_back(vec<3>(t[k], where + ".tangents[" + std::to_string(k) + "]"));
    c.shape = shape(required(j, where, "shape"), where + ".shape");
    if (j.contains("density_expr")) c.density_expr = text(j.at("density_expr"), where + ".density_expr");
    if (j.contains("boundary")) {
        const json& b = j.at("boundary");
        if (b.is_string()) {
            const std::string mode = b.get<std::string>();
            if (mode == "all")
                c.boundary.mode = BoundarySpec::Mode::All;
            else if (mode == "none")
                c.boundary.mode = BoundarySpec::Mode::None;
            else
                fail(where + ".boundary", "expected \"all\", \"none\" or a list of vertex indices");
        } else if (b.is_array()) {
            c.boundary.mode = BoundarySpec::Mode::Listed;
            for (std::size_t k = 0; k < b.size(); ++k) c.boundary.vertices.push_back(integer(b[k], where + ".boundary"));
        } else {
            fail(where + ".boundary", "expected \"all\", \"none\" or a list of vertex indices");
        }
    }
    return c;
}

// A single string applies to every component; an object maps component ids
// (as strings) to expressions and must cover every component.
std::vector<std::string> per_component(const json& j, const std::string& where, const std::vector<ComponentSpec>& comps) {
    std::vector<std::string> out;
    if (j.is_string()) {
        out.assign(comps.size(), j.get<std::string>());
        return out;
    }
    if (!j.is_object()) fail(where, "expected a string or an object keyed by component id");
    std::map<std::string, std::string> by_id;
    for (auto it = j.begin(); it != j.end(); ++it) by_id[it.key()] = text(it.value(), where + "." + it.key());
    for (const ComponentSpec& c : comps) {
        const auto it = by_id.find(std::to_string(c.id));
        if (it == by_id.end()) fail(where, "no expression for component " + std::to_string(c.id));
        out.push_back(it->second);
        by_id.erase(it);
    }
    if (!by_id.empty()) fail(where, "unknown component id \"" + by_id.begin()->first + "\"");
    return out;
}

void check_sweep(const std::vector<double>& v, const std::string& where) {
    if (v.empty()) fail(where, "expected at least one value");
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!(v[k] > 0.0)) fail(where, "values must be positive");
        if (k > 0 && !(v[k] < v[k - 1])) fail(where, "values must be strictly decreasing");
    }
}

}  // namespace

RunConfig parse_config(const std::string& src) {
    json j;
    try {
        j = json::parse(src);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::ConfigError, std::string("invalid JSON: ") + e.what());
    }
    only_keys(j, "config", {"components", "mesh", "coefficients", "rhs_expr", "manufactured_expr", "solver", "verify", "seed"});
    RunConfig cfg;

    const json& comps = required(j, "config", "components");
    if (!comps.is_array() || comps.empty()) fail("components", "expected a nonempty array");
    for (std::size_t k = 0; k < comps.size(); ++k) cfg.structure.components.push_back(component(comps[k], "components[" + std::to_string(k) + "]"));
    std::set<int> ids;
    for (const auto& c : cfg.structure.components)
        if (!ids.insert(c.id).second) fail("components", "duplicate id " + std::to_string(c.id));

    const json& mesh = required(j, "config", "mesh");
    only_keys(mesh, "mesh", {"h"});
    const json& h = required(mesh, "mesh", "h");
    cfg.hs = h.is_array() ? numbers(h, "mesh.h") : std::vector<double>{number(h, "mesh.h")};
    check_sweep(cfg.hs, "mesh.h");
    cfg.structure.h = cfg.hs.back();

    if (j.contains("coefficients")) {
        const json& b = j.at("coefficients");
        only_keys(b, "coefficients", {"b11", "b12", "b13", "b21", "b22", "b23", "b31", "b32", "b33"});
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                const std::string key = "b" + std::to_string(r + 1) + std::to_string(c + 1);
                std::string& slot = cfg.coefficients[3 * r + c];
                if (b.contains(key))
                    slot = text(b.at(key), "coefficients." + key);
                else if (r > c)
                    slot.clear();  // lower triangle defaults to the upper one
                else
                    fail("coefficients", "missing upper-triangle entry " + key);
            }
    }

    if (j.contains("rhs_expr")) cfg.rhs = per_component(j.at("rhs_expr"), "rhs_expr", cfg.structure.components);
    if (j.contains("manufactured_expr"))
        cfg.manufactured = per_component(j.at("manufactured_expr"), "manufactured_expr", cfg.structure.components);
    if (cfg.has_rhs() && cfg.has_manufactured()) fail("config", "give either rhs_expr or manufactured_expr, not both");

    if (j.contains("solver")) {
        const json& s = j.at("solver");
        only_keys(s, "solver", {"tol", "maxiter", "compat_tol"});
        if (s.contains("tol")) cfg.solver.tol = number(s.at("tol"), "solver.tol");
        if (s.contains("maxiter")) cfg.solver.maxiter = integer(s.at("maxiter"), "solver.maxiter");
        if (s.contains("compat_tol")) cfg.solver.compat_tol = number(s.at("compat_tol"), "solver.compat_tol");
        if (!(cfg.solver.tol > 0.0) || cfg.solver.maxiter < 0 || !(cfg.solver.compat_tol >= 0.0))
            fail("solver", "tolerances must be positive and maxiter nonnegative");
    }

    if (j.contains("verify")) {
        const json& v = j.at("verify");
        only_keys(v, "verify", {"axis", "junction", "penalties", "dq_steps", "dq_margin", "h2_levels", "h2_margin", "continuity_levels",
                                "relax_cases", "poincare_samples", "second_order_fields"});
        VerifyConfig& vc = cfg.verify;
        if (v.contains("axis")) vc.axis = text(v.at("axis"), "verify.axis");
        if (vc.axis != "x" && vc.axis != "y" && vc.axis != "z") fail("verify.axis", "expected \"x\", \"y\" or \"z\"");
        if (v.contains("junction")) vc.junction = integer(v.at("junction"), "verify.junction");
        if (v.contains("penalties")) vc.penalties = numbers(v.at("penalties"), "verify.penalties");
        if (v.contains("dq_steps")) vc.dq_steps = numbers(v.at("dq_steps"), "verify.dq_steps");
        if (v.contains("dq_margin")) vc.dq_margin = number(v.at("dq_margin"), "verify.dq_margin");
        if (v.contains("h2_levels")) vc.h2_levels = numbers(v.at("h2_levels"), "verify.h2_levels");
        if (v.contains("h2_margin")) vc.h2_margin = number(v.at("h2_margin"), "verify.h2_margin");
        if (v.contains("continuity_levels")) vc.continuity_levels = numbers(v.at("continuity_levels"), "verify.continuity_levels");
        if (v.contains("relax_cases")) vc.relax_cases = integer(v.at("relax_cases"), "verify.relax_cases");
        if (v.contains("poincare_samples")) vc.poincare_samples = integer(v.at("poincare_samples"), "verify.poincare_samples");
        if (v.contains("second_order_fields")) vc.second_order_fields = integer(v.at("second_order_fields"), "verify.second_order_fields");
        check_sweep(vc.dq_steps, "verify.dq_steps");
        check_sweep(vc.h2_levels, "verify.h2_levels");
        check_sweep(vc.continuity_levels, "verify.continuity_levels");
        for (double p : vc.penalties)
            if (!(p > 0.0)) fail("verify.penalties", "values must be positive");
    }

    if (j.contains("seed")) {
        const json& s = j.at("seed");
        if (!s.is_number_unsigned()) fail("seed", "expected a nonnegative integer");
        cfg.seed = s.get<unsigned>();
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace mustructure
