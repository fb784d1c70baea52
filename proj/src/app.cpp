// SPDX-License-Identifier: Apache-2.0
#include "mustructure/app.hpp"

#include "mustructure/kernels.hpp"
#include "mustructure/suites.hpp"
#include "mustructure/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

namespace mustructure::app {

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::SyntaxError:
        case ErrorKind::UnknownIdentifier:
        case ErrorKind::ConfigError:
        case ErrorKind::IoError:
            return kExitInput;
        case ErrorKind::IncompatibleRHS:
            return kExitIncompatible;
        case ErrorKind::NoConvergence:
        case ErrorKind::EigenFailure:
            return kExitNoConvergence;
        default:
            return kExitValidation;
    }
}

const std::vector<std::string>& check_names() {
    static const std::vector<std::string> names{"trace", "dq", "h2", "continuity", "poincare", "relax", "second-order"};
    return names;
}

namespace {

using nlohmann::json;

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16g", v);
    return buf;
}

const char* shape_name(ShapeKind k) {
    switch (k) {
        case ShapeKind::Interval: return "interval";
        case ShapeKind::Rectangle: return "rectangle";
        case ShapeKind::Polygon: return "polygon";
        case ShapeKind::Disc: return "disc";
    }
    return "unknown";
}

json structure_json(const Structure& s) {
    json comps = json::array();
    for (std::size_t c = 0; c < s.components.size(); ++c) {
        const Component& k = s.components[c];
        comps.push_back({{"id", k.id},
                         {"dim", k.dim},
                         {"shape", shape_name(k.kind)},
                         {"measure", k.measure()},
                         {"density", k.density_text},
                         {"min_density", k.min_density},
                         {"nodes", s.meshes[c].nodes.size()},
                         {"cells", s.meshes[c].cells.size()}});
    }
    json juncs = json::array();
    for (const Junction& J : s.junctions) {
        juncs.push_back({{"components", json::array({s.components[J.ci].id, s.components[J.cj].id})},
                         {"kind", J.is_segment ? "segment" : "point"},
                         {"coupled", J.coupled},
                         {"length", J.length()},
                         {"p0", vec_json(J.p0)},
                         {"p1", vec_json(J.p1)},
                         {"nodes", J.nodes_i.size()}});
    }
    return {{"h", s.h}, {"components", comps}, {"junctions", juncs}};
}

json groups_json(const KernelGroups& g, const Structure& s) {
    json out = json::array();
    for (int k = 0; k < g.d(); ++k) out.push_back(g.member_ids(k, s));
    return out;
}

json relaxation_json(const RelaxedField& R, const Structure& s) {
    json lip = json::array();
    for (std::size_t c = 0; c < s.components.size(); ++c) lip.push_back({{"component", s.components[c].id}, {"value", R.lipschitz[c]}});
    return {{"lambda", R.lambda}, {"tangential_min", R.tangential_min}, {"lipschitz", lip}};
}

// A validated problem: structure at the finest mesh size, coefficient field,
// load and (optionally) the exact solution, plus per-h cached solves.
struct Level {
    std::shared_ptr<const Structure> s;
    SpacePtr space;
    RelaxedField R;
    LinearSystem sys;
    std::optional<CompatibilityReport> compat;
    std::optional<SolveResult> res;
};

class Problem {
public:
    explicit Problem(const RunConfig& cfg) : cfg_(cfg) {
        finest_ = std::make_shared<const Structure>(build_structure(cfg.structure));
        B_ = MatrixField::parse(cfg.coefficients);
        if (cfg.has_manufactured()) {
            for (const std::string& t : cfg.manufactured) exact_.push_back(expr::parse(t));
            f_ = derive_manufactured(*finest_, B_, exact_).rhs;
        } else if (cfg.has_rhs()) {
            for (const std::string& t : cfg.rhs) f_.push_back(expr::parse(t));
        }
    }

    const RunConfig& cfg() const { return cfg_; }
    const Structure& finest() const { return *finest_; }
    double finest_h() const { return cfg_.hs.back(); }
    const MatrixField& B() const { return B_; }
    bool has_load() const { return !f_.empty(); }
    bool has_exact() const { return !exact_.empty(); }
    const std::vector<expr::Expr>& exact() const { return exact_; }
    const std::vector<expr::Expr>& load() const { return f_; }

    void require_load(const std::string& what) const {
        if (!has_load()) throw Error(ErrorKind::ConfigError, what + " needs rhs_expr or manufactured_expr");
    }

    std::shared_ptr<const Structure> structure_at(double h) const {
        if (h == finest_h()) return finest_;
        StructureSpec spec = cfg_.structure;
        spec.h = h;
        return std::make_shared<const Structure>(build_structure(spec));
    }

    /// Assembled system at mesh size h (zero load if none is configured).
    Level& system(double h) {
        auto& slot = cache_[h];
        if (slot) return *slot;
        auto L = std::make_unique<Level>();
        L->s = structure_at(h);
        L->space = make_space(L->s);
        L->R = relax(B_, *L->space);
        std::vector<expr::Expr> f = f_;
        if (f.empty()) f.assign(L->s->components.size(), expr::Expr::constant(0.0));
        L->sys = assemble(L->space, L->R, f);
        slot = std::move(L);
        return *slot;
    }

    /// Compatibility check and solve at mesh size h.
    Level& solved(double h) {
        require_load("solving");
        Level& L = system(h);
        if (L.res) return L;
        L.compat = compatibility_check(f_, *L.space, L.sys.groups, cfg_.solver.compat_tol);
        SolveOptions opt;
        opt.tol = cfg_.solver.tol;
        opt.maxiter = cfg_.solver.maxiter;
        L.res.emplace(solve_neumann(L.sys, opt));
        return L;
    }

private:
    const RunConfig& cfg_;
    std::shared_ptr<const Structure> finest_;
    MatrixField B_;
    std::vector<expr::Expr> exact_, f_;
    std::map<double, std::unique_ptr<Level>> cache_;
};

json solve_json(const Problem& p, const Level& L) {
    const SolveReport& r = L.res->report;
    json gaps = json::array();
    for (std::size_t j = 0; j < L.s->junctions.size(); ++j)
        if (L.s->junctions[j].coupled) gaps.push_back({{"junction", j}, {"l2", trace_gap(L.res->u, static_cast<int>(j))}});
    json out = {{"h", L.s->h},
                {"dofs", L.space->size()},
                {"iterations", r.iterations},
                {"relative_residual", r.relative_residual},
                {"energy", r.energy},
                {"group_means", r.group_means},
                {"rhs_shift", r.rhs_shift},
                {"compatibility", {{"residual", L.compat->residual}, {"tolerance", L.compat->tolerance}, {"measure", L.compat->measure}}},
                {"trace_gaps", gaps},
                {"l2_norm", l2mu_norm(L.res->u)}};
    if (p.has_exact()) {
        const ErrorNorms e = error_norms(L.res->u, p.exact(), L.sys.groups.members);
        out["errors"] = {{"l2", e.l2}, {"h1", e.h1}, {"h1_semi", e.h1_semi}, {"l2_exact", e.l2_exact}};
    }
    return out;
}

json base_report(const std::string& command, const RunConfig& cfg) {
    return {{"command", command}, {"seed", cfg.seed}, {"kernels", std::string(kernels::to_string(kernels::active().isa))}};
}

json load_json(const RunConfig& cfg) {
    if (cfg.has_manufactured()) return {{"kind", "manufactured"}, {"exact", cfg.manufactured}};
    if (cfg.has_rhs()) return {{"kind", "rhs"}, {"rhs", cfg.rhs}};
    return {{"kind", "none"}};
}

Outcome cmd_validate(const RunConfig& cfg) {
    Problem p(cfg);
    Level& L = p.system(p.finest_h());
    Outcome o;
    o.report = base_report("validate", cfg);
    o.report["status"] = "ok";
    o.report["structure"] = structure_json(*L.s);
    o.report["groups"] = groups_json(L.sys.groups, *L.s);
    o.report["relaxation"] = relaxation_json(L.R, *L.s);
    o.report["load"] = load_json(cfg);
    return o;
}

Outcome cmd_solve(const RunConfig& cfg) {
    Problem p(cfg);
    Level& L = p.solved(p.finest_h());
    Outcome o;
    o.report = base_report("solve", cfg);
    o.report["status"] = "ok";
    o.report["structure"] = structure_json(*L.s);
    o.report["groups"] = groups_json(L.sys.groups, *L.s);
    o.report["relaxation"] = relaxation_json(L.R, *L.s);
    o.report["load"] = load_json(cfg);
    o.report["solve"] = solve_json(p, L);
    std::ostringstream csv;
    write_csv(L.res->u, csv);
    o.solution_csv = csv.str();
    return o;
}

// Errors at rounding level relative to the size of the exact solution.
bool rounding_level(double e, double scale) { return e <= 1e-10 * std::max(1.0, scale); }

Outcome cmd_converge(const RunConfig& cfg) {
    if (!cfg.has_manufactured()) throw Error(ErrorKind::ConfigError, "converge needs manufactured_expr");
    if (cfg.hs.size() < 3) throw Error(ErrorKind::ConfigError, "converge needs at least three mesh sizes in mesh.h");
    Problem p(cfg);
    Outcome o;
    o.report = base_report("converge", cfg);
    o.report["load"] = load_json(cfg);
    json levels = json::array();
    std::ostringstream csv;
    csv << "h,l2_error,h1_error,l2_order,h1_order\n";
    double prev_h = 0.0;
    ErrorNorms prev;
    double min_l2 = std::numeric_limits<double>::infinity(), min_h1 = min_l2;
    bool exact_l2 = true, exact_h1 = true;
    for (std::size_t k = 0; k < cfg.hs.size(); ++k) {
        const double h = cfg.hs[k];
        Level& L = p.solved(h);
        const ErrorNorms e = error_norms(L.res->u, p.exact(), L.sys.groups.members);
        json row = {{"h", h}, {"l2_error", e.l2}, {"h1_error", e.h1}, {"dofs", L.space->size()}, {"iterations", L.res->report.iterations}};
        std::string l2o, h1o;
        auto order = [&](double ep, double en, double scale, bool& exact, double& mn, const char* key, std::string& cell) {
            if (rounding_level(ep, scale) && rounding_level(en, scale)) {
                cell = "exact";
                row[key] = "exact";
                return;
            }
            exact = false;
            const double q = std::log(ep / en) / std::log(prev_h / h);
            mn = std::min(mn, q);
            cell = num(q);
            row[key] = q;
        };
        if (k > 0) {
            order(prev.l2, e.l2, e.l2_exact, exact_l2, min_l2, "l2_order", l2o);
            order(prev.h1, e.h1, e.l2_exact, exact_h1, min_h1, "h1_order", h1o);
        } else {
            exact_l2 = rounding_level(e.l2, e.l2_exact);
            exact_h1 = rounding_level(e.h1, e.l2_exact);
        }
        csv << num(h) << ',' << num(e.l2) << ',' << num(e.h1) << ',' << l2o << ',' << h1o << '\n';
        levels.push_back(row);
        prev = e;
        prev_h = h;
    }
    o.report["levels"] = levels;
    o.report["min_l2_order"] = exact_l2 ? json("exact") : json(min_l2);
    o.report["min_h1_order"] = exact_h1 ? json("exact") : json(min_h1);
    o.report["status"] = "ok";
    o.rates_csv = csv.str();
    return o;
}

// ---------------------------------------------------------------- verify

struct Row {
    std::string detail;
    std::optional<double> h, norm, ratio;
    bool pass = true;
};

struct CheckResult {
    std::vector<Row> rows;
    json extra = json::object();
};

// Raised when a check does not apply to the configured structure.
struct Inapplicable {
    ErrorKind kind;
    std::string reason;
};

Vec3 axis_vector(const std::string& a) { return a == "x" ? Vec3(1, 0, 0) : a == "y" ? Vec3(0, 1, 0) : Vec3(0, 0, 1); }

void need_load(const Problem& p, const std::string& check) {
    if (!p.has_load()) throw Inapplicable{ErrorKind::ConfigError, check + " needs rhs_expr or manufactured_expr"};
}

CheckResult check_trace(Problem& p) {
    need_load(p, "trace");
    const Structure& s = p.finest();
    std::vector<int> coupled;
    for (std::size_t j = 0; j < s.junctions.size(); ++j)
        if (s.junctions[j].coupled) coupled.push_back(static_cast<int>(j));
    if (coupled.empty()) throw Inapplicable{ErrorKind::UncoupledJunction, "structure has no coupled junction"};
    const double h = p.finest_h();
    Level& L = p.solved(h);
    CheckResult out;
    for (int j : coupled) {
        const double gap = trace_gap(L.res->u, j);
        out.rows.push_back({"junction=" + std::to_string(j) + " conforming", h, gap, std::nullopt, gap == 0.0});
    }
    std::vector<std::vector<double>> gaps(coupled.size());
    SolveOptions opt;
    opt.tol = p.cfg().solver.tol;
    opt.maxiter = p.cfg().solver.maxiter;
    for (double kappa : p.cfg().verify.penalties) {
        const SolveResult r = penalty_solve(L.s, p.B(), p.load(), kappa, opt);
        for (std::size_t i = 0; i < coupled.size(); ++i) gaps[i].push_back(trace_gap(r.u, coupled[i]));
    }
    // A gap at rounding level means the broken solution is already
    // continuous (symmetric data); there is nothing left to decrease.
    const double floor = 1e-12 * std::max(1.0, L.res->u.values().cwiseAbs().maxCoeff());
    for (std::size_t i = 0; i < coupled.size(); ++i)
        for (std::size_t k = 0; k < gaps[i].size(); ++k) {
            const bool dec = k == 0 || gaps[i][k] < gaps[i][k - 1] || gaps[i][k] <= floor;
            std::optional<double> ratio;
            if (k > 0 && gaps[i][k - 1] > 0.0) ratio = gaps[i][k] / gaps[i][k - 1];
            out.rows.push_back({"junction=" + std::to_string(coupled[i]) + " kappa=" + num(p.cfg().verify.penalties[k]), h, gaps[i][k],
                                ratio, dec});
        }
    return out;
}

CheckResult check_dq(Problem& p) {
    need_load(p, "dq");
    const VerifyConfig& vc = p.cfg().verify;
    const double h = p.finest_h();
    const double margin = vc.dq_margin.value_or(std::max(vc.dq_steps.front(), 4.0 * h));
    TranslationSpec spec{axis_vector(vc.axis), 0.0, margin, vc.junction};
    try {
        translation_window(p.finest(), spec);
    } catch (const Error& e) {
        throw Inapplicable{e.kind(), e.what()};
    }
    Level& L = p.solved(h);
    const DqScan scan = dq_uniform_bound_scan(L.res->u, spec.axis, vc.dq_steps, margin, vc.junction);
    CheckResult out;
    double lo = std::numeric_limits<double>::infinity();
    for (const DqRow& r : scan.rows) lo = std::min(lo, r.grad_norm);
    for (const DqRow& r : scan.rows)
        out.rows.push_back({"step h_mesh=" + num(h), r.h, r.grad_norm, lo > 0.0 ? std::optional<double>(r.grad_norm / lo) : std::nullopt,
                            scan.pass});
    out.extra["ratio"] = scan.ratio;
    out.extra["margin"] = margin;
    if (p.has_exact()) {
        const double oracle = dq_limit_oracle(*L.s, p.exact(), spec);
        const double last = scan.rows.back().grad_norm;
        const bool ok = oracle > 0.0 ? std::abs(last / oracle - 1.0) <= 0.1 : last <= 1e-12;
        out.rows.push_back({"oracle", h, oracle, oracle > 0.0 ? std::optional<double>(last / oracle) : std::nullopt, ok});
        out.extra["oracle"] = oracle;
    }
    return out;
}

CheckResult check_h2(Problem& p) {
    need_load(p, "h2");
    const VerifyConfig& vc = p.cfg().verify;
    const double margin = vc.h2_margin.value_or(4.0 * vc.h2_levels.front());
    const Structure& s = p.finest();
    std::vector<int> comps;
    for (std::size_t c = 0; c < s.components.size(); ++c) {
        const Component& k = s.components[c];
        const bool box = k.kind == ShapeKind::Interval || k.kind == ShapeKind::Rectangle;
        if (!box) continue;
        bool nonempty = k.b - k.a > 2.0 * margin;
        if (k.dim == 2) {
            Vec2 lo = k.polygon.front(), hi = lo;
            for (const Vec2& v : k.polygon) {
                lo = lo.cwiseMin(v);
                hi = hi.cwiseMax(v);
            }
            nonempty = (hi - lo).minCoeff() > 2.0 * margin;
        }
        if (nonempty) comps.push_back(static_cast<int>(c));
    }
    if (comps.empty()) throw Inapplicable{ErrorKind::UnsupportedGeometry, "no interval or rectangle component with a nonempty window"};
    std::vector<std::vector<double>> totals(comps.size());
    std::vector<double> oracle(comps.size(), 0.0);
    for (double h : vc.h2_levels) {
        Level& L = p.solved(h);
        for (std::size_t i = 0; i < comps.size(); ++i)
            totals[i].push_back(h2_indicator(L.res->u, s.components[comps[i]].id, margin, h).total);
    }
    if (p.has_exact())
        for (std::size_t i = 0; i < comps.size(); ++i)
            oracle[i] = hessian_norm_oracle(s, s.components[comps[i]].id, p.exact()[comps[i]], margin);
    CheckResult out;
    json summary = json::array();
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const auto [lo, hi] = std::minmax_element(totals[i].begin(), totals[i].end());
        const double variation = *hi <= 1e-12 ? 0.0 : *hi / *lo - 1.0;
        bool ok = variation <= 0.05;
        std::vector<std::optional<double>> ratios;
        for (double t : totals[i]) {
            if (p.has_exact()) {
                if (oracle[i] > 0.0) {
                    ratios.push_back(t / oracle[i]);
                    ok = ok && std::abs(t / oracle[i] - 1.0) <= 0.1;
                } else {
                    ratios.push_back(std::nullopt);
                    ok = ok && t <= 1e-12;
                }
            } else {
                ratios.push_back(totals[i].front() > 0.0 ? std::optional<double>(t / totals[i].front()) : std::nullopt);
            }
        }
        const int id = s.components[comps[i]].id;
        for (std::size_t k = 0; k < totals[i].size(); ++k)
            out.rows.push_back({"component=" + std::to_string(id), vc.h2_levels[k], totals[i][k], ratios[k], ok});
        json entry = {{"component", id}, {"variation", variation}};
        if (p.has_exact()) entry["oracle"] = oracle[i];
        summary.push_back(entry);
    }
    out.extra["margin"] = margin;
    out.extra["components"] = summary;
    return out;
}

CheckResult check_continuity(Problem& p) {
    need_load(p, "continuity");
    const VerifyConfig& vc = p.cfg().verify;
    const Structure& s = p.finest();
    bool any_coupled = false, any_uncoupled = false;
    for (const Junction& J : s.junctions) (J.coupled ? any_coupled : any_uncoupled) = true;
    CheckResult out;
    std::vector<double> mods;
    for (double h : vc.continuity_levels) {
        Level& L = p.solved(h);
        const ContinuityReport rep = continuity_modulus(L.res->u);
        const double mod = *std::max_element(rep.modulus.begin(), rep.modulus.end());
        mods.push_back(mod);
        if (any_coupled) out.rows.push_back({"coupled-jump", h, rep.coupled_jump, std::nullopt, rep.coupled_jump == 0.0});
        if (any_uncoupled) out.rows.push_back({"uncoupled-jump", h, rep.uncoupled_jump, std::nullopt, true});
        out.rows.push_back({"modulus", h, mod, mod / h, true});
    }
    const double top = *std::max_element(mods.begin(), mods.end());
    LinearFit fit{0.0, 0.0, 1.0};
    if (top > 1e-14 && mods.size() >= 2) fit = linear_fit(vc.continuity_levels, mods);
    out.rows.push_back({"linear-fit", std::nullopt, fit.r2, fit.slope, fit.r2 >= 0.98});
    out.extra["fit"] = {{"intercept", fit.intercept}, {"slope", fit.slope}, {"r2", fit.r2}};
    return out;
}

CheckResult check_poincare(Problem& p) {
    const double h = p.finest_h();
    Level& L = p.system(h);
    CheckResult out;
    json groups = json::array();
    for (int k = 0; k < L.sys.groups.d(); ++k) {
        const PoincareEstimate est = poincare_constant(L.sys, k, p.cfg().seed);
        const PoincareSuiteReport suite = poincare_suite(L.sys, k, est.constant, p.cfg().verify.poincare_samples, p.cfg().seed + 1 + k);
        out.rows.push_back({"group=" + std::to_string(k), h, est.constant, suite.max_ratio, suite.pass});
        groups.push_back({{"group", k},
                          {"members", L.sys.groups.member_ids(k, *L.s)},
                          {"constant", est.constant},
                          {"lambda", est.lambda},
                          {"iterations", est.iterations},
                          {"samples", suite.samples},
                          {"max_ratio", suite.max_ratio}});
    }
    out.extra["groups"] = groups;
    return out;
}

CheckResult check_relax(Problem& p) {
    const RelaxSuiteReport r = relaxation_suite(p.cfg().verify.relax_cases, p.cfg().seed);
    CheckResult out;
    out.rows.push_back({"cases=" + std::to_string(r.cases) + " failures", std::nullopt, r.failures, std::nullopt, r.failures == 0});
    out.rows.push_back({"basis-independence", std::nullopt, r.basis_independence, std::nullopt, r.basis_independence <= 1e-10});
    out.rows.push_back({"annihilation", std::nullopt, r.annihilation, std::nullopt, r.annihilation <= 1e-9});
    out.rows.push_back({"variational", std::nullopt, r.variational, std::nullopt, r.variational <= 1e-8});
    out.rows.push_back({"worked-examples", std::nullopt, r.worked_examples ? 0.0 : 1.0, std::nullopt, r.worked_examples});
    // The configured field on the configured structure.
    const Level& L = p.system(p.finest_h());
    out.extra["structure_field"] = relaxation_json(L.R, *L.s);
    return out;
}

CheckResult check_second_order(Problem& p) {
    std::vector<std::string> fields;
    std::set<std::string> seen;
    for (const std::string& t : p.cfg().manufactured)
        if (seen.insert(t).second) fields.push_back(t);
    std::mt19937 rng(p.cfg().seed);
    for (int k = 0; k < p.cfg().verify.second_order_fields; ++k) fields.push_back(random_smooth_field(rng));
    CheckResult out;
    json residuals = json::array();
    for (std::size_t k = 0; k < fields.size(); ++k) {
        const double r = second_order_residual(expr::parse(fields[k]), p.finest(), 20, p.cfg().seed + static_cast<unsigned>(k));
        out.rows.push_back({"field=" + std::to_string(k), std::nullopt, r, std::nullopt, r <= 1e-10});
        residuals.push_back({{"field", fields[k]}, {"residual", r}});
    }
    out.extra["fields"] = residuals;
    return out;
}

CheckResult run_check(const std::string& name, Problem& p) {
    if (name == "trace") return check_trace(p);
    if (name == "dq") return check_dq(p);
    if (name == "h2") return check_h2(p);
    if (name == "continuity") return check_continuity(p);
    if (name == "poincare") return check_poincare(p);
    if (name == "relax") return check_relax(p);
    return check_second_order(p);
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

Outcome cmd_verify(const RunConfig& cfg, const std::string& check) {
    const auto& names = check_names();
    std::vector<std::string> selected;
    if (check == "all")
        selected = names;
    else if (std::find(names.begin(), names.end(), check) != names.end())
        selected = {check};
    else
        throw Error(ErrorKind::ConfigError, "unknown check \"" + check + "\"");

    Problem p(cfg);
    Outcome o;
    o.report = base_report("verify", cfg);
    o.report["check"] = check;
    o.report["load"] = load_json(cfg);
    json checks = json::object();
    std::vector<std::string> failing;
    std::ostringstream csv;
    csv << "check,detail,h,norm,ratio,pass\n";
    for (const std::string& name : selected) {
        CheckResult r;
        try {
            r = run_check(name, p);
        } catch (const Inapplicable& e) {
            if (check != "all") throw Error(e.kind, name + " does not apply: " + e.reason);
            checks[name] = {{"status", "skipped"}, {"reason", e.reason}};
            continue;
        }
        bool pass = true;
        json rows = json::array();
        for (const Row& row : r.rows) {
            pass = pass && row.pass;
            rows.push_back({{"detail", row.detail},
                            {"h", row.h ? json(*row.h) : json()},
                            {"norm", row.norm ? json(*row.norm) : json()},
                            {"ratio", row.ratio ? json(*row.ratio) : json()},
                            {"pass", row.pass}});
            csv << name << ',' << row.detail << ',' << opt_num(row.h) << ',' << opt_num(row.norm) << ',' << opt_num(row.ratio) << ','
                << (row.pass ? "true" : "false") << '\n';
        }
        json entry = r.extra;
        entry["status"] = pass ? "pass" : "fail";
        entry["rows"] = rows;
        checks[name] = entry;
        if (!pass) failing.push_back(name);
    }
    o.report["checks"] = checks;
    o.report["failing"] = failing;
    o.report["status"] = failing.empty() ? "ok" : "failed";
    o.verify_csv = csv.str();
    if (!failing.empty()) {
        o.exit_code = kExitVerification;
        std::string list;
        for (const std::string& f : failing) list += (list.empty() ? "" : ", ") + f;
        o.message = "verification failed: " + list;
    }
    return o;
}

Outcome error_outcome(const std::string& command, const RunConfig* cfg, ErrorKind kind, const std::string& what) {
    Outcome o;
    o.exit_code = exit_code_for(kind);
    o.report = {{"command", command}, {"status", "error"}, {"exit_code", o.exit_code}, {"error", {{"kind", to_string(kind)}, {"message", what}}}};
    if (cfg) o.report["seed"] = cfg->seed;
    o.message = what;
    return o;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
}

}  // namespace

Outcome execute(const std::string& command, const RunConfig& cfg, const std::string& check) {
    try {
        if (command == "validate") return cmd_validate(cfg);
        if (command == "solve") return cmd_solve(cfg);
        if (command == "converge") return cmd_converge(cfg);
        if (command == "verify") return cmd_verify(cfg, check);
        throw Error(ErrorKind::ConfigError, "unknown command \"" + command + "\"");
    } catch (const Error& e) {
        return error_outcome(command, &cfg, e.kind(), e.what());
    }
}

int run(const Request& req, std::ostream& err) {
    Outcome o;
    std::optional<RunConfig> cfg;
    try {
        cfg = load_config(req.config_path);
        if (req.seed) cfg->seed = *req.seed;
        o = execute(req.command, *cfg, req.check);
    } catch (const Error& e) {
        o = error_outcome(req.command, nullptr, e.kind(), e.what());
    }
    try {
        const std::filesystem::path dir(req.out_dir);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw Error(ErrorKind::IoError, "cannot create output directory " + dir.string() + ": " + ec.message());
        write_file(dir / "report.json", o.report.dump(2) + "\n");
        if (!o.solution_csv.empty()) write_file(dir / "solution.csv", o.solution_csv);
        if (!o.rates_csv.empty()) write_file(dir / "rates.csv", o.rates_csv);
        if (!o.verify_csv.empty()) write_file(dir / "verify.csv", o.verify_csv);
    } catch (const Error& e) {
        err << "mustructure: " << e.what() << '\n';
        return kExitInput;
    }
    if (o.exit_code != kExitOk) err << "mustructure: " << o.message << '\n';
    return o.exit_code;
}

}  // namespace mustructure::app
