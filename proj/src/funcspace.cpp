// SPDX-License-Identifier: Apache-2.0
#include "mustructure/funcspace.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace mustructure {

namespace {

// Union-find over (component, node) keys flattened with per-component offsets.
struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

DofMap DofMap::build(const Structure& s, bool share) {
    std::vector<int> offset{0};
    for (const Mesh& m : s.meshes) offset.push_back(offset.back() + static_cast<int>(m.nodes.size()));
    UnionFind uf(offset.back());
    if (share) {
        for (const Junction& J : s.junctions) {
            if (!J.coupled) continue;
            for (std::size_t k = 0; k < J.nodes_i.size(); ++k) uf.unite(offset[J.ci] + J.nodes_i[k], offset[J.cj] + J.nodes_j[k]);
        }
    }
    DofMap d;
    d.broken_ = !share;
    std::vector<int> root_dof(offset.back(), -1);
    d.node_dof_.resize(s.meshes.size());
    for (std::size_t c = 0; c < s.meshes.size(); ++c) {
        d.node_dof_[c].resize(s.meshes[c].nodes.size());
        for (std::size_t n = 0; n < s.meshes[c].nodes.size(); ++n) {
            const int r = uf.find(offset[c] + static_cast<int>(n));
            if (root_dof[r] < 0) {
                root_dof[r] = d.ndofs_++;
                d.owner_.emplace_back(static_cast<int>(c), static_cast<int>(n));
            }
            d.node_dof_[c][n] = root_dof[r];
        }
    }
    return d;
}

DofMap DofMap::conforming(const Structure& s) { return build(s, true); }
DofMap DofMap::broken(const Structure& s) { return build(s, false); }

CellGeometry cell_geometry(const Mesh& m, int cell) {
    const auto& c = m.cells[cell];
    CellGeometry g;
    if (c[2] < 0) {
        const Vec3 e = m.nodes[c[1]] - m.nodes[c[0]];
        const double len2 = e.squaredNorm();
        g.nv = 2;
        g.measure = std::sqrt(len2);
        g.grad[0] = -e / len2;
        g.grad[1] = e / len2;
        return g;
    }
    const Vec3 e1 = m.nodes[c[1]] - m.nodes[c[0]];
    const Vec3 e2 = m.nodes[c[2]] - m.nodes[c[0]];
    Eigen::Matrix2d G;
    G << e1.dot(e1), e1.dot(e2), e1.dot(e2), e2.dot(e2);
    const double det = G.determinant();
    const Eigen::Matrix2d Gi = G.inverse();
    // grad(lambda_1) = [e1 e2] G^{-1} (1,0), grad(lambda_2) = [e1 e2] G^{-1} (0,1).
    g.nv = 3;
    g.measure = 0.5 * std::sqrt(det);
    g.grad[1] = Gi(0, 0) * e1 + Gi(1, 0) * e2;
    g.grad[2] = Gi(0, 1) * e1 + Gi(1, 1) * e2;
    g.grad[0] = -g.grad[1] - g.grad[2];
    return g;
}

Vec3 cell_point(const Mesh& m, int cell, const std::array<double, 3>& bary) {
    const auto& c = m.cells[cell];
    Vec3 x = bary[0] * m.nodes[c[0]] + bary[1] * m.nodes[c[1]];
    if (c[2] >= 0) x += bary[2] * m.nodes[c[2]];
    return x;
}

Space::Space(std::shared_ptr<const Structure> s, bool broken)
    : structure_(std::move(s)), dofs_(broken ? DofMap::broken(*structure_) : DofMap::conforming(*structure_)) {
    const Structure& st = *structure_;
    theta_.resize(st.components.size());
    mu_.assign(st.components.size(), 0.0);
    for (std::size_t c = 0; c < st.components.size(); ++c) {
        const Mesh& m = st.meshes[c];
        const auto& rule = quad::assembly_rule(st.components[c].dim);
        theta_[c].reserve(m.cells.size() * rule.size());
        for (int t = 0; t < static_cast<int>(m.cells.size()); ++t) {
            const double meas = cell_geometry(m, t).measure;
            for (const auto& q : rule) {
                const double th = st.components[c].density.eval(cell_point(m, t, q.bary));
                theta_[c].push_back(th);
                mu_[c] += q.weight * meas * th;
            }
        }
        locators_.emplace_back(st.components[c], m);
    }
}

SpacePtr make_space(std::shared_ptr<const Structure> s, bool broken) { return std::make_shared<const Space>(std::move(s), broken); }

MuFunction::MuFunction(SpacePtr space, Vector values) : space_(std::move(space)), values_(std::move(values)) {
    if (values_.size() != space_->size()) throw std::invalid_argument("MuFunction: coefficient vector has the wrong length");
}

MuFunction::MuFunction(SpacePtr space) : space_(std::move(space)), values_(Vector::Zero(space_->size())) {}

std::optional<double> MuFunction::eval_local(int comp, const Vec2& local) const {
    const auto hit = space_->locator(comp).locate(local);
    if (!hit) return std::nullopt;
    const Mesh& m = structure().meshes[comp];
    const auto& c = m.cells[hit->cell];
    double v = 0.0;
    for (int a = 0; a < m.cell_size(); ++a) v += hit->bary[a] * at(comp, c[a]);
    return v;
}

MuFunction& MuFunction::operator+=(const MuFunction& o) {
    values_ += o.values_;
    return *this;
}
MuFunction& MuFunction::operator-=(const MuFunction& o) {
    values_ -= o.values_;
    return *this;
}
MuFunction& MuFunction::operator*=(double a) {
    values_ *= a;
    return *this;
}
MuFunction operator+(MuFunction a, const MuFunction& b) { return a += b; }
MuFunction operator-(MuFunction a, const MuFunction& b) { return a -= b; }
MuFunction operator*(double a, MuFunction u) { return u *= a; }

MuFunction interpolate(SpacePtr space, const std::vector<expr::Expr>& per_component) {
    const Structure& s = space->structure();
    if (per_component.size() != s.components.size()) throw std::invalid_argument("interpolate: one expression per component expected");
    Vector v(space->size());
    for (int d = 0; d < space->size(); ++d) {
        const auto [c, n] = space->dofs().owner(d);
        v[d] = per_component[c].eval(s.meshes[c].nodes[n]);
    }
    return MuFunction(std::move(space), std::move(v));
}

MuFunction interpolate(SpacePtr space, const expr::Expr& f) {
    return interpolate(space, std::vector<expr::Expr>(space->structure().components.size(), f));
}

double l2mu_norm2(const MuFunction& u, const std::vector<int>& comps) {
    const Structure& s = u.structure();
    double sum = 0.0;
    for (int c : comps) {
        const Mesh& m = s.meshes[c];
        const auto& rule = quad::assembly_rule(s.components[c].dim);
        const int k = m.cell_size();
        for (int t = 0; t < static_cast<int>(m.cells.size()); ++t) {
            const double meas = cell_geometry(m, t).measure;
            for (int q = 0; q < static_cast<int>(rule.size()); ++q) {
                double v = 0.0;
                for (int a = 0; a < k; ++a) v += rule[q].bary[a] * u.at(c, m.cells[t][a]);
                sum += rule[q].weight * meas * u.space().theta(c, t, q) * v * v;
            }
        }
    }
    return sum;
}

double grad_norm2(const MuFunction& u, const std::vector<int>& comps) {
    const Structure& s = u.structure();
    double sum = 0.0;
    for (int c : comps) {
        const Mesh& m = s.meshes[c];
        const auto& rule = quad::assembly_rule(s.components[c].dim);
        for (int t = 0; t < static_cast<int>(m.cells.size()); ++t) {
            const CellGeometry g = cell_geometry(m, t);
            Vec3 grad = Vec3::Zero();
            for (int a = 0; a < g.nv; ++a) grad += u.at(c, m.cells[t][a]) * g.grad[a];
            double th = 0.0;
            for (int q = 0; q < static_cast<int>(rule.size()); ++q) th += rule[q].weight * u.space().theta(c, t, q);
            sum += g.measure * th * grad.squaredNorm();
        }
    }
    return sum;
}

namespace {
std::vector<int> all_components(const Structure& s) {
    std::vector<int> v(s.components.size());
    std::iota(v.begin(), v.end(), 0);
    return v;
}
}  // namespace

double l2mu_norm(const MuFunction& u) { return std::sqrt(l2mu_norm2(u, all_components(u.structure()))); }

double h1mu_norm(const MuFunction& u) {
    const auto all = all_components(u.structure());
    return std::sqrt(l2mu_norm2(u, all) + grad_norm2(u, all));
}

std::vector<std::vector<Vec3>> mu_gradient(const MuFunction& u) {
    const Structure& s = u.structure();
    std::vector<std::vector<Vec3>> out(s.components.size());
    for (std::size_t c = 0; c < s.components.size(); ++c) {
        const Mesh& m = s.meshes[c];
        out[c].reserve(m.cells.size());
        for (int t = 0; t < static_cast<int>(m.cells.size()); ++t) {
            const CellGeometry g = cell_geometry(m, t);
            Vec3 grad = Vec3::Zero();
            for (int a = 0; a < g.nv; ++a) grad += u.at(static_cast<int>(c), m.cells[t][a]) * g.grad[a];
            out[c].push_back(grad);
        }
    }
    return out;
}

Trace trace_on(const MuFunction& u, int junction, int side_id) {
    const Structure& s = u.structure();
    const Junction& J = s.junctions.at(junction);
    int side;
    if (s.components[J.ci].id == side_id) {
        side = 0;
    } else if (s.components[J.cj].id == side_id) {
        side = 1;
    } else {
        throw Error(ErrorKind::SideNotInJunction, "component " + std::to_string(side_id) + " is not a side of junction " + std::to_string(junction));
    }
    Trace tr;
    tr.arclength = J.arclength;
    const auto& nodes = side == 0 ? J.nodes_i : J.nodes_j;
    const int comp = side == 0 ? J.ci : J.cj;
    for (int n : nodes) tr.values.push_back(u.at(comp, n));
    return tr;
}

double group_mean(const MuFunction& u, const std::vector<int>& member_ids) {
    if (member_ids.empty()) throw std::invalid_argument("group_mean: empty member set");
    const Structure& s = u.structure();
    double integral = 0.0, measure = 0.0;
    for (int id : member_ids) {
        const int c = s.index_of(id);
        const Mesh& m = s.meshes[c];
        const auto& rule = quad::assembly_rule(s.components[c].dim);
        const int k = m.cell_size();
        for (int t = 0; t < static_cast<int>(m.cells.size()); ++t) {
            const double meas = cell_geometry(m, t).measure;
            for (int q = 0; q < static_cast<int>(rule.size()); ++q) {
                double v = 0.0;
                for (int a = 0; a < k; ++a) v += rule[q].bary[a] * u.at(c, m.cells[t][a]);
                const double w = rule[q].weight * meas * u.space().theta(c, t, q);
                integral += w * v;
                measure += w;
            }
        }
    }
    return integral / measure;
}

ErrorNorms error_norms(const MuFunction& uh, const std::vector<expr::Expr>& exact, const std::vector<std::vector<int>>& groups) {
    const Structure& s = uh.structure();
    if (exact.size() != s.components.size()) throw std::invalid_argument("error_norms: one expression per component expected");
    constexpr int kOrder = 4;

    // Weighted means of the exact solution per group.
    std::vector<double> shift(s.components.size(), 0.0);
    for (const auto& g : groups) {
        double integral = 0.0, measure = 0.0;
        for (int c : g) {
            const Mesh& m = s.meshes[c];
            const auto& rule = quad::accurate_rule(s.components[c].dim, kOrder);
            for (int t = 0; t < static_cast<int>(m.cells.size()); ++t) {
                const double meas = cell_geometry(m, t).measure;
                for (const auto& q : rule) {
                    const Vec3 x = cell_point(m, t, q.bary);
                    const double w = q.weight * meas * s.components[c].density.eval(x);
                    integral += w * exact[c].eval(x);
                    measure += w;
                }
            }
        }
        for (int c : g) shift[c] = integral / measure;
    }

    ErrorNorms e;
    for (std::size_t c = 0; c < s.components.size(); ++c) {
        const Mesh& m = s.meshes[c];
        const Component& comp = s.components[c];
        const auto grad = expr::gradient(exact[c]);
        const Mat3 P = comp.projector();
        const auto& rule = quad::accurate_rule(comp.dim, kOrder);
        for (int t = 0; t < static_cast<int>(m.cells.size()); ++t) {
            const CellGeometry g = cell_geometry(m, t);
            Vec3 gh = Vec3::Zero();
            for (int a = 0; a < g.nv; ++a) gh += uh.at(static_cast<int>(c), m.cells[t][a]) * g.grad[a];
            for (const auto& q : rule) {
                const Vec3 x = cell_point(m, t, q.bary);
                double vh = 0.0;
                for (int a = 0; a < g.nv; ++a) vh += q.bary[a] * uh.at(static_cast<int>(c), m.cells[t][a]);
                const double u = exact[c].eval(x) - shift[c];
                const Vec3 gu = P * Vec3(grad[0].eval(x), grad[1].eval(x), grad[2].eval(x));
                const double w = q.weight * g.measure * comp.density.eval(x);
                e.l2 += w * (vh - u) * (vh - u);
                e.h1_semi += w * (gh - gu).squaredNorm();
                e.l2_exact += w * u * u;
            }
        }
    }
    e.h1 = std::sqrt(e.l2 + e.h1_semi);
    e.l2 = std::sqrt(e.l2);
    e.h1_semi = std::sqrt(e.h1_semi);
    e.l2_exact = std::sqrt(e.l2_exact);
    return e;
}

void write_csv(const MuFunction& u, std::ostream& os) {
    const Structure& s = u.structure();
    os << "component_id,node_index,x,y,z,value\n";
    char buf[160];
    for (std::size_t c = 0; c < s.components.size(); ++c) {
        const Mesh& m = s.meshes[c];
        for (std::size_t n = 0; n < m.nodes.size(); ++n) {
            const Vec3& x = m.nodes[n];
            std::snprintf(buf, sizeof buf, "%d,%zu,%.17g,%.17g,%.17g,%.17g\n", s.components[c].id, n, x.x(), x.y(), x.z(),
                          u.at(static_cast<int>(c), static_cast<int>(n)));
            os << buf;
        }
    }
}

}  // namespace mustructure
