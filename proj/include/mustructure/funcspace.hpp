// SPDX-License-Identifier: Apache-2.0
#pragma once

// Discrete H^1_mu: P1 functions on every component mesh, glued through
// shared degrees of freedom at coupled junctions.

#include "mustructure/geometry.hpp"
#include "mustructure/quadrature.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <memory>
#include <vector>

namespace mustructure {

using Vector = Eigen::VectorXd;

class DofMap {
public:
    /// Coupled junction node pairs share one DOF.
    static DofMap conforming(const Structure& s);
    /// Every mesh node owns its own DOF (junction pairs duplicated).
    static DofMap broken(const Structure& s);

    int dof(int comp, int node) const { return node_dof_[comp][node]; }
    const std::vector<int>& component(int comp) const { return node_dof_[comp]; }
    int size() const { return ndofs_; }
    bool is_broken() const { return broken_; }
    /// First (component, node) that maps to the DOF, in component order.
    std::pair<int, int> owner(int dof) const { return owner_[dof]; }

private:
    static DofMap build(const Structure& s, bool share);

    std::vector<std::vector<int>> node_dof_;
    std::vector<std::pair<int, int>> owner_;
    int ndofs_ = 0;
    bool broken_ = false;
};

/// Geometry of one P1 cell: measure and ambient gradients of the nodal basis.
struct CellGeometry {
    int nv = 2;
    double measure = 0.0;
    std::array<Vec3, 3> grad{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
};

CellGeometry cell_geometry(const Mesh& m, int cell);
Vec3 cell_point(const Mesh& m, int cell, const std::array<double, 3>& bary);

/// A structure plus a DOF numbering, with densities cached at the assembly
/// quadrature points and a point locator per component.
class Space {
public:
    Space(std::shared_ptr<const Structure> s, bool broken = false);

    const Structure& structure() const { return *structure_; }
    std::shared_ptr<const Structure> structure_ptr() const { return structure_; }
    const DofMap& dofs() const { return dofs_; }
    int size() const { return dofs_.size(); }

    /// Density at assembly quadrature point q of a cell.
    double theta(int comp, int cell, int q) const { return theta_[comp][cell * nq(comp) + q]; }
    int nq(int comp) const { return static_cast<int>(quad::assembly_rule(structure_->components[comp].dim).size()); }
    const PointLocator& locator(int comp) const { return locators_[comp]; }
    /// mu-measure of component comp, integral of theta with the assembly rule.
    double mu_measure(int comp) const { return mu_[comp]; }

private:
    std::shared_ptr<const Structure> structure_;
    DofMap dofs_;
    std::vector<std::vector<double>> theta_;
    std::vector<PointLocator> locators_;
    std::vector<double> mu_;
};

using SpacePtr = std::shared_ptr<const Space>;

SpacePtr make_space(std::shared_ptr<const Structure> s, bool broken = false);

class MuFunction {
public:
    MuFunction(SpacePtr space, Vector values);
    explicit MuFunction(SpacePtr space);  // zero

    const Space& space() const { return *space_; }
    const SpacePtr& space_ptr() const { return space_; }
    const Structure& structure() const { return space_->structure(); }
    const Vector& values() const { return values_; }
    Vector& values() { return values_; }

    double at(int comp, int node) const { return values_[space_->dofs().dof(comp, node)]; }
    /// P1 value at a local point of component comp; nullopt outside the mesh.
    std::optional<double> eval_local(int comp, const Vec2& local) const;

    MuFunction& operator+=(const MuFunction& o);
    MuFunction& operator-=(const MuFunction& o);
    MuFunction& operator*=(double a);

private:
    SpacePtr space_;
    Vector values_;
};

MuFunction operator+(MuFunction a, const MuFunction& b);
MuFunction operator-(MuFunction a, const MuFunction& b);
MuFunction operator*(double a, MuFunction u);

/// Nodal interpolant. Shared DOFs take the value from their first owner.
MuFunction interpolate(SpacePtr space, const expr::Expr& f);
/// Per-component expressions (indexed by component position).
MuFunction interpolate(SpacePtr space, const std::vector<expr::Expr>& per_component);

double l2mu_norm(const MuFunction& u);
double h1mu_norm(const MuFunction& u);
/// Squared norms restricted to a set of component indices.
double l2mu_norm2(const MuFunction& u, const std::vector<int>& comps);
double grad_norm2(const MuFunction& u, const std::vector<int>& comps);

/// Constant tangential gradient per cell, per component.
std::vector<std::vector<Vec3>> mu_gradient(const MuFunction& u);

struct Trace {
    std::vector<double> arclength;
    std::vector<double> values;
};

/// Restriction of u on side `side_id` (a component id) to the junction nodes.
Trace trace_on(const MuFunction& u, int junction, int side_id);

/// Weighted mean over the components with the given ids.
double group_mean(const MuFunction& u, const std::vector<int>& member_ids);

struct ErrorNorms {
    double l2 = 0.0;        // ||u_h - u||_{L2_mu}
    double h1_semi = 0.0;   // ||grad_mu (u_h - u)||_{L2_mu}
    double h1 = 0.0;        // full H1_mu
    double l2_exact = 0.0;  // ||u||_{L2_mu}, for relative reporting
};

/// Errors against exact per-component expressions with an accurate rule.
/// The exact solution is first shifted to zero weighted mean on every group
/// (component index lists), matching the normalisation of the solver.
ErrorNorms error_norms(const MuFunction& uh, const std::vector<expr::Expr>& exact,
                       const std::vector<std::vector<int>>& groups);

/// CSV with header component_id,node_index,x,y,z,value (one row per mesh node).
void write_csv(const MuFunction& u, std::ostream& os);

}  // namespace mustructure
