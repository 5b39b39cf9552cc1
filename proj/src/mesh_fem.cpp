#include "memodiff/mesh_fem.hpp"

#include "memodiff/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace memodiff {

Mesh1D::Mesh1D(double length, int n_elements) : length_(length), n_elements_(n_elements) {
    if (!(length > 0.0) || !std::isfinite(length)) {
        throw Error(ErrorCode::InvalidArgument, "domain length must be positive");
    }
    if (n_elements < 2) {
        throw Error(ErrorCode::InvalidArgument, "need at least 2 elements, got " + std::to_string(n_elements));
    }
    nodes_.resize(static_cast<std::size_t>(n_elements) + 1);
    for (int i = 0; i <= n_elements; ++i) nodes_[static_cast<std::size_t>(i)] = length * i / n_elements;
    nodes_.back() = length;
}

std::vector<double> Mesh1D::interior_nodes() const {
    return {nodes_.begin() + 1, nodes_.end() - 1};
}

Mesh1D build_mesh(double length, int n_elements) { return Mesh1D(length, n_elements); }

CoefficientField CoefficientField::constant(double value) {
    return {[value](double) { return value; }, value, value};
}

CoefficientField CoefficientField::linear(double c0, double c1, double length) {
    const double end = c0 + c1 * length;
    return {[c0, c1](double x) { return c0 + c1 * x; }, std::min(c0, end), std::max(c0, end)};
}

namespace {

SymTridiag stiffness(const Mesh1D& mesh, const CoefficientField& a, const char* name) {
    const double h = mesh.h();
    const std::size_t n = mesh.n_dofs();
    const auto& x = mesh.nodes();
    SymTridiag k(n);
    const double slack = 1e-12 * (std::abs(a.a_max) + 1.0);
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const double mid = 0.5 * (x[static_cast<std::size_t>(e)] + x[static_cast<std::size_t>(e) + 1]);
        const double c = a.eval(mid);
        if (!std::isfinite(c) || c < a.a_min - slack || c > a.a_max + slack) {
            throw Error(ErrorCode::CoercivityViolation,
                        std::string("coefficient ") + name + " leaves its declared bounds at x=" + std::to_string(mid));
        }
        const double ke = c / h;
        // element e couples global nodes e and e+1; interior index = node - 1
        const int left = e - 1;
        const int right = e;
        if (left >= 0) k.diag[static_cast<std::size_t>(left)] += ke;
        if (right < static_cast<int>(n)) k.diag[static_cast<std::size_t>(right)] += ke;
        if (left >= 0 && right < static_cast<int>(n)) k.off[static_cast<std::size_t>(left)] -= ke;
    }
    return k;
}

} // namespace

FemMatrices assemble(const Mesh1D& mesh, const CoefficientField& a0, const CoefficientField& a1) {
    if (!(a0.a_min > 0.0)) {
        throw Error(ErrorCode::CoercivityViolation, "a0 lower bound must be positive");
    }
    if (a1.a_min < 0.0) {
        throw Error(ErrorCode::CoercivityViolation, "a1 lower bound must be nonnegative");
    }
    FemMatrices m;
    m.h = mesh.h();
    const std::size_t n = mesh.n_dofs();
    m.mass = SymTridiag(n);
    for (std::size_t i = 0; i < n; ++i) m.mass.diag[i] = 4.0 * m.h / 6.0;
    for (std::size_t i = 0; i + 1 < n; ++i) m.mass.off[i] = m.h / 6.0;
    m.stiff0 = stiffness(mesh, a0, "a0");
    m.stiff1 = stiffness(mesh, a1, "a1");
    m.laplace = stiffness(mesh, CoefficientField::constant(1.0), "unit");
    m.laplace_factor = TridiagFactor(m.laplace);
    return m;
}

namespace {
void check_dim(std::span<const double> v, const FemMatrices& m) {
    if (v.size() != m.n_dofs()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "vector has " + std::to_string(v.size()) + " entries, expected " + std::to_string(m.n_dofs()));
    }
}
} // namespace

double norm_H(std::span<const double> v, const FemMatrices& m) {
    check_dim(v, m);
    return std::sqrt(std::max(0.0, m.mass.quadratic(v)));
}

double seminorm_V(std::span<const double> v, const FemMatrices& m) {
    check_dim(v, m);
    return std::sqrt(std::max(0.0, m.laplace.quadratic(v)));
}

double dual_norm(std::span<const double> g, const FemMatrices& m) {
    check_dim(g, m);
    const Vec x = m.laplace_factor.solve(g);
    return std::sqrt(std::max(0.0, dot(g, x)));
}

FormConstants form_constants(const FemMatrices& m) {
    const std::size_t n = m.n_dofs();
    FormConstants c;
    c.alpha0 = pencil_eigenvalue(m.stiff0, m.laplace, 0);
    c.Lambda0 = pencil_eigenvalue(m.stiff0, m.laplace, n - 1);
    if (!m.stiff1.is_zero()) {
        c.alpha1 = pencil_eigenvalue(m.stiff1, m.laplace, 0);
        c.Lambda1 = pencil_eigenvalue(m.stiff1, m.laplace, n - 1);
    }
    return c;
}

std::vector<double> interpolate(const Mesh1D& mesh, const std::function<double(double)>& fn) {
    std::vector<double> v;
    v.reserve(mesh.n_dofs());
    for (double x : mesh.interior_nodes()) v.push_back(fn(x));
    return v;
}

std::vector<double> load_vector(const FemMatrices& m, std::span<const double> nodal) {
    check_dim(nodal, m);
    return m.mass * nodal;
}

} // namespace memodiff
