// SPDX-License-Identifier: Apache-2.0
//
// starris: joint active/passive beamforming for STAR-RIS aided downlink systems
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "starris/conic.hpp"
#include "starris/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace starris::conic
{

using linalg::hvec;
using linalg::unhvec;

// ---- AffineScalar ---------------------------------------------------------------------------

AffineScalar AffineScalar::trace(const HermitianVar &X)
{
    AffineScalar e;
    for (int i = 0; i < X.dim; ++i)
        e.terms_.emplace_back(X.offset + i, 1.0);
    return e;
}

AffineScalar AffineScalar::inner(const HermitianVar &X, const CMat &C)
{
    if (C.rows() != X.dim || C.cols() != X.dim)
        throw ContractViolation("AffineScalar::inner: coefficient matrix has the wrong size");
    const RVec coeff = hvec(C);
    AffineScalar e;
    for (int j = 0; j < coeff.size(); ++j)
        if (coeff[j] != 0.0)
            e.terms_.emplace_back(X.offset + j, coeff[j]);
    return e;
}

AffineScalar AffineScalar::diag_entry(const HermitianVar &X, int i)
{
    if (i < 0 || i >= X.dim)
        throw ContractViolation("AffineScalar::diag_entry: index out of range");
    AffineScalar e;
    e.terms_.emplace_back(X.offset + i, 1.0);
    return e;
}

AffineScalar AffineScalar::of(const ScalarVar &v)
{
    AffineScalar e;
    e.terms_.emplace_back(v.offset, 1.0);
    return e;
}

AffineScalar &AffineScalar::add(const AffineScalar &other, double scale)
{
    for (const auto &[j, a] : other.terms_)
        terms_.emplace_back(j, scale * a);
    constant_ += scale * other.constant_;
    return *this;
}

AffineScalar &AffineScalar::scale(double s)
{
    for (auto &t : terms_)
        t.second *= s;
    constant_ *= s;
    return *this;
}

double AffineScalar::evaluate(const RVec &x) const
{
    double v = constant_;
    for (const auto &[j, a] : terms_)
        v += a * x[j];
    return v;
}

// ---- AffineMatrix ---------------------------------------------------------------------------

AffineMatrix::AffineMatrix(int dim) : dim_(dim), constant_(RVec::Zero(dim * dim))
{
    if (dim < 1)
        throw ContractViolation("AffineMatrix: dimension must be >= 1");
}

AffineMatrix AffineMatrix::of(const HermitianVar &X)
{
    AffineMatrix e(X.dim);
    e.blocks_.push_back({X.offset, RMat::Identity(X.size(), X.size())});
    return e;
}

AffineMatrix AffineMatrix::congruence(const HermitianVar &X, const CMat &F)
{
    if (F.cols() != X.dim)
        throw ContractViolation("AffineMatrix::congruence: F has the wrong number of columns");
    const int d = static_cast<int>(F.rows());
    AffineMatrix e(d);
    RMat map(d * d, X.size());
    RVec unit = RVec::Zero(X.size());
    for (int j = 0; j < X.size(); ++j)
    {
        unit[j] = 1.0;
        const CMat E = unhvec(unit, X.dim);
        map.col(j) = hvec(F * E * F.adjoint());
        unit[j] = 0.0;
    }
    e.blocks_.push_back({X.offset, std::move(map)});
    return e;
}

AffineMatrix &AffineMatrix::add(const AffineMatrix &other, double scale)
{
    if (other.dim_ != dim_)
        throw ContractViolation("AffineMatrix::add: dimension mismatch");
    for (const auto &blk : other.blocks_)
    {
        auto it = std::find_if(blocks_.begin(), blocks_.end(),
                               [&](const Block &b) { return b.offset == blk.offset && b.map.cols() == blk.map.cols(); });
        if (it != blocks_.end())
            it->map += scale * blk.map;
        else
            blocks_.push_back({blk.offset, scale * blk.map});
    }
    constant_ += scale * other.constant_;
    return *this;
}

AffineMatrix &AffineMatrix::add_constant(const CMat &C)
{
    if (C.rows() != dim_ || C.cols() != dim_)
        throw ContractViolation("AffineMatrix::add_constant: dimension mismatch");
    constant_ += hvec(C);
    return *this;
}

CMat AffineMatrix::evaluate(const RVec &x) const
{
    RVec v = constant_;
    for (const auto &blk : blocks_)
        v += blk.map * x.segment(blk.offset, blk.map.cols());
    return unhvec(v, dim_);
}

// ---- ConicProgram ---------------------------------------------------------------------------

HermitianVar ConicProgram::add_hermitian_psd(int dim, std::string /*name*/)
{
    if (dim < 1)
        throw ContractViolation("PSD variable dimension must be >= 1");
    HermitianVar v{static_cast<int>(psd_vars_.size()), num_coords_, dim};
    num_coords_ += dim * dim;
    psd_vars_.push_back(v);
    return v;
}

ScalarVar ConicProgram::add_nonnegative(std::string /*name*/)
{
    ScalarVar v{static_cast<int>(scalar_vars_.size()), num_coords_};
    num_coords_ += 1;
    scalar_vars_.push_back(v);
    return v;
}

void ConicProgram::add_objective(const AffineScalar &term, double scale)
{
    objective_.add(term, scale);
}

void ConicProgram::add_nuclear_norm(const HermitianVar &X, double weight)
{
    if (weight < 0.0)
        throw ContractViolation("nuclear-norm weight must be nonnegative to keep the objective convex");
    objective_.add(AffineScalar::trace(X), weight);
}

void ConicProgram::add_equality(const AffineScalar &expr, std::string tag)
{
    equalities_.push_back({expr, std::move(tag)});
}

void ConicProgram::add_inequality(const AffineScalar &expr, std::string tag)
{
    inequalities_.push_back({expr, std::move(tag)});
}

void ConicProgram::add_quadratic_inequality(std::vector<QuadraticTerm> terms, const AffineScalar &linear,
                                            std::string tag)
{
    for (const auto &t : terms)
        if (!(t.weight > 0.0))
            throw ContractViolation("quadratic term weights must be positive");
    std::erase_if(terms, [](const QuadraticTerm &t) { return t.weight == 0.0; });
    quadratics_.push_back({std::move(terms), linear, std::move(tag)});
}

int ConicProgram::count_equalities(const std::string &tag) const
{
    return static_cast<int>(
        std::count_if(equalities_.begin(), equalities_.end(), [&](const Labeled &l) { return l.tag == tag; }));
}

int ConicProgram::count_inequalities(const std::string &tag) const
{
    return static_cast<int>(
        std::count_if(inequalities_.begin(), inequalities_.end(), [&](const Labeled &l) { return l.tag == tag; }));
}

int ConicProgram::count_quadratic(const std::string &tag) const
{
    return static_cast<int>(
        std::count_if(quadratics_.begin(), quadratics_.end(), [&](const Quadratic &q) { return q.tag == tag; }));
}

double ConicProgram::max_constraint_violation(const RVec &x) const
{
    double worst = 0.0;
    for (const auto &e : equalities_)
        worst = std::max(worst, std::abs(e.expr.evaluate(x)));
    for (const auto &e : inequalities_)
        worst = std::max(worst, e.expr.evaluate(x));
    for (const auto &q : quadratics_)
    {
        double v = q.linear.evaluate(x);
        for (const auto &t : q.terms)
            v += t.weight * t.expr.evaluate(x).squaredNorm();
        worst = std::max(worst, v);
    }
    return worst;
}

StandardForm ConicProgram::lower() const
{
    using Triplet = Eigen::Triplet<double>;
    const int n = num_coords_;
    StandardForm sf;

    sf.c = RVec::Zero(n);
    for (const auto &[j, a] : objective_.terms())
        sf.c[j] += a;
    sf.c0 = objective_.constant();

    std::vector<Triplet> a_trip;
    sf.b.resize(static_cast<Eigen::Index>(equalities_.size()));
    for (std::size_t i = 0; i < equalities_.size(); ++i)
    {
        for (const auto &[j, a] : equalities_[i].expr.terms())
            a_trip.emplace_back(static_cast<int>(i), j, a);
        sf.b[static_cast<Eigen::Index>(i)] = -equalities_[i].expr.constant();
    }
    sf.A.resize(static_cast<Eigen::Index>(equalities_.size()), n);
    sf.A.setFromTriplets(a_trip.begin(), a_trip.end());

    std::vector<Triplet> g_trip;
    std::vector<double> h;
    int row = 0;

    // nonnegative orthant: scalar variables, then linear inequalities
    const int l_start = row;
    for (const auto &v : scalar_vars_)
    {
        g_trip.emplace_back(row++, v.offset, -1.0);
        h.push_back(0.0);
    }
    for (const auto &e : inequalities_)
    {
        for (const auto &[j, a] : e.expr.terms())
            g_trip.emplace_back(row, j, a);
        h.push_back(-e.expr.constant());
        ++row;
    }
    if (row > l_start)
        sf.cones.push_back({ConeKind::NonNegative, l_start, row - l_start, row - l_start});

    // second-order cones: ||y||^2 <= t = -a(x) as (u0, u1, y) with u0 = (t+1)/2, u1 = (t-1)/2,
    // after dividing the constraint by kappa so that t is O(1) near the boundary
    for (const auto &q : quadratics_)
    {
        const int start = row;
        const double kappa = std::max(1.0, std::abs(q.linear.constant()));
        for (int r = 0; r < 2; ++r)
        {
            for (const auto &[j, a] : q.linear.terms())
                g_trip.emplace_back(row, j, 0.5 * a / kappa);
            const double c = q.linear.constant() / kappa;
            h.push_back(r == 0 ? 0.5 * (1.0 - c) : 0.5 * (-1.0 - c));
            ++row;
        }
        for (const auto &t : q.terms)
        {
            const double sw = std::sqrt(t.weight / kappa);
            const int d2 = t.expr.dim() * t.expr.dim();
            for (const auto &blk : t.expr.blocks())
                for (int i = 0; i < d2; ++i)
                    for (int j = 0; j < blk.map.cols(); ++j)
                        if (blk.map(i, j) != 0.0)
                            g_trip.emplace_back(row + i, blk.offset + j, -sw * blk.map(i, j));
            for (int i = 0; i < d2; ++i)
                h.push_back(sw * t.expr.constant()[i]);
            row += d2;
        }
        sf.cones.push_back({ConeKind::SecondOrder, start, row - start, row - start});
    }

    for (const auto &v : psd_vars_)
    {
        const int start = row;
        for (int j = 0; j < v.size(); ++j)
        {
            g_trip.emplace_back(row++, v.offset + j, -1.0);
            h.push_back(0.0);
        }
        sf.cones.push_back({ConeKind::HermitianPsd, start, v.size(), v.dim});
    }

    sf.G.resize(row, n);
    sf.G.setFromTriplets(g_trip.begin(), g_trip.end());
    sf.h = Eigen::Map<const RVec>(h.data(), static_cast<Eigen::Index>(h.size()));
    return sf;
}

CMat ConicResult::value(const HermitianVar &X) const
{
    return linalg::unhvec(x.segment(X.offset, X.size()), X.dim);
}

std::string_view to_string(ConicStatus s)
{
    switch (s)
    {
    case ConicStatus::Optimal:
        return "OPTIMAL";
    case ConicStatus::Infeasible:
        return "INFEASIBLE";
    case ConicStatus::Unbounded:
        return "UNBOUNDED";
    case ConicStatus::NumericalFailure:
        return "NUMERICAL_FAILURE";
    }
    return "?";
}

ConicResult solve(const ConicProgram &program, const SolverSettings &settings)
{
    ConicResult r = solve(program.lower(), settings);
    if (r.x.size() == program.num_coordinates())
        r.objective = program.evaluate_objective(r.x);
    return r;
}

} // namespace starris::conic
