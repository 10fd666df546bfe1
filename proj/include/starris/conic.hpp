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

#pragma once

// Convex subproblem boundary. Callers describe a program over Hermitian PSD matrix
// variables and nonnegative scalars with linear objective terms, affine equalities and
// inequalities, and convex quadratic constraints of the form
//
//     sum_i w_i ||E_i(x)||_F^2 + a(x) <= 0,   w_i > 0,  E_i affine Hermitian-valued,
//
// and get back a ConicResult. Internally the program is lowered to
//
//     minimize c'x  s.t.  G x + s = h,  A x = b,  s in K
//
// with K a product of nonnegative orthants, second-order cones and Hermitian PSD cones,
// and solved with a homogeneous self-dual primal-dual interior-point method using
// Nesterov-Todd scaling and a Mehrotra corrector.

#include "starris/core_model.hpp"

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

namespace starris::conic
{

struct HermitianVar
{
    int index = -1;  // declaration order
    int offset = 0;  // first flat coordinate
    int dim = 0;     // matrix side
    int size() const { return dim * dim; }
};

struct ScalarVar
{
    int index = -1;
    int offset = 0;
};

// Real affine functional of the flat coordinate vector.
class AffineScalar
{
public:
    AffineScalar() = default;
    explicit AffineScalar(double constant) : constant_(constant) {}

    static AffineScalar trace(const HermitianVar &X);
    // Re Tr(C X); only the Hermitian part of C matters.
    static AffineScalar inner(const HermitianVar &X, const CMat &C);
    static AffineScalar diag_entry(const HermitianVar &X, int i);
    static AffineScalar of(const ScalarVar &v);

    AffineScalar &add(const AffineScalar &other, double scale = 1.0);
    AffineScalar &add_constant(double c)
    {
        constant_ += c;
        return *this;
    }
    AffineScalar &scale(double s);

    double constant() const { return constant_; }
    const std::vector<std::pair<int, double>> &terms() const { return terms_; }
    double evaluate(const RVec &x) const;

    friend AffineScalar operator+(AffineScalar a, const AffineScalar &b) { return a.add(b); }
    friend AffineScalar operator-(AffineScalar a, const AffineScalar &b) { return a.add(b, -1.0); }
    friend AffineScalar operator*(double s, AffineScalar a) { return a.scale(s); }

private:
    std::vector<std::pair<int, double>> terms_;
    double constant_ = 0.0;
};

// Hermitian-matrix-valued affine expression, stored as hvec(E(x)) = sum_b map_b x[b] + constant.
class AffineMatrix
{
public:
    explicit AffineMatrix(int dim);

    static AffineMatrix of(const HermitianVar &X);
    // F X F^H with F of shape dim x X.dim.
    static AffineMatrix congruence(const HermitianVar &X, const CMat &F);

    AffineMatrix &add(const AffineMatrix &other, double scale = 1.0);
    AffineMatrix &add_constant(const CMat &C);

    int dim() const { return dim_; }
    CMat evaluate(const RVec &x) const;

    struct Block
    {
        int offset; // first coordinate of the variable
        RMat map;   // dim^2 x variable size
    };
    const std::vector<Block> &blocks() const { return blocks_; }
    const RVec &constant() const { return constant_; }

private:
    int dim_;
    std::vector<Block> blocks_;
    RVec constant_;
};

struct QuadraticTerm
{
    double weight;
    AffineMatrix expr;
};

enum class ConeKind
{
    NonNegative,
    SecondOrder,
    HermitianPsd
};

struct ConeBlock
{
    ConeKind kind;
    int offset; // first row in G / h
    int size;   // rows; PSD: n^2
    int dim;    // PSD matrix side, otherwise == size
};

// Lowered form consumed by the interior-point method.
struct StandardForm
{
    RVec c;
    double c0 = 0.0;
    Eigen::SparseMatrix<double, Eigen::RowMajor> A;
    RVec b;
    Eigen::SparseMatrix<double, Eigen::RowMajor> G;
    RVec h;
    std::vector<ConeBlock> cones; // contiguous, covering every row of G
};

class ConicProgram
{
public:
    HermitianVar add_hermitian_psd(int dim, std::string name = {});
    ScalarVar add_nonnegative(std::string name = {});

    // Objective to minimize; terms accumulate.
    void add_objective(const AffineScalar &term, double scale = 1.0);
    // weight * ||X||_*; for a PSD variable this equals weight * Tr(X) and is encoded that way.
    void add_nuclear_norm(const HermitianVar &X, double weight);

    void add_equality(const AffineScalar &expr, std::string tag = {});   // expr == 0
    void add_inequality(const AffineScalar &expr, std::string tag = {}); // expr <= 0
    void add_quadratic_inequality(std::vector<QuadraticTerm> terms, const AffineScalar &linear,
                                  std::string tag = {});

    int num_coordinates() const { return num_coords_; }
    int num_variables() const { return static_cast<int>(psd_vars_.size() + scalar_vars_.size()); }
    int num_psd_variables() const { return static_cast<int>(psd_vars_.size()); }
    int count_equalities(const std::string &tag) const;
    int count_inequalities(const std::string &tag) const;
    int count_quadratic(const std::string &tag) const;
    int num_equalities() const { return static_cast<int>(equalities_.size()); }
    int num_quadratic() const { return static_cast<int>(quadratics_.size()); }
    const std::vector<HermitianVar> &psd_variables() const { return psd_vars_; }

    const AffineScalar &objective() const { return objective_; }
    double evaluate_objective(const RVec &x) const { return objective_.evaluate(x); }
    // Largest violation over equalities, inequalities and quadratic constraints (PSD-ness excluded).
    double max_constraint_violation(const RVec &x) const;

    StandardForm lower() const;

private:
    struct Labeled
    {
        AffineScalar expr;
        std::string tag;
    };
    struct Quadratic
    {
        std::vector<QuadraticTerm> terms;
        AffineScalar linear;
        std::string tag;
    };

    int num_coords_ = 0;
    std::vector<HermitianVar> psd_vars_;
    std::vector<ScalarVar> scalar_vars_;
    AffineScalar objective_;
    std::vector<Labeled> equalities_;
    std::vector<Labeled> inequalities_;
    std::vector<Quadratic> quadratics_;
};

enum class ConicStatus
{
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure
};

std::string_view to_string(ConicStatus s);

struct SolverSettings
{
    double tolerance = 1e-9; // relative feasibility and gap tolerance
    int max_iterations = 100;
    bool verbose = false;
};

struct ConicResult
{
    ConicStatus status = ConicStatus::NumericalFailure;
    RVec x;
    RVec s;
    RVec z;
    RVec y;
    double objective = 0.0;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double relative_gap = 0.0;
    bool reduced_accuracy = false; // stalled before the requested tolerance but met 1e-6

    CMat value(const HermitianVar &X) const;
    double value(const ScalarVar &v) const { return x[v.offset]; }
    double value(const AffineScalar &e) const { return e.evaluate(x); }
};

ConicResult solve(const ConicProgram &program, const SolverSettings &settings = {});
ConicResult solve(const StandardForm &problem, const SolverSettings &settings = {});

} // namespace starris::conic
