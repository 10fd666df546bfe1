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

// Homogeneous self-dual embedding interior-point method over products of nonnegative
// orthants, second-order cones and Hermitian PSD cones. Each iteration recomputes the
// Nesterov-Todd scaling from (s, z), solves the reduced KKT system through a dense normal
// matrix plus a Schur complement on the equality block, and takes a Mehrotra
// predictor-corrector step.

#include "starris/conic.hpp"
#include "starris/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace starris::conic
{
namespace
{

using linalg::hvec;
using linalg::hvec_into;
using linalg::unhvec;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Cone
{
    ConeKind kind = ConeKind::NonNegative;
    int offset = 0;
    int size = 0;
    int dim = 0;

    RMat Gd;              // dense G rows restricted to the columns in cols
    std::vector<int> cols;
    int var_offset = -1;  // PSD block with G = -I on a coordinate range

    // scaling state
    RVec d;      // nonnegative: W = diag(d)
    double beta = 1.0;
    RVec w;      // SOC hyperbolic vector, w'Jw = 1
    CMat R, Rinv;
    RVec lam;    // PSD eigenvalues of the scaled point
    RMat Mb;     // PSD: (W'W)^{-1} as a dense operator on hvec coordinates
};

class Solver
{
public:
    Solver(const StandardForm &p, const SolverSettings &st) : p_(p), st_(st)
    {
        n_ = static_cast<int>(p.c.size());
        m_ = static_cast<int>(p.h.size());
        neq_ = static_cast<int>(p.b.size());
        if (p.G.rows() != m_ || p.G.cols() != n_ || p.A.rows() != neq_ || (neq_ > 0 && p.A.cols() != n_))
            throw ContractViolation("conic solve: inconsistent problem dimensions");
        int covered = 0;
        for (const auto &cb : p.cones)
        {
            if (cb.offset != covered)
                throw ContractViolation("conic solve: cone blocks must be contiguous");
            covered += cb.size;
            Cone c;
            c.kind = cb.kind;
            c.offset = cb.offset;
            c.size = cb.size;
            c.dim = cb.dim;
            const SpMat rows = p.G.middleRows(cb.offset, cb.size);
            if (c.kind == ConeKind::HermitianPsd)
            {
                if (cb.dim * cb.dim != cb.size)
                    throw ContractViolation("conic solve: PSD block size must be dim^2");
                c.var_offset = identity_block_offset(rows);
                if (c.var_offset < 0)
                    compact_rows(c, rows);
            }
            else
            {
                compact_rows(c, rows);
            }
            if (c.kind == ConeKind::SecondOrder && cb.size < 1)
                throw ContractViolation("conic solve: empty second-order cone");
            nu_ += c.kind == ConeKind::SecondOrder ? 1 : (c.kind == ConeKind::HermitianPsd ? cb.dim : cb.size);
            cones_.push_back(std::move(c));
        }
        if (covered != m_)
            throw ContractViolation("conic solve: cone blocks do not cover G");
        GT_ = p.G.transpose();
        if (neq_ > 0)
            AT_ = p.A.transpose();
    }

    ConicResult run();

private:
    void compact_rows(Cone &c, const SpMat &rows) const
    {
        std::vector<int> pos(n_, -1);
        for (int r = 0; r < rows.outerSize(); ++r)
            for (SpMat::InnerIterator itr(rows, r); itr; ++itr)
                pos[itr.col()] = 0;
        for (int j = 0; j < n_; ++j)
            if (pos[j] == 0)
            {
                pos[j] = static_cast<int>(c.cols.size());
                c.cols.push_back(j);
            }
        c.Gd = RMat::Zero(rows.rows(), static_cast<Eigen::Index>(c.cols.size()));
        for (int r = 0; r < rows.outerSize(); ++r)
            for (SpMat::InnerIterator itr(rows, r); itr; ++itr)
                c.Gd(r, pos[itr.col()]) += itr.value();
    }

    void scatter(RMat &H, const Cone &c, const RMat &block) const
    {
        const int k = static_cast<int>(c.cols.size());
        for (int j = 0; j < k; ++j)
            for (int i = 0; i < k; ++i)
                H(c.cols[i], c.cols[j]) += block(i, j);
    }

    static int identity_block_offset(const SpMat &rows)
    {
        int base = -1;
        for (int r = 0; r < rows.rows(); ++r)
        {
            int count = 0;
            for (SpMat::InnerIterator it(rows, r); it; ++it)
            {
                if (it.value() != -1.0 || ++count > 1)
                    return -1;
                if (r == 0)
                    base = static_cast<int>(it.col());
                else if (it.col() != base + r)
                    return -1;
            }
            if (count != 1)
                return -1;
        }
        return base;
    }

    // ---- cone algebra (all vectors have length m) ----

    RVec identity() const
    {
        RVec e = RVec::Zero(m_);
        for (const auto &c : cones_)
            switch (c.kind)
            {
            case ConeKind::NonNegative:
                e.segment(c.offset, c.size).setOnes();
                break;
            case ConeKind::SecondOrder:
                e[c.offset] = 1.0;
                break;
            case ConeKind::HermitianPsd:
                e.segment(c.offset, c.dim).setOnes();
                break;
            }
        return e;
    }

    // Smallest t with v + t e on the cone boundary measure: returns -lambda_min(v).
    double max_violation(const RVec &v) const
    {
        double t = -kInf;
        for (const auto &c : cones_)
        {
            const auto seg = v.segment(c.offset, c.size);
            switch (c.kind)
            {
            case ConeKind::NonNegative:
                t = std::max(t, -seg.minCoeff());
                break;
            case ConeKind::SecondOrder:
                t = std::max(t, seg.tail(c.size - 1).norm() - seg[0]);
                break;
            case ConeKind::HermitianPsd:
                t = std::max(t, -linalg::eigenvalues(unhvec(seg, c.dim))[0]);
                break;
            }
        }
        return t;
    }

    RVec jordan(const RVec &u, const RVec &v) const
    {
        RVec r(m_);
        for (const auto &c : cones_)
        {
            const auto a = u.segment(c.offset, c.size);
            const auto b = v.segment(c.offset, c.size);
            auto out = r.segment(c.offset, c.size);
            switch (c.kind)
            {
            case ConeKind::NonNegative:
                out = a.cwiseProduct(b);
                break;
            case ConeKind::SecondOrder:
                out[0] = a.dot(b);
                out.tail(c.size - 1) = a[0] * b.tail(c.size - 1) + b[0] * a.tail(c.size - 1);
                break;
            case ConeKind::HermitianPsd:
            {
                const CMat U = unhvec(a, c.dim);
                const CMat V = unhvec(b, c.dim);
                out = hvec(0.5 * (U * V + V * U));
                break;
            }
            }
        }
        return r;
    }

    // x with lambda o x = r, lambda being the current scaled point.
    RVec jordan_solve(const RVec &lam, const RVec &r) const
    {
        RVec x(m_);
        for (const auto &c : cones_)
        {
            const auto l = lam.segment(c.offset, c.size);
            const auto b = r.segment(c.offset, c.size);
            auto out = x.segment(c.offset, c.size);
            switch (c.kind)
            {
            case ConeKind::NonNegative:
                out = b.cwiseQuotient(l);
                break;
            case ConeKind::SecondOrder:
            {
                const double det = l[0] * l[0] - l.tail(c.size - 1).squaredNorm();
                const double x0 = (l[0] * b[0] - l.tail(c.size - 1).dot(b.tail(c.size - 1))) / det;
                out[0] = x0;
                out.tail(c.size - 1) = (b.tail(c.size - 1) - x0 * l.tail(c.size - 1)) / l[0];
                break;
            }
            case ConeKind::HermitianPsd:
            {
                CMat B = unhvec(b, c.dim);
                for (int i = 0; i < c.dim; ++i)
                    for (int j = 0; j < c.dim; ++j)
                        B(i, j) *= 2.0 / (c.lam[i] + c.lam[j]);
                out = hvec(B);
                break;
            }
            }
        }
        return x;
    }

    // Largest step a with lam + a d in the cone (inf if unbounded).
    double max_step(const RVec &lam, const RVec &d) const
    {
        double amax = kInf;
        for (const auto &c : cones_)
        {
            const auto l = lam.segment(c.offset, c.size);
            const auto v = d.segment(c.offset, c.size);
            switch (c.kind)
            {
            case ConeKind::NonNegative:
                for (int i = 0; i < c.size; ++i)
                    if (v[i] < 0.0)
                        amax = std::min(amax, -l[i] / v[i]);
                break;
            case ConeKind::SecondOrder:
            {
                const double qa = v[0] * v[0] - v.tail(c.size - 1).squaredNorm();
                const double qb = l[0] * v[0] - l.tail(c.size - 1).dot(v.tail(c.size - 1));
                const double qc = l[0] * l[0] - l.tail(c.size - 1).squaredNorm();
                double best = kInf;
                const double disc = qb * qb - qa * qc;
                if (std::abs(qa) < 1e-300)
                {
                    if (qb < 0.0)
                        best = -qc / (2.0 * qb);
                }
                else if (disc >= 0.0)
                {
                    const double q = -(qb + std::copysign(std::sqrt(disc), qb));
                    for (double root : {q / qa, q != 0.0 ? qc / q : kInf})
                        if (root > 0.0)
                            best = std::min(best, root);
                }
                if (v[0] < 0.0)
                    best = std::min(best, -l[0] / v[0]);
                amax = std::min(amax, best);
                break;
            }
            case ConeKind::HermitianPsd:
            {
                const RVec is = c.lam.cwiseSqrt().cwiseInverse();
                const CMat T = is.asDiagonal() * unhvec(v, c.dim) * is.asDiagonal();
                const double emin = linalg::eigenvalues(T)[0];
                if (emin < 0.0)
                    amax = std::min(amax, -1.0 / emin);
                break;
            }
            }
        }
        return amax;
    }

    // ---- Nesterov-Todd scaling ----

    bool compute_scaling(const RVec &s, const RVec &z, RVec &lam)
    {
        lam.resize(m_);
        for (auto &c : cones_)
        {
            const auto sv = s.segment(c.offset, c.size);
            const auto zv = z.segment(c.offset, c.size);
            switch (c.kind)
            {
            case ConeKind::NonNegative:
                if (sv.minCoeff() <= 0.0 || zv.minCoeff() <= 0.0)
                    return false;
                c.d = sv.cwiseQuotient(zv).cwiseSqrt();
                lam.segment(c.offset, c.size) = sv.cwiseProduct(zv).cwiseSqrt();
                break;
            case ConeKind::SecondOrder:
            {
                const double s1 = sv.tail(c.size - 1).norm(), z1 = zv.tail(c.size - 1).norm();
                const double ss = (sv[0] - s1) * (sv[0] + s1);
                const double zz = (zv[0] - z1) * (zv[0] + z1);
                if (!(ss > 0.0) || !(zz > 0.0) || sv[0] <= 0.0 || zv[0] <= 0.0)
                    return false;
                const double sn = std::sqrt(ss), zn = std::sqrt(zz);
                const RVec sb = sv / sn;
                RVec zb = zv / zn;
                const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
                zb.tail(c.size - 1) *= -1.0;
                c.w = (sb + zb) / (2.0 * gamma);
                c.beta = std::sqrt(sn / zn);
                lam.segment(c.offset, c.size) = soc_apply(c, zv, false);
                break;
            }
            case ConeKind::HermitianPsd:
            {
                Eigen::LLT<CMat> ls(unhvec(sv, c.dim)), lz(unhvec(zv, c.dim));
                if (ls.info() != Eigen::Success || lz.info() != Eigen::Success)
                    return false;
                const CMat Ls = ls.matrixL(), Lz = lz.matrixL();
                Eigen::JacobiSVD<CMat> svd(Lz.adjoint() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
                const RVec sig = svd.singularValues();
                if (!(sig.minCoeff() > 0.0))
                    return false;
                const RVec isq = sig.cwiseSqrt().cwiseInverse();
                c.R = Ls * svd.matrixV() * isq.asDiagonal();
                c.Rinv = isq.asDiagonal() * svd.matrixU().adjoint() * Lz.adjoint();
                c.lam = sig;
                auto seg = lam.segment(c.offset, c.size);
                seg.setZero();
                seg.head(c.dim) = sig;
                const CMat Rr = c.Rinv.adjoint() * c.Rinv; // (R R^H)^{-1}
                c.Mb.resize(c.size, c.size);
                // columns are Rr E Rr for the hvec basis matrices E, built from outer products
                const int nd = c.dim;
                constexpr double inv2 = 0.70710678118654752440;
                const cd iu(0.0, 1.0);
                CMat P(nd, nd);
                for (int i = 0; i < nd; ++i)
                {
                    P.noalias() = Rr.col(i) * Rr.row(i);
                    hvec_into(P, c.Mb.col(i));
                }
                int col = nd;
                for (int i = 0; i < nd; ++i)
                    for (int j = i + 1; j < nd; ++j)
                    {
                        const CMat A = Rr.col(i) * Rr.row(j);
                        P = inv2 * (A + A.adjoint());
                        hvec_into(P, c.Mb.col(col++));
                        P = inv2 * (iu * A - iu * A.adjoint());
                        hvec_into(P, c.Mb.col(col++));
                    }
                break;
            }
            }
        }
        return true;
    }

    // SOC: W v (inverse = false) or W^{-1} v (inverse = true); W is symmetric.
    static RVec soc_apply(const Cone &c, const Eigen::Ref<const RVec> &v, bool inverse)
    {
        const double w0 = c.w[0];
        const auto w1 = c.w.tail(c.size - 1);
        const double sgn = inverse ? -1.0 : 1.0;
        const double t = w1.dot(v.tail(c.size - 1));
        RVec out(c.size);
        out[0] = w0 * v[0] + sgn * t;
        out.tail(c.size - 1) = v.tail(c.size - 1) + (sgn * v[0] + t / (1.0 + w0)) * w1;
        return inverse ? RVec(out / c.beta) : RVec(out * c.beta);
    }

    enum class Op
    {
        W,
        WT,
        Winv,
        WinvT
    };

    RVec apply(Op op, const RVec &v) const
    {
        RVec r(m_);
        for (const auto &c : cones_)
        {
            const auto a = v.segment(c.offset, c.size);
            auto out = r.segment(c.offset, c.size);
            switch (c.kind)
            {
            case ConeKind::NonNegative:
                out = (op == Op::W || op == Op::WT) ? RVec(a.cwiseProduct(c.d)) : RVec(a.cwiseQuotient(c.d));
                break;
            case ConeKind::SecondOrder:
                out = soc_apply(c, a, op == Op::Winv || op == Op::WinvT);
                break;
            case ConeKind::HermitianPsd:
            {
                const CMat X = unhvec(a, c.dim);
                switch (op)
                {
                case Op::W:
                    out = hvec(c.R.adjoint() * X * c.R);
                    break;
                case Op::WT:
                    out = hvec(c.R * X * c.R.adjoint());
                    break;
                case Op::Winv:
                    out = hvec(c.Rinv.adjoint() * X * c.Rinv);
                    break;
                case Op::WinvT:
                    out = hvec(c.Rinv * X * c.Rinv.adjoint());
                    break;
                }
                break;
            }
            }
        }
        return r;
    }

    // (W'W)^{-1} v
    RVec apply_m(const RVec &v) const { return apply(Op::Winv, apply(Op::WinvT, v)); }
    // W'W v
    RVec apply_wtw(const RVec &v) const { return apply(Op::WT, apply(Op::W, v)); }

    // ---- KKT system [0 A' G'; A 0 0; G 0 -W'W] ----

    bool factor()
    {
        RMat H = RMat::Zero(n_, n_);
        for (const auto &c : cones_)
        {
            switch (c.kind)
            {
            case ConeKind::NonNegative:
                scatter(H, c, RMat(c.Gd.transpose() * c.d.cwiseAbs2().cwiseInverse().asDiagonal() * c.Gd));
                break;
            case ConeKind::SecondOrder:
            {
                // (W^{-1} G)'(W^{-1} G) stays PSD where the expanded rank-one form cancels
                const double w0 = c.w[0];
                const auto w1 = c.w.tail(c.size - 1);
                const RVec t = c.Gd.bottomRows(c.size - 1).transpose() * w1;
                RMat B(c.size, c.Gd.cols());
                B.row(0) = (w0 * c.Gd.row(0) - t.transpose()) / c.beta;
                B.bottomRows(c.size - 1) = c.Gd.bottomRows(c.size - 1);
                B.bottomRows(c.size - 1).noalias() += w1 * ((t.transpose() / (1.0 + w0)) - c.Gd.row(0));
                B.bottomRows(c.size - 1) /= c.beta;
                RMat BB = RMat::Zero(B.cols(), B.cols());
                BB.selfadjointView<Eigen::Lower>().rankUpdate(B.transpose());
                scatter(H, c, RMat(BB.selfadjointView<Eigen::Lower>()));
                break;
            }
            case ConeKind::HermitianPsd:
                if (c.var_offset >= 0)
                    H.block(c.var_offset, c.var_offset, c.size, c.size) += c.Mb;
                else
                    scatter(H, c, RMat(c.Gd.transpose() * c.Mb * c.Gd));
                break;
            }
        }
        H = 0.5 * (H + H.transpose()).eval();
        const double scale = std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
        double reg = 0.0;
        for (int attempt = 0; attempt < 8; ++attempt)
        {
            RMat Hr = H;
            Hr.diagonal().array() += reg;
            llt_.compute(Hr);
            if (llt_.info() == Eigen::Success)
                break;
            reg = reg == 0.0 ? 1e-14 * scale : reg * 100.0;
        }
        if (llt_.info() != Eigen::Success)
            return false;
        if (neq_ > 0)
        {
            HinvAT_ = llt_.solve(RMat(AT_));
            RMat S = p_.A * HinvAT_;
            S = 0.5 * (S + S.transpose()).eval();
            const double sscale = std::max(1.0, S.diagonal().cwiseAbs().maxCoeff());
            double sreg = 0.0;
            for (int attempt = 0; attempt < 8; ++attempt)
            {
                RMat Sr = S;
                Sr.diagonal().array() += sreg;
                schur_.compute(Sr);
                if (schur_.info() == Eigen::Success)
                    break;
                sreg = sreg == 0.0 ? 1e-14 * sscale : sreg * 100.0;
            }
            if (schur_.info() != Eigen::Success)
                return false;
        }
        return true;
    }

    struct Kkt
    {
        RVec x, y, z;
    };

    Kkt solve_once(const RVec &bx, const RVec &by, const RVec &bz) const
    {
        Kkt u;
        const RVec r = bx + GT_ * apply_m(bz);
        if (neq_ > 0)
        {
            const RVec Hr = llt_.solve(r);
            u.y = schur_.solve(p_.A * Hr - by);
            u.x = Hr - HinvAT_ * u.y;
        }
        else
        {
            u.y = RVec::Zero(0);
            u.x = llt_.solve(r);
        }
        u.z = apply_m(p_.G * u.x - bz);
        return u;
    }

    Kkt solve_kkt(const RVec &bx, const RVec &by, const RVec &bz) const
    {
        Kkt u = solve_once(bx, by, bz);
        for (int k = 0; k < 3; ++k)
        {
            RVec ex = bx - GT_ * u.z;
            if (neq_ > 0)
                ex -= AT_ * u.y;
            const RVec ey = neq_ > 0 ? RVec(by - p_.A * u.x) : RVec::Zero(0);
            const RVec ez = bz - (p_.G * u.x - apply_wtw(u.z));
            const double err = std::max({ex.lpNorm<Eigen::Infinity>(), neq_ > 0 ? ey.lpNorm<Eigen::Infinity>() : 0.0,
                                         ez.lpNorm<Eigen::Infinity>()});
            const double ref = std::max({1.0, bx.lpNorm<Eigen::Infinity>(),
                                         neq_ > 0 ? by.lpNorm<Eigen::Infinity>() : 0.0, bz.lpNorm<Eigen::Infinity>()});
            if (err <= 1e-14 * ref)
                break;
            const Kkt du = solve_once(ex, ey, ez);
            u.x += du.x;
            u.y += du.y;
            u.z += du.z;
        }
        return u;
    }

    const StandardForm &p_;
    SolverSettings st_;
    int n_ = 0, m_ = 0, neq_ = 0, nu_ = 0;
    std::vector<Cone> cones_;
    SpMat GT_, AT_;
    Eigen::LLT<RMat> llt_;
    RMat HinvAT_;
    Eigen::LLT<RMat> schur_;
};

ConicResult Solver::run()
{
    ConicResult res;
    const RVec &c = p_.c;
    const RVec &b = p_.b;
    const RVec &h = p_.h;
    const double resx0 = std::max(1.0, c.norm());
    const double resy0 = std::max(1.0, b.norm());
    const double resz0 = std::max(1.0, h.norm());
    const double tol = st_.tolerance;
    const RVec e = identity();

    // starting point from two least-squares systems with W = I
    for (auto &cone : cones_)
    {
        switch (cone.kind)
        {
        case ConeKind::NonNegative:
            cone.d = RVec::Ones(cone.size);
            break;
        case ConeKind::SecondOrder:
            cone.w = RVec::Zero(cone.size);
            cone.w[0] = 1.0;
            cone.beta = 1.0;
            break;
        case ConeKind::HermitianPsd:
            cone.R = CMat::Identity(cone.dim, cone.dim);
            cone.Rinv = cone.R;
            cone.lam = RVec::Ones(cone.dim);
            cone.Mb = RMat::Identity(cone.size, cone.size);
            break;
        }
    }
    if (!factor())
    {
        res.status = ConicStatus::NumericalFailure;
        return res;
    }
    const Kkt primal = solve_kkt(RVec::Zero(n_), b, h);
    const Kkt dual = solve_kkt(-c, RVec::Zero(neq_), RVec::Zero(m_));
    RVec x = primal.x;
    RVec s = -primal.z;
    RVec y = dual.y;
    RVec z = dual.z;
    {
        const double ts = max_violation(s);
        if (ts >= -1e-8 * std::max(1.0, s.norm()))
            s += (1.0 + std::max(ts, 0.0)) * e;
        const double tz = max_violation(z);
        if (tz >= -1e-8 * std::max(1.0, z.norm()))
            z += (1.0 + std::max(tz, 0.0)) * e;
    }
    double tau = 1.0, kappa = 1.0;

    struct Snapshot
    {
        RVec x, y, z, s;
        double tau;
        double pres, dres, gap, relgap, pcost;
    };
    std::optional<Snapshot> last;
    double best_merit = kInf;
    RVec lam;
    int it = 0;
    bool broke = false;

    for (; it <= st_.max_iterations; ++it)
    {
        if (!compute_scaling(s, z, lam))
        {
            broke = true;
            break;
        }
        RVec rx = GT_ * z + c * tau;
        if (neq_ > 0)
            rx += AT_ * y;
        const RVec ry = neq_ > 0 ? RVec(b * tau - p_.A * x) : RVec::Zero(0);
        const RVec rz = s + p_.G * x - h * tau;
        const double cx = c.dot(x), by = neq_ > 0 ? b.dot(y) : 0.0, hz = h.dot(z);
        const double rt = kappa + cx + by + hz;
        const double gap = s.dot(z);
        const double mu = (gap + tau * kappa) / (nu_ + 1);

        const double pres = std::max(ry.size() ? ry.norm() / resy0 : 0.0, rz.norm() / resz0) / tau;
        const double dres = rx.norm() / resx0 / tau;
        const double pcost = cx / tau, dcost = -(by + hz) / tau;
        const double agap = gap / (tau * tau);
        double relgap = kInf;
        if (pcost < 0.0)
            relgap = agap / -pcost;
        else if (dcost > 0.0)
            relgap = agap / dcost;
        if (!std::isfinite(pres) || !std::isfinite(dres) || !std::isfinite(agap))
        {
            broke = true;
            break;
        }
        // keep the most accurate iterate; late steps can lose accuracy on ill-conditioned instances
        const double merit = std::max({pres, dres, std::min(agap, relgap)});
        if (merit < best_merit)
        {
            best_merit = merit;
            last = Snapshot{x, y, z, s, tau, pres, dres, agap, relgap, pcost};
        }
        else if (best_merit <= 1e-6 && merit > 100.0 * best_merit)
        {
            broke = true;
            break;
        }
        if (st_.verbose)
            std::fprintf(stderr, "%3d  pcost % .9e  dcost % .9e  gap %.2e  pres %.2e  dres %.2e  k/t %.2e\n", it, pcost,
                         dcost, agap, pres, dres, kappa / tau);

        res.iterations = it;
        if (pres <= tol && dres <= tol && (agap <= tol || relgap <= tol))
        {
            last = Snapshot{x, y, z, s, tau, pres, dres, agap, relgap, pcost};
            res.status = ConicStatus::Optimal;
            break;
        }
        if (hz + by < 0.0)
        {
            RVec ay = GT_ * z;
            if (neq_ > 0)
                ay += AT_ * y;
            if (ay.norm() / resx0 / -(hz + by) <= tol)
            {
                res.status = ConicStatus::Infeasible;
                res.y = y / -(hz + by);
                res.z = z / -(hz + by);
                res.x = RVec::Zero(n_);
                res.s = RVec::Zero(m_);
                res.iterations = it;
                return res;
            }
        }
        if (cx < 0.0)
        {
            const RVec gs = p_.G * x + s;
            const double ax = neq_ > 0 ? (p_.A * x).norm() / resy0 : 0.0;
            if (std::max(ax, gs.norm() / resz0) / -cx <= tol)
            {
                res.status = ConicStatus::Unbounded;
                res.x = x / -cx;
                res.s = s / -cx;
                res.y = RVec::Zero(neq_);
                res.z = RVec::Zero(m_);
                res.iterations = it;
                return res;
            }
        }
        if (it == st_.max_iterations)
            break;

        if (!factor())
        {
            broke = true;
            break;
        }
        const Kkt d1 = solve_kkt(-c, b, h);
        const double den_base = kappa / tau - c.dot(d1.x) - (neq_ > 0 ? b.dot(d1.y) : 0.0) - h.dot(d1.z);

        const RVec ll = jordan(lam, lam);
        struct Step
        {
            RVec dx, dy, dz, dss, dzs;
            double dtau, dkappa;
        };
        auto direction = [&](double sigma, const RVec &ds_target, double dg) {
            const RVec xi = jordan_solve(lam, ds_target);
            const Kkt d2 = solve_kkt(-(1.0 - sigma) * rx, (1.0 - sigma) * ry, -(1.0 - sigma) * rz - apply(Op::WT, xi));
            const double num = (1.0 - sigma) * rt + dg / tau + c.dot(d2.x) + (neq_ > 0 ? b.dot(d2.y) : 0.0) + h.dot(d2.z);
            Step st;
            st.dtau = num / den_base;
            st.dx = d2.x + st.dtau * d1.x;
            st.dy = d2.y + st.dtau * d1.y;
            st.dz = d2.z + st.dtau * d1.z;
            st.dkappa = (dg - kappa * st.dtau) / tau;
            st.dzs = apply(Op::W, st.dz);
            st.dss = xi - st.dzs;
            return st;
        };
        auto step_length = [&](const Step &st) {
            double a = std::min(max_step(lam, st.dss), max_step(lam, st.dzs));
            if (st.dtau < 0.0)
                a = std::min(a, -tau / st.dtau);
            if (st.dkappa < 0.0)
                a = std::min(a, -kappa / st.dkappa);
            return a;
        };

        const Step aff = direction(0.0, -ll, -tau * kappa);
        const double a_aff = std::min(1.0, step_length(aff));
        const double sigma = std::pow(1.0 - a_aff, 3);
        const RVec ds_c = -ll + sigma * mu * e - jordan(aff.dss, aff.dzs);
        const double dg_c = -tau * kappa + sigma * mu - aff.dtau * aff.dkappa;
        const Step cor = direction(sigma, ds_c, dg_c);
        const double amax = step_length(cor);
        const double alpha = std::min(1.0, 0.99 * amax);
        if (!(alpha > 1e-12) || !std::isfinite(alpha))
        {
            broke = true;
            break;
        }

        x += alpha * cor.dx;
        y += alpha * cor.dy;
        z += alpha * cor.dz;
        s += alpha * apply(Op::WT, cor.dss);
        tau += alpha * cor.dtau;
        kappa += alpha * cor.dkappa;
        if (!(tau > 0.0) || !(kappa > 0.0))
        {
            broke = true;
            break;
        }
    }

    if (!last)
    {
        res.status = ConicStatus::NumericalFailure;
        res.x = RVec::Zero(n_);
        return res;
    }
    const Snapshot &snap = *last;
    res.x = snap.x / snap.tau;
    res.y = snap.y / snap.tau;
    res.z = snap.z / snap.tau;
    res.s = snap.s / snap.tau;
    res.primal_residual = snap.pres;
    res.dual_residual = snap.dres;
    res.relative_gap = std::min(snap.relgap, snap.gap / std::max(1.0, std::abs(snap.pcost)));
    res.objective = snap.pcost + p_.c0;
    if (res.status != ConicStatus::Optimal || broke)
    {
        constexpr double loose = 1e-6;
        if (res.status == ConicStatus::Optimal)
            ;
        else if (snap.pres <= loose && snap.dres <= loose && (snap.gap <= loose || snap.relgap <= loose))
        {
            res.status = ConicStatus::Optimal;
            res.reduced_accuracy = true;
        }
        else
        {
            res.status = ConicStatus::NumericalFailure;
        }
    }
    return res;
}

} // namespace

ConicResult solve(const StandardForm &problem, const SolverSettings &settings)
{
    Solver solver(problem, settings);
    return solver.run();
}

} // namespace starris::conic
