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

#include "starris/surrogates.hpp"
#include "starris/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace starris
{

namespace
{

void require_hermitian(const CMat &A, const char *what)
{
    if (!linalg::is_hermitian(A, 1e-10))
        throw ContractViolation(std::string(what) + ": matrix is not Hermitian");
}

void require_same_shape(const CMat &A, const CMat &B, const char *what)
{
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw ContractViolation(std::string(what) + ": shape mismatch");
}

} // namespace

double trace_identity_pos(const CMat &A, const CMat &B)
{
    require_same_shape(A, B, "trace_identity_pos");
    require_hermitian(A, "trace_identity_pos");
    require_hermitian(B, "trace_identity_pos");
    return 0.5 * (A + B).squaredNorm() - 0.5 * A.squaredNorm() - 0.5 * B.squaredNorm();
}

double trace_identity_neg(const CMat &A, const CMat &B)
{
    require_same_shape(A, B, "trace_identity_neg");
    require_hermitian(A, "trace_identity_neg");
    require_hermitian(B, "trace_identity_neg");
    return 0.5 * (A - B).squaredNorm() - 0.5 * A.squaredNorm() - 0.5 * B.squaredNorm();
}

double rank_penalty(const CMat &Q)
{
    const RVec ev = linalg::eigenvalues(linalg::hermitian_part(Q)).cwiseAbs();
    return std::max(0.0, ev.sum() - ev.maxCoeff());
}

Eigenpair principal_eigenpair(const CMat &Q)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(linalg::hermitian_part(Q));
    const int n = static_cast<int>(Q.rows());
    const RVec &ev = es.eigenvalues();
    int pick = n - 1;
    const double tie = 1e-9;
    CVec u = es.eigenvectors().col(pick);
    if (n > 1 && ev[n - 1] - ev[n - 2] < tie)
    {
        // pick the coordinate direction with the lowest index that the top eigenspace reaches
        int lo = n - 1;
        while (lo > 0 && ev[n - 1] - ev[lo - 1] < tie)
            --lo;
        const CMat basis = es.eigenvectors().rightCols(n - lo);
        for (int i = 0; i < n; ++i)
        {
            const CVec proj = basis * basis.row(i).adjoint();
            if (proj.norm() > 1e-6)
            {
                u = proj.normalized();
                break;
            }
        }
    }
    // fix the global phase so that the largest-magnitude entry is real positive
    Eigen::Index imax = 0;
    u.cwiseAbs().maxCoeff(&imax);
    if (std::abs(u[imax]) > 0.0)
        u *= std::conj(u[imax]) / std::abs(u[imax]);
    return {ev[n - 1], u};
}

double sca_rank_surrogate(const CMat &Q, const CMat &Q_anchor)
{
    require_same_shape(Q, Q_anchor, "sca_rank_surrogate");
    const auto top = principal_eigenpair(Q_anchor);
    const double lin = top.value + top.vector.dot((Q - Q_anchor) * top.vector).real();
    return linalg::nuclear_norm(linalg::hermitian_part(Q)) - lin;
}

double upsilon(const CMat &Q, const CMat &W_bar, const CMat &H, double gamma)
{
    const CMat X = H * W_bar * H.adjoint();
    return gamma * trace_identity_pos(Q, linalg::hermitian_part(X));
}

double pi_term(const CMat &Q, const CMat &W, const CMat &H)
{
    const CMat X = H * W * H.adjoint();
    return trace_identity_neg(Q, linalg::hermitian_part(X));
}

QosSurrogates sca_qos_surrogates(const CMat &Q, const CMat &W, const CMat &W_bar, const CMat &Q_anchor,
                                 const CMat &W_anchor, const CMat &W_bar_anchor, double gamma, const CMat &H)
{
    if (gamma < 0.0)
        throw ContractViolation("sca_qos_surrogates: gamma must be nonnegative");
    const CMat X = H * W * H.adjoint();
    const CMat Xb = H * W_bar * H.adjoint();
    const CMat Xn = H * W_anchor * H.adjoint();
    const CMat Xbn = H * W_bar_anchor * H.adjoint();
    auto re_tr = [](const CMat &A, const CMat &B) { return (A.adjoint() * B).trace().real(); };
    QosSurrogates s;
    if (gamma > 0.0)
        s.upsilon_ub = 0.5 * gamma * (Q + Xb).squaredNorm() + 0.5 * gamma * Q_anchor.squaredNorm() -
                       gamma * re_tr(Q_anchor, Q) + 0.5 * gamma * Xbn.squaredNorm() - gamma * re_tr(Xbn, Xb);
    s.pi_ub = 0.5 * (Q - X).squaredNorm() + 0.5 * Q_anchor.squaredNorm() - re_tr(Q_anchor, Q) +
              0.5 * Xn.squaredNorm() - re_tr(Xn, X);
    return s;
}

double binary_penalty_surrogate(double beta, double beta_anchor)
{
    return (1.0 - 2.0 * beta_anchor) * beta + beta_anchor * beta_anchor;
}

RankOneFactor extract_rank_one(const CMat &X)
{
    RankOneFactor out;
    const int n = static_cast<int>(X.rows());
    if (n == 0 || X.cwiseAbs().maxCoeff() == 0.0)
    {
        out.vector = CVec::Zero(n);
        return out;
    }
    Eigen::SelfAdjointEigenSolver<CMat> es(linalg::hermitian_part(X));
    const RVec &ev = es.eigenvalues();
    const double l1 = std::max(ev[n - 1], 0.0);
    if (l1 <= 0.0)
    {
        out.vector = CVec::Zero(n);
        return out;
    }
    out.vector = std::sqrt(l1) * principal_eigenpair(X).vector;
    out.residual = n > 1 ? std::max(ev[n - 2], 0.0) / l1 : 0.0;
    return out;
}

} // namespace starris
