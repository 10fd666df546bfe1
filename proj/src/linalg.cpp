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

#include "starris/linalg.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace starris::linalg
{

int hvec_size(int n)
{
    return n * n;
}

int hvec_dim(Eigen::Index length)
{
    const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(length))));
    if (static_cast<Eigen::Index>(n) * n != length)
        throw ContractViolation("hvec length is not a perfect square");
    return n;
}

void hvec_into(const CMat &X, Eigen::Ref<RVec> out)
{
    const int n = static_cast<int>(X.rows());
    int p = n;
    for (int i = 0; i < n; ++i)
        out[i] = X(i, i).real();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
        {
            // average the two triangles so slightly non-Hermitian input maps to its Hermitian part
            const cd x = 0.5 * (X(i, j) + std::conj(X(j, i)));
            out[p++] = std::numbers::sqrt2 * x.real();
            out[p++] = std::numbers::sqrt2 * x.imag();
        }
}

RVec hvec(const CMat &X)
{
    RVec out(hvec_size(static_cast<int>(X.rows())));
    hvec_into(X, out);
    return out;
}

CMat unhvec(const Eigen::Ref<const RVec> &v, int n)
{
    CMat X(n, n);
    int p = n;
    for (int i = 0; i < n; ++i)
        X(i, i) = v[i];
    constexpr double inv = 1.0 / std::numbers::sqrt2;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
        {
            const cd x(inv * v[p], inv * v[p + 1]);
            p += 2;
            X(i, j) = x;
            X(j, i) = std::conj(x);
        }
    return X;
}

bool is_hermitian(const CMat &A, double tol)
{
    if (A.rows() != A.cols())
        return false;
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    return (A - A.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

CMat hermitian_part(const CMat &A)
{
    return 0.5 * (A + A.adjoint());
}

RVec eigenvalues(const CMat &A)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(A, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double nuclear_norm(const CMat &A)
{
    return eigenvalues(A).cwiseAbs().sum();
}

double spectral_norm(const CMat &A)
{
    return eigenvalues(A).cwiseAbs().maxCoeff();
}

CVec crandn(Eigen::Index n, std::mt19937_64 &rng)
{
    std::normal_distribution<double> nd(0.0, std::numbers::sqrt2 / 2.0);
    CVec out(n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const double re = nd(rng);
        const double im = nd(rng);
        out[i] = cd(re, im);
    }
    return out;
}

CMat crandn(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 &rng)
{
    std::normal_distribution<double> nd(0.0, std::numbers::sqrt2 / 2.0);
    CMat out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
        {
            const double re = nd(rng);
            const double im = nd(rng);
            out(i, j) = cd(re, im);
        }
    return out;
}

CMat random_hermitian(int n, std::mt19937_64 &rng)
{
    const CMat A = crandn(n, n, rng);
    return hermitian_part(A);
}

CMat random_psd(int n, int rank, std::mt19937_64 &rng)
{
    const CMat B = crandn(n, rank, rng);
    return B * B.adjoint();
}

} // namespace starris::linalg
