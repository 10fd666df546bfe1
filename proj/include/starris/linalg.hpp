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

#include "starris/core_model.hpp"

#include <random>

namespace starris::linalg
{

// Real coordinates of a Hermitian n x n matrix: the n diagonal entries followed by
// sqrt(2) Re X_ij, sqrt(2) Im X_ij for i < j in row-major order. The map is an isometry:
// hvec(X) . hvec(Y) = Re Tr(X Y).
int hvec_size(int n);
RVec hvec(const CMat &X);
void hvec_into(const CMat &X, Eigen::Ref<RVec> out);
CMat unhvec(const Eigen::Ref<const RVec> &v, int n);

// Recovers n from a hvec length; throws on a non-square length.
int hvec_dim(Eigen::Index length);

bool is_hermitian(const CMat &A, double tol = 1e-10);
CMat hermitian_part(const CMat &A);

// Eigenvalues ascending.
RVec eigenvalues(const CMat &A);

// ||A||_* and ||A||_2 for a Hermitian matrix (from its eigenvalues).
double nuclear_norm(const CMat &A);
double spectral_norm(const CMat &A);

// Standard circularly-symmetric complex Gaussian samples, unit variance per entry.
CVec crandn(Eigen::Index n, std::mt19937_64 &rng);
CMat crandn(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 &rng);

CMat random_hermitian(int n, std::mt19937_64 &rng);
CMat random_psd(int n, int rank, std::mt19937_64 &rng);

} // namespace starris::linalg
