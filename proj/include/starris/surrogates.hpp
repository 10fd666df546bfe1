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

// Difference-of-convex rewrites, penalty functions and their first-order majorizers used by
// the penalty solver, plus rank-one extraction of lifted matrices.

#include "starris/core_model.hpp"

namespace starris
{

// 1/2||A+B||^2 - 1/2||A||^2 - 1/2||B||^2, which equals Tr(AB) for Hermitian A, B.
double trace_identity_pos(const CMat &A, const CMat &B);
// 1/2||A-B||^2 - 1/2||A||^2 - 1/2||B||^2, which equals -Tr(AB) for Hermitian A, B.
double trace_identity_neg(const CMat &A, const CMat &B);

// ||Q||_* - ||Q||_2; zero iff rank(Q) <= 1.
double rank_penalty(const CMat &Q);

struct Eigenpair
{
    double value = 0.0;
    CVec vector;
};

// Largest eigenvalue and a unit eigenvector. On a numerically repeated top eigenvalue the
// eigenvector of the lowest index among the tied ones is returned.
Eigenpair principal_eigenpair(const CMat &Q);

// ||Q||_* - (||Q^n||_2 + u^H (Q - Q^n) u), u the principal eigenvector of Q^n.
double sca_rank_surrogate(const CMat &Q, const CMat &Q_anchor);

// gamma Tr(Q H Wbar H^H) written as a DC function of (Q, Wbar).
double upsilon(const CMat &Q, const CMat &W_bar, const CMat &H, double gamma);
// -Tr(Q H W H^H) written as a DC function of (Q, W).
double pi_term(const CMat &Q, const CMat &W, const CMat &H);

struct QosSurrogates
{
    double upsilon_ub = 0.0;
    double pi_ub = 0.0;
};

// Convex majorizers of upsilon and pi_term linearized at (Q_anchor, W_anchor, W_bar_anchor).
// gamma = 0 makes the upsilon part vanish.
QosSurrogates sca_qos_surrogates(const CMat &Q, const CMat &W, const CMat &W_bar, const CMat &Q_anchor,
                                 const CMat &W_anchor, const CMat &W_bar_anchor, double gamma, const CMat &H);

// (1 - 2 b^n) b + (b^n)^2 >= b - b^2 with equality at b = b^n.
double binary_penalty_surrogate(double beta, double beta_anchor);

struct RankOneFactor
{
    CVec vector;           // sqrt(lambda_1) u_1
    double residual = 0.0; // lambda_2 / lambda_1, 0 for an exactly rank-one or zero matrix
};

RankOneFactor extract_rank_one(const CMat &X);

} // namespace starris
