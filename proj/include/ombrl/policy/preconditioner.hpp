// Copyright 2026 The ombrl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OMBRL_POLICY_PRECONDITIONER_HPP_
#define OMBRL_POLICY_PRECONDITIONER_HPP_

#include <algorithm>
#include <cmath>
#include <utility>

#include <Eigen/SVD>

#include "ombrl/common.hpp"

namespace ombrl {

// Lambda = g g^T + alpha J^T J + eps I, with g the gradient estimate and
// J = du/dphi (mH x n_phi).
//
// Lambda - eps I = U U^T with U = [g, sqrt(alpha) J^T] of width k = mH + 1.
// With U = Q R (Householder) and R = V S W^T,
//
//   Lambda = Q diag(S^2 + eps, eps, ..., eps) Q^T,    Q_full = [Q_r, Q_perp]
//
// so solves and extreme eigenvalues cost O(n_phi k^2) and never touch an
// n_phi x n_phi matrix.
class LowRankPreconditioner {
 public:
  LowRankPreconditioner(const Vec& grad, const Mat& du_dphi, double alpha, double epsilon)
      : n_(grad.size()), epsilon_(epsilon) {
    require(epsilon > 0.0 && std::isfinite(epsilon), "preconditioner: epsilon must be > 0");
    require(alpha >= 0.0 && std::isfinite(alpha), "preconditioner: alpha must be >= 0");
    require(du_dphi.cols() == grad.size(), "preconditioner: du/dphi column count != gradient length");
    const Eigen::Index k = 1 + (alpha > 0.0 ? du_dphi.rows() : 0);
    Mat u(n_, k);
    u.col(0) = grad;
    if (alpha > 0.0) u.rightCols(k - 1) = std::sqrt(alpha) * du_dphi.transpose();
    qr_.compute(u);
    rank_ = std::min(n_, k);
    const Mat r = qr_.matrixQR().topRows(rank_).template triangularView<Eigen::Upper>();
    svd_.compute(r, Eigen::ComputeThinU);
    // Squared singular values padded to the rank_ leading directions.
    s2_ = Vec::Zero(rank_);
    const Vec sv = svd_.singularValues();
    s2_.head(sv.size()) = sv.cwiseAbs2();
  }

  // Lambda^{-1} v.
  Vec solve(const Vec& v) const {
    require(v.size() == n_, "preconditioner: vector length mismatch");
    Vec w = qr_.householderQ().adjoint() * v;
    const Mat& left = svd_.matrixU();  // rank_ x rank_
    Vec top = left.transpose() * w.head(rank_);
    top = top.cwiseQuotient((s2_.array() + epsilon_).matrix());
    w.head(rank_) = left * top;
    w.tail(n_ - rank_) /= epsilon_;
    return qr_.householderQ() * w;
  }

  double lambda_min() const {
    if (rank_ < n_) return epsilon_;
    return epsilon_ + s2_.minCoeff();
  }
  double lambda_max() const { return epsilon_ + (s2_.size() > 0 ? s2_.maxCoeff() : 0.0); }
  double epsilon() const { return epsilon_; }

 private:
  Eigen::Index n_;
  Eigen::Index rank_ = 0;
  double epsilon_;
  Eigen::HouseholderQR<Mat> qr_;
  Eigen::BDCSVD<Mat> svd_;
  Vec s2_;
};

inline Vec preconditioner_solve(const Vec& grad, const Mat& du_dphi, double alpha, double epsilon) {
  return LowRankPreconditioner(grad, du_dphi, alpha, epsilon).solve(grad);
}

// Exact (lambda_min, lambda_max) of Lambda.
inline std::pair<double, double> preconditioner_spectrum(const Mat& du_dphi, const Vec& grad, double alpha,
                                                         double epsilon) {
  LowRankPreconditioner p(grad, du_dphi, alpha, epsilon);
  return {p.lambda_min(), p.lambda_max()};
}

}  // namespace ombrl

#endif  // OMBRL_POLICY_PRECONDITIONER_HPP_
