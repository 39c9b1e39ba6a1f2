// Copyright 2026 The speedobs Authors
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

// Small linear-algebra helpers shared by every module.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace speedobs {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Induced 2-norm (largest singular value).
inline double spectral_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  if (a.cols() == 1) return a.norm();
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

inline bool all_finite(const Mat& a) { return a.allFinite(); }

inline void require_size(const Vec& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw std::invalid_argument(std::string(what) + ": expected dimension " +
                                std::to_string(n) + ", got " +
                                std::to_string(v.size()));
  }
}

inline void require_finite(const Mat& a, const char* what) {
  if (!a.allFinite()) {
    throw std::domain_error(std::string(what) + ": non-finite entry");
  }
}

/// Euclidean basis vector e_i (zero-based index).
inline Vec unit(Eigen::Index n, Eigen::Index i) {
  Vec e = Vec::Zero(n);
  e(i) = 1.0;
  return e;
}

}  // namespace speedobs
