#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace ccsd {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void check_adjacency(const Mat& A, double tol = 0.0) {
  require(A.rows() == A.cols(), "adjacency must be square");
  require(A.isApprox(A.transpose(), tol), "adjacency must be symmetric");
  require(A.rows() == 0 || A.diagonal().cwiseAbs().maxCoeff() <= tol,
          "adjacency must have zero diagonal");
}

inline void check_adjacency_binary(const Mat& A) {
  check_adjacency(A);
  for (Eigen::Index i = 0; i < A.size(); ++i)
    require(A(i) == 0.0 || A(i) == 1.0, "adjacency must be binary");
}

inline constexpr const char* kVersion = "ccsd 0.1.0";

}  // namespace ccsd
