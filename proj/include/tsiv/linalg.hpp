#pragma once

#include <Eigen/Cholesky>
#include <string_view>

#include "tsiv/core_model.hpp"
#include "tsiv/error.hpp"

namespace tsiv {

// Cholesky factor of a symmetric positive definite matrix. Construction
// throws when the matrix is not PD or its reciprocal condition estimate is
// below `rcond_floor`.
class SpdFactor {
 public:
  SpdFactor(const Matrix& m, std::string_view name,
            ErrorCode on_failure = ErrorCode::DegenerateMoments,
            double rcond_floor = kSingularRcond);

  Vector solve(const Vector& rhs) const { return llt_.solve(rhs); }
  Matrix solve(const Matrix& rhs) const { return llt_.solve(rhs); }
  // M^{-1} formed by solving against the identity.
  Matrix inverse() const;
  double rcond() const { return llt_.rcond(); }
  Eigen::Index size() const { return llt_.rows(); }

 private:
  Eigen::LLT<Matrix> llt_;
};

bool is_symmetric(const Matrix& m, double tol = 1e-10);

}  // namespace tsiv
