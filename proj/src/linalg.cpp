#include "tsiv/linalg.hpp"

#include <string>

namespace tsiv {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::DegenerateMoments: return "DegenerateMoments";
    case ErrorCode::NonPositiveDefiniteWeight: return "NonPositiveDefiniteWeight";
    case ErrorCode::OmegaSingular: return "OmegaSingular";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::LdNotPsd: return "LdNotPsd";
    case ErrorCode::NoCompliers: return "NoCompliers";
    case ErrorCode::MonotonicityViolated: return "MonotonicityViolated";
    case ErrorCode::NoMatches: return "NoMatches";
    case ErrorCode::SimulationAborted: return "SimulationAborted";
  }
  return "Unknown";
}

SpdFactor::SpdFactor(const Matrix& m, std::string_view name,
                     ErrorCode on_failure, double rcond_floor) {
  if (m.rows() == 0 || m.rows() != m.cols() || !m.allFinite()) {
    throw Error(on_failure, std::string(name) + " is empty, non-square or non-finite");
  }
  llt_.compute(m);
  if (llt_.info() != Eigen::Success) {
    throw Error(on_failure, std::string(name) + " is not positive definite");
  }
  const double rc = llt_.rcond();
  if (!(rc >= rcond_floor)) {
    throw Error(on_failure, std::string(name) + " is numerically singular (rcond " +
                                std::to_string(rc) + ")");
  }
}

Matrix SpdFactor::inverse() const {
  return llt_.solve(Matrix::Identity(size(), size()));
}

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

}  // namespace tsiv
