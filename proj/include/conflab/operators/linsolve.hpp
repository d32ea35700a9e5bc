#pragma once

#include <Eigen/CholmodSupport>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <memory>

#include "conflab/metrics/base.hpp"

namespace conflab::operators {

using metrics::Field;
using metrics::Index;
using metrics::SpMat;

// Symmetric sparse factorization. Banded (radial) systems use SimplicialLDLT;
// 3-D periodic systems use CHOLMOD's supernodal Cholesky.
class SymmetricSolver {
 public:
  // Returns false when the matrix is not positive definite (or singular).
  bool factor_spd(const SpMat& A) {
    lu_.reset();
    if (use_cholmod(A)) {
      ldlt_.reset();
      if (!llt_) {
        llt_ = std::make_unique<Eigen::CholmodSupernodalLLT<SpMat, Eigen::Lower>>();
        llt_->cholmod().print = 0;  // indefinite trial shifts are expected
      }
      llt_->compute(A);
      ok_ = llt_->info() == Eigen::Success;
      return ok_;
    }
    llt_.reset();
    if (!ldlt_) ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SpMat>>();
    ldlt_->compute(A);
    ok_ = ldlt_->info() == Eigen::Success && ldlt_->vectorD().size() == A.rows() &&
          (A.rows() == 0 || ldlt_->vectorD().minCoeff() > 0.0);
    return ok_;
  }

  // Any nonsingular symmetric matrix: LDLT first, sparse LU if that breaks down.
  bool factor_general(const SpMat& A) {
    llt_.reset();
    if (!use_cholmod(A)) {
      if (!ldlt_) ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SpMat>>();
      ldlt_->compute(A);
      if (ldlt_->info() == Eigen::Success && (A.rows() == 0 || ldlt_->vectorD().cwiseAbs().minCoeff() > 0.0)) {
        lu_.reset();
        ok_ = true;
        return true;
      }
    }
    ldlt_.reset();
    lu_ = std::make_unique<Eigen::SparseLU<SpMat>>();
    lu_->compute(A);
    ok_ = lu_->info() == Eigen::Success;
    return ok_;
  }

  bool ok() const { return ok_; }

  Field solve(const Field& b) const {
    if (!ok_) throw Error(ErrorCode::NoConvergence, "solve on a failed factorization");
    if (lu_) return lu_->solve(b);
    if (llt_) return llt_->solve(b);
    return ldlt_->solve(b);
  }

 private:
  static bool use_cholmod(const SpMat& A) {
    return A.rows() > 1500 && A.nonZeros() > 4 * A.rows();
  }

  std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt_;
  std::unique_ptr<Eigen::CholmodSupernodalLLT<SpMat, Eigen::Lower>> llt_;
  std::unique_ptr<Eigen::SparseLU<SpMat>> lu_;
  bool ok_ = false;
};

}  // namespace conflab::operators
