#ifndef SWVM_QP_H_
#define SWVM_QP_H_

#include <cstddef>
#include <span>
#include <vector>

#include "swvm/sparse.h"

namespace swvm {

// One row of  min ||w - w0||^2  s.t.  w . delta >= loss.
struct UpdateConstraint {
  SparseVector delta;
  double loss = 0.0;
};

struct QpSolution {
  std::vector<double> dual;  // tau_c >= 0
  // sum_c tau_c * delta_c, so w_next = w + step.
  SparseVector step;
  std::size_t iterations = 0;
  bool converged = true;
  // Constraints with an empty delta and positive loss (no w satisfies them).
  std::vector<std::size_t> skipped;

  WeightVector apply(const WeightVector& w) const;
};

inline constexpr std::size_t kHildrethMaxIter = 10'000;
inline constexpr double kHildrethTolerance = 1e-8;

// tau = max(0, (loss - w.delta) / ||delta||^2). Throws InfeasibleError for an
// empty delta with positive loss.
QpSolution closed_form_update(const WeightVector& w, const UpdateConstraint& c);

// Hildreth's cyclic dual coordinate ascent. Stops once a full pass moves no
// constraint margin by more than tol, or after max_iter passes (converged is
// then false and the last iterate is returned).
QpSolution hildreth(const WeightVector& w, std::span<const UpdateConstraint> constraints,
                    std::size_t max_iter = kHildrethMaxIter,
                    double tol = kHildrethTolerance);

}  // namespace swvm

#endif  // SWVM_QP_H_
