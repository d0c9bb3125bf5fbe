#include "swvm/qp.h"

#include <algorithm>
#include <cmath>

#include "swvm/errors.h"

namespace swvm {

WeightVector QpSolution::apply(const WeightVector& w) const {
  WeightVector out = w;
  out.add(step);
  return out;
}

QpSolution closed_form_update(const WeightVector& w, const UpdateConstraint& c) {
  QpSolution sol;
  sol.iterations = 1;
  const double norm = c.delta.squared_norm();
  if (norm == 0.0) {
    if (c.loss > 0.0) {
      throw InfeasibleError("constraint with empty delta and positive loss is infeasible");
    }
    sol.dual = {0.0};
    return sol;
  }
  const double tau = std::max(0.0, (c.loss - c.delta.dot(w)) / norm);
  sol.dual = {tau};
  sol.step = c.delta.scaled(tau);
  return sol;
}

QpSolution hildreth(const WeightVector& w, std::span<const UpdateConstraint> cs,
                    std::size_t max_iter, double tol) {
  if (cs.empty()) throw ContractViolation("hildreth: no constraints");
  if (max_iter == 0) throw ContractViolation("hildreth: max_iter must be positive");
  const std::size_t k = cs.size();

  // Margins are tracked through the Gram matrix instead of a dense w copy:
  // margin_c = w.delta_c + sum_d tau_d (delta_d . delta_c).
  std::vector<double> gram(k * k);
  std::vector<double> margin(k);
  for (std::size_t c = 0; c < k; ++c) {
    margin[c] = cs[c].delta.dot(w);
    for (std::size_t d = c; d < k; ++d) {
      gram[c * k + d] = gram[d * k + c] = cs[c].delta.dot(cs[d].delta);
    }
  }

  QpSolution sol;
  sol.dual.assign(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    if (gram[c * k + c] == 0.0 && cs[c].loss > 0.0) sol.skipped.push_back(c);
  }

  sol.converged = false;
  for (std::size_t pass = 1; pass <= max_iter; ++pass) {
    sol.iterations = pass;
    double largest = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double g = gram[c * k + c];
      if (g == 0.0) continue;
      const double updated =
          std::max(0.0, sol.dual[c] + (cs[c].loss - margin[c]) / g);
      const double change = updated - sol.dual[c];
      if (change == 0.0) continue;
      sol.dual[c] = updated;
      for (std::size_t d = 0; d < k; ++d) margin[d] += change * gram[d * k + c];
      largest = std::max(largest, std::abs(change) * std::max(1.0, g));
    }
    if (largest < tol) {
      sol.converged = true;
      break;
    }
  }

  std::vector<SparseVector> deltas;
  deltas.reserve(k);
  for (const auto& c : cs) deltas.push_back(c.delta);
  sol.step = SparseVector::combine(deltas, sol.dual);
  return sol;
}

}  // namespace swvm
