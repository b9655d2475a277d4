#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "qlap/linalg.hpp"

namespace qlap {

// Matrix-free linear operator on `qubits` qubits. Qubit 0 is the most
// significant bit of the basis index.
class QubitOperator {
 public:
  explicit QubitOperator(int qubits) : qubits_(qubits) {}
  virtual ~QubitOperator() = default;

  int qubits() const { return qubits_; }
  std::size_t dim() const { return std::size_t{1} << qubits_; }

  // out = Op in. `in` and `out` never alias.
  virtual void apply(const cplx* in, cplx* out) const = 0;
  virtual void apply_adjoint(const cplx* in, cplx* out) const = 0;

  CVector operator*(const CVector& x) const;
  CVector adjoint_times(const CVector& x) const;

 private:
  int qubits_;
};

using OperatorPtr = std::shared_ptr<const QubitOperator>;

OperatorPtr dense_operator(CMatrix u);
OperatorPtr identity_operator(int qubits);
// Householder-form unitary mapping |0> to psi.
OperatorPtr state_preparation_operator(const CVector& psi);
// Places op on the listed qubits of a `total`-qubit register. positions[k]
// receives op's k-th qubit.
OperatorPtr on_qubits(OperatorPtr op, int total, std::vector<int> positions);
// I_high (x) op (x) I_low.
OperatorPtr embed(OperatorPtr op, int high, int low);
// ops[0] is applied first.
OperatorPtr product(std::vector<OperatorPtr> ops);
OperatorPtr adjoint(OperatorPtr op);
OperatorPtr scaled(OperatorPtr op, cplx phase);
// sum_j |j><j| (x) U_j on [control | target]; missing slots act as identity.
OperatorPtr select_operator(int control_qubits, std::vector<OperatorPtr> branches);
// Exchanges two disjoint, equal-width qubit ranges.
OperatorPtr swap_ranges(int total, int first_a, int first_b, int width);
// (2|0..0><0..0| - I) on the leading `ancillas` qubits, identity on the rest.
OperatorPtr zero_reflection(int total, int ancillas);
// |c>|x> -> |c> U^(c is 1) |x>, control is the single leading qubit.
OperatorPtr controlled(OperatorPtr op);

CMatrix materialize(const QubitOperator& op);
// Top-left 2^system block: columns are op|0^a>|i>.
CMatrix top_left_block(const QubitOperator& op, int ancillas);
// Exact check when small, random probe vectors otherwise.
double unitarity_defect(const QubitOperator& op, std::uint64_t seed = 7);

}  // namespace qlap
