#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qlap/linalg.hpp"

namespace qlap {

using Label = std::uint64_t;
using BranchKey = std::vector<Label>;

enum class RegisterKind { index, coefficient, arithmetic, flag };

// Unsigned fixed point: `bits` total, `int_bits` of them integral.
struct FixedPointSpec {
  int bits = 16;
  int int_bits = 1;

  int frac_bits() const { return bits - int_bits; }
  Label max_label() const;
  double resolution() const;  // 2^-frac_bits
  double max_value() const;
  // Round to nearest, ties to even. Throws overflow outside [0, max_value].
  Label encode(double v) const;
  double decode(Label x) const;
  void validate() const;
};

struct Register {
  std::string name;
  int qubits = 1;
  RegisterKind kind = RegisterKind::index;
  std::optional<FixedPointSpec> fixed;
};

class RegisterLayout {
 public:
  RegisterLayout() = default;
  explicit RegisterLayout(std::vector<Register> regs);

  const std::vector<Register>& registers() const { return regs_; }
  const Register& at(const std::string& name) const;
  std::size_t position(const std::string& name) const;
  bool contains(const std::string& name) const;
  bool is_arithmetic(const std::string& name) const;

  int total_qubits() const { return total_; }
  int dense_qubits() const { return dense_; }
  std::size_t dense_dim() const { return std::size_t{1} << dense_; }
  std::size_t arithmetic_count() const { return arith_names_.size(); }
  // Slot of an arithmetic register inside a BranchKey.
  std::size_t slot(const std::string& name) const;
  // Bit shift of a dense register inside the dense index.
  int dense_shift(const std::string& name) const;
  std::uint64_t dense_value(std::size_t dense_index, const std::string& name) const;

 private:
  std::vector<Register> regs_;
  std::vector<std::string> arith_names_;
  std::vector<int> shift_;   // per register: dense shift, or -1
  std::vector<int> slot_;    // per register: arithmetic slot, or -1
  int total_ = 0;
  int dense_ = 0;
};

struct DensityOperator {
  CMatrix matrix;
  std::vector<std::string> subsystem;

  // Hermitian, unit trace, PSD (each within tol).
  void validate(double tol = 1e-10) const;
};

// Hybrid state: arithmetic registers hold one basis label per branch, the
// remaining registers are a dense amplitude vector per branch.
class SimState {
 public:
  using ControlValues = std::span<const std::uint64_t>;
  using BranchUnitary =
      std::function<std::optional<CMatrix>(const BranchKey&, ControlValues)>;
  using LabelMap = std::function<void(BranchKey&, ControlValues)>;
  using BasisPredicate = std::function<bool(const BranchKey&, std::size_t)>;

  SimState() = default;
  explicit SimState(RegisterLayout layout);

  const RegisterLayout& layout() const { return layout_; }
  const std::map<BranchKey, CVector>& branches() const { return branches_; }
  std::size_t branch_count() const { return branches_.size(); }

  double norm() const;
  void normalize();
  // Replaces the state by a single zero-label branch holding `dense`.
  void set_dense(const CVector& dense);
  Label label(const BranchKey& key, const std::string& reg) const;

  // u acts on the concatenation of `targets` (first target most significant).
  void apply_unitary(const CMatrix& u, const std::vector<std::string>& targets);
  // For every value of the dense control registers, apply u_for(values)
  // (nullopt means identity) on the targets.
  void apply_controlled(const std::vector<std::string>& controls,
                        const std::function<std::optional<CMatrix>(ControlValues)>& u_for,
                        const std::vector<std::string>& targets);
  // As above, the unitary may also depend on the branch labels.
  void apply_branch_controlled(const std::vector<std::string>& controls,
                               const BranchUnitary& u_for,
                               const std::vector<std::string>& targets);
  // Relabels branches; the map may read dense control values. Must be a
  // bijection on basis states (XOR / modular add style updates).
  void transform_labels(const std::vector<std::string>& controls, const LabelMap& fn);

  // Weight of the basis states selected by pred.
  double weight(const BasisPredicate& pred) const;
  // Zeroes everything outside pred (no renormalisation).
  void project(const BasisPredicate& pred);
  // Drops branches whose squared norm is below tol.
  void prune(double tol = 1e-30);

  // Flat statevector over all registers in layout order.
  CVector flatten() const;
  static SimState from_flat(const RegisterLayout& layout, const CVector& flat);

  // Born-rule marginal of one register (dense or arithmetic).
  std::map<std::uint64_t, double> marginal(const std::string& reg) const;

  std::string to_json() const;

 private:
  RegisterLayout layout_;
  std::map<BranchKey, CVector> branches_;
};

DensityOperator partial_trace(const SimState& state, const std::vector<std::string>& keep);

std::map<std::uint64_t, std::size_t> sample_measurement(const SimState& state,
                                                        const std::string& reg,
                                                        std::size_t shots,
                                                        std::uint64_t seed);

// Inverse-CDF sampling from a discrete distribution with a seeded engine.
std::vector<std::size_t> sample_indices(const std::vector<double>& probs, std::size_t shots,
                                        std::uint64_t seed);

}  // namespace qlap
