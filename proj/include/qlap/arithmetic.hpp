#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qlap/qsim.hpp"

namespace qlap {

// Label-level fixed point operations, round to nearest even.
Label fx_convert(Label a, const FixedPointSpec& sa, const FixedPointSpec& so);
Label fx_multiply(Label a, const FixedPointSpec& sa, Label b, const FixedPointSpec& sb,
                  const FixedPointSpec& so);
Label fx_add(Label a, const FixedPointSpec& sa, Label b, const FixedPointSpec& sb,
             const FixedPointSpec& so);
// Horner evaluation of sum_{j<=order} (-lambda x)^j / j! with two unsigned
// accumulators standing in for the sign. Result clamped at zero.
Label fx_exp_neg_lambda(Label x, const FixedPointSpec& sx, const FixedPointSpec& so,
                        double lambda, int order);

// (lambda x)^(k+1)/(k+1)! + k 2^-frac
double exp_gate_error_bound(double x, double lambda, int order, const FixedPointSpec& so);
// Smallest order whose series remainder at lambda*max_x is below one ulp of so.
int exp_order_for(double lambda_max_x, const FixedPointSpec& so);
// Narrowest integer part holding max_value at the given total width.
FixedPointSpec spec_for_range(double max_value, int bits);

// State-level gates. Outputs are XORed into zeroed registers; the uncompute
// forms check the register holds the expected value and clear it.
void qma_multiply(SimState& s, const std::string& a, const std::string& b, const std::string& out);
void qma_multiply_uncompute(SimState& s, const std::string& a, const std::string& b,
                            const std::string& out);
// b <- a + b
void qma_add(SimState& s, const std::string& a, const std::string& b);
// b <- b - a
void qma_add_uncompute(SimState& s, const std::string& a, const std::string& b);
// out <- product of the first `count(ctrl)` factors, 1.0 for none. The count
// is read from a dense control register when one is named.
void qma_power(SimState& s, const std::vector<std::string>& factors, const std::string& count_reg,
               const std::string& out);
void qma_power_uncompute(SimState& s, const std::vector<std::string>& factors,
                         const std::string& count_reg, const std::string& out);
void exp_neg_lambda_gate(SimState& s, const std::string& x, const std::string& out,
                         double lambda, int order);
void exp_neg_lambda_uncompute(SimState& s, const std::string& x, const std::string& out,
                              double lambda, int order);

enum class RotationMode { amplitude, sqrt_amplitude };

using DenseCondition = std::vector<std::pair<std::string, std::uint64_t>>;

// Rotates `ancilla` from |0> to a|0> + sqrt(1-a^2)|1>, a = v/C (amplitude)
// or a = sqrt(v) (sqrt_amplitude), v the control label. Only basis states
// matching `when` are touched.
void controlled_rotation(SimState& s, const std::string& control, const std::string& ancilla,
                         double scale, RotationMode mode, const DenseCondition& when = {});
void controlled_rotation_uncompute(SimState& s, const std::string& control,
                                   const std::string& ancilla, double scale, RotationMode mode,
                                   const DenseCondition& when = {});

}  // namespace qlap
