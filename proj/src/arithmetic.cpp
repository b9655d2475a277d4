#include "qlap/arithmetic.hpp"

#include <cmath>

#include "qlap/error.hpp"

namespace qlap {

namespace {

using u128 = unsigned __int128;

int bit_length(u128 x) {
  int n = 0;
  while (x) {
    x >>= 1;
    ++n;
  }
  return n;
}

u128 shift_round(u128 x, int s) {
  if (s <= 0) {
    require(bit_length(x) - s <= 126, ErrorKind::overflow, "fixed point intermediate overflow");
    return x << (-s);
  }
  if (s >= 127) return 0;
  const u128 q = x >> s;
  const u128 r = x & ((u128{1} << s) - 1);
  const u128 half = u128{1} << (s - 1);
  if (r > half || (r == half && (q & 1))) return q + 1;
  return q;
}

u128 div_round(u128 num, u128 den) {
  const u128 q = num / den, r = num % den;
  const u128 twice = r << 1;
  if (twice > den || (twice == den && (q & 1))) return q + 1;
  return q;
}

Label fit(u128 x, const FixedPointSpec& so, const char* what) {
  require(x <= so.max_label(), ErrorKind::overflow,
          std::string(what) + " overflows a " + std::to_string(so.bits) + "-bit register with " +
              std::to_string(so.int_bits) + " integer bits");
  return static_cast<Label>(x);
}

// round(lambda * X * 2^(fo - fx) / j), exact in the double lambda.
u128 scaled_quotient(double lambda, Label x, int fx, int fo, int j) {
  int e = 0;
  const double fr = std::frexp(lambda, &e);
  const auto mant = static_cast<std::uint64_t>(std::ldexp(fr, 53));
  const u128 num = static_cast<u128>(mant) * x;
  const int sh = e - 53 + fo - fx;
  if (sh >= 0) {
    require(bit_length(num) + sh <= 126, ErrorKind::overflow, "exp gate constant overflow");
    return div_round(num << sh, static_cast<u128>(j));
  }
  require(-sh + bit_length(static_cast<u128>(j)) <= 126, ErrorKind::overflow,
          "exp gate constant underflow");
  return div_round(num, static_cast<u128>(j) << (-sh));
}

}  // namespace

Label fx_convert(Label a, const FixedPointSpec& sa, const FixedPointSpec& so) {
  return fit(shift_round(a, sa.frac_bits() - so.frac_bits()), so, "conversion");
}

Label fx_multiply(Label a, const FixedPointSpec& sa, Label b, const FixedPointSpec& sb,
                  const FixedPointSpec& so) {
  const u128 prod = static_cast<u128>(a) * b;
  return fit(shift_round(prod, sa.frac_bits() + sb.frac_bits() - so.frac_bits()), so, "product");
}

Label fx_add(Label a, const FixedPointSpec& sa, Label b, const FixedPointSpec& sb,
             const FixedPointSpec& so) {
  const u128 x = shift_round(a, sa.frac_bits() - so.frac_bits());
  const u128 y = shift_round(b, sb.frac_bits() - so.frac_bits());
  return fit(x + y, so, "sum");
}

Label fx_exp_neg_lambda(Label x, const FixedPointSpec& sx, const FixedPointSpec& so,
                        double lambda, int order) {
  require(lambda > 0 && std::isfinite(lambda), ErrorKind::input, "lambda must be positive");
  require(order >= 0, ErrorKind::input, "series order must be nonnegative");
  require(so.int_bits >= 1, ErrorKind::contract, "exp gate output needs an integer bit");
  const int fo = so.frac_bits();
  const u128 one = u128{1} << fo;
  // h = pos - neg, starting from h_{k+1} = 1.
  u128 pos = one, neg = 0;
  for (int j = order; j >= 1; --j) {
    const u128 z = fit(scaled_quotient(lambda, x, sx.frac_bits(), fo, j), so, "exp gate term");
    const u128 mp = fit(shift_round(z * pos, fo), so, "exp gate product");
    const u128 mn = fit(shift_round(z * neg, fo), so, "exp gate product");
    // 1 - z h = (1 + z neg) - z pos
    const u128 p2 = fit(one + mn, so, "exp gate accumulator");
    if (p2 >= mp) {
      pos = p2 - mp;
      neg = 0;
    } else {
      pos = 0;
      neg = mp - p2;
    }
  }
  return neg > 0 ? 0 : static_cast<Label>(pos);
}

double exp_gate_error_bound(double x, double lambda, int order, const FixedPointSpec& so) {
  const double y = lambda * x;
  const double rem = y == 0.0 ? 0.0 : std::exp((order + 1) * std::log(y) - std::lgamma(order + 2.0));
  return rem + order * std::ldexp(1.0, -so.frac_bits());
}

int exp_order_for(double lambda_max_x, const FixedPointSpec& so) {
  const double ulp = so.resolution();
  for (int k = 0; k < 400; ++k) {
    const double rem = lambda_max_x <= 0
                           ? 0.0
                           : std::exp((k + 1) * std::log(lambda_max_x) - std::lgamma(k + 2.0));
    if (rem <= ulp) return k;
  }
  fail(ErrorKind::range, "exp gate argument too large for a Taylor gate");
}

FixedPointSpec spec_for_range(double max_value, int bits) {
  require(max_value >= 0 && std::isfinite(max_value), ErrorKind::input, "bad register range");
  int ib = 1;
  while (std::ldexp(1.0, ib) <= max_value * (1.0 + 1e-12) + 1e-12) ++ib;
  FixedPointSpec s{bits, ib};
  s.validate();
  return s;
}

namespace {

const FixedPointSpec& fx(const SimState& s, const std::string& reg) {
  const Register& r = s.layout().at(reg);
  require(r.kind == RegisterKind::arithmetic, ErrorKind::contract,
          reg + " is not an arithmetic register");
  return *r.fixed;
}

}  // namespace

void qma_multiply(SimState& s, const std::string& a, const std::string& b, const std::string& out) {
  const auto& sa = fx(s, a);
  const auto& sb = fx(s, b);
  const auto& so = fx(s, out);
  const auto ia = s.layout().slot(a), ib = s.layout().slot(b), io = s.layout().slot(out);
  s.transform_labels({}, [&](BranchKey& k, SimState::ControlValues) {
    require(k[io] == 0, ErrorKind::contract, "multiply output register " + out + " is not zero");
    k[io] = fx_multiply(k[ia], sa, k[ib], sb, so);
  });
}

void qma_multiply_uncompute(SimState& s, const std::string& a, const std::string& b,
                            const std::string& out) {
  const auto& sa = fx(s, a);
  const auto& sb = fx(s, b);
  const auto& so = fx(s, out);
  const auto ia = s.layout().slot(a), ib = s.layout().slot(b), io = s.layout().slot(out);
  s.transform_labels({}, [&](BranchKey& k, SimState::ControlValues) {
    require(k[io] == fx_multiply(k[ia], sa, k[ib], sb, so), ErrorKind::contract,
            "uncompute of " + out + " does not match");
    k[io] = 0;
  });
}

void qma_add(SimState& s, const std::string& a, const std::string& b) {
  const auto& sa = fx(s, a);
  const auto& sb = fx(s, b);
  const auto ia = s.layout().slot(a), ib = s.layout().slot(b);
  s.transform_labels({}, [&](BranchKey& k, SimState::ControlValues) {
    k[ib] = fx_add(k[ia], sa, k[ib], sb, sb);
  });
}

void qma_add_uncompute(SimState& s, const std::string& a, const std::string& b) {
  const auto& sa = fx(s, a);
  const auto& sb = fx(s, b);
  const auto ia = s.layout().slot(a), ib = s.layout().slot(b);
  s.transform_labels({}, [&](BranchKey& k, SimState::ControlValues) {
    const Label d = fx_convert(k[ia], sa, sb);
    require(d <= k[ib], ErrorKind::contract, "subtraction would underflow");
    k[ib] -= d;
  });
}

namespace {

Label power_label(const BranchKey& k, const std::vector<std::size_t>& slots,
                  const std::vector<const FixedPointSpec*>& specs, std::uint64_t count,
                  const FixedPointSpec& so) {
  require(count <= slots.size(), ErrorKind::contract, "power count exceeds factor list");
  Label acc = so.encode(1.0);
  for (std::uint64_t l = 0; l < count; ++l) acc = fx_multiply(acc, so, k[slots[l]], *specs[l], so);
  return acc;
}

void power_impl(SimState& s, const std::vector<std::string>& factors, const std::string& count_reg,
                const std::string& out, bool undo) {
  const auto& so = fx(s, out);
  const auto io = s.layout().slot(out);
  std::vector<std::size_t> slots;
  std::vector<const FixedPointSpec*> specs;
  for (const auto& f : factors) {
    slots.push_back(s.layout().slot(f));
    specs.push_back(&fx(s, f));
  }
  std::vector<std::string> ctrl;
  if (!count_reg.empty()) ctrl.push_back(count_reg);
  s.transform_labels(ctrl, [&](BranchKey& k, SimState::ControlValues v) {
    const std::uint64_t count = v.empty() ? factors.size() : v[0];
    const Label val = power_label(k, slots, specs, count, so);
    if (undo) {
      require(k[io] == val, ErrorKind::contract, "uncompute of " + out + " does not match");
      k[io] = 0;
    } else {
      require(k[io] == 0, ErrorKind::contract, "power output register " + out + " is not zero");
      k[io] = val;
    }
  });
}

}  // namespace

void qma_power(SimState& s, const std::vector<std::string>& factors, const std::string& count_reg,
               const std::string& out) {
  power_impl(s, factors, count_reg, out, false);
}

void qma_power_uncompute(SimState& s, const std::vector<std::string>& factors,
                         const std::string& count_reg, const std::string& out) {
  power_impl(s, factors, count_reg, out, true);
}

void exp_neg_lambda_gate(SimState& s, const std::string& x, const std::string& out, double lambda,
                         int order) {
  const auto& sx = fx(s, x);
  const auto& so = fx(s, out);
  const auto ix = s.layout().slot(x), io = s.layout().slot(out);
  s.transform_labels({}, [&](BranchKey& k, SimState::ControlValues) {
    require(k[io] == 0, ErrorKind::contract, "exp output register " + out + " is not zero");
    k[io] = fx_exp_neg_lambda(k[ix], sx, so, lambda, order);
  });
}

void exp_neg_lambda_uncompute(SimState& s, const std::string& x, const std::string& out,
                              double lambda, int order) {
  const auto& sx = fx(s, x);
  const auto& so = fx(s, out);
  const auto ix = s.layout().slot(x), io = s.layout().slot(out);
  s.transform_labels({}, [&](BranchKey& k, SimState::ControlValues) {
    require(k[io] == fx_exp_neg_lambda(k[ix], sx, so, lambda, order), ErrorKind::contract,
            "uncompute of " + out + " does not match");
    k[io] = 0;
  });
}

namespace {

CMatrix rotation(double a, bool inverse) {
  const double c = a, sn = std::sqrt(std::max(0.0, 1.0 - a * a));
  CMatrix r(2, 2);
  r << c, -sn, sn, c;
  return inverse ? CMatrix(r.transpose()) : r;
}

void rotation_impl(SimState& s, const std::string& control, const std::string& ancilla,
                   double scale, RotationMode mode, const DenseCondition& when, bool inverse) {
  const auto& sc = fx(s, control);
  const auto ic = s.layout().slot(control);
  require(s.layout().at(ancilla).qubits == 1, ErrorKind::contract,
          "rotation ancilla must be one qubit");
  if (mode == RotationMode::amplitude)
    require(scale > 0 && std::isfinite(scale), ErrorKind::range, "rotation scale must be positive");
  std::vector<std::string> ctrl;
  std::vector<std::uint64_t> want;
  for (const auto& [r, v] : when) {
    ctrl.push_back(r);
    want.push_back(v);
  }
  const auto& lay = s.layout();
  auto matches = [&](std::size_t x) {
    for (std::size_t c = 0; c < ctrl.size(); ++c)
      if (lay.dense_value(x, ctrl[c]) != want[c]) return false;
    return true;
  };
  if (!inverse) {
    const double stray = s.weight([&](const BranchKey&, std::size_t x) {
      return matches(x) && lay.dense_value(x, ancilla) == 1;
    });
    require(stray <= 1e-24, ErrorKind::contract, "rotation ancilla " + ancilla + " is not |0>");
  }
  s.apply_branch_controlled(
      ctrl,
      [&](const BranchKey& k, SimState::ControlValues v) -> std::optional<CMatrix> {
        for (std::size_t c = 0; c < want.size(); ++c)
          if (v[c] != want[c]) return std::nullopt;
        const double val = sc.decode(k[ic]);
        double a = 0.0;
        if (mode == RotationMode::amplitude) {
          a = val / scale;
          require(a <= 1.0 + 1e-12, ErrorKind::range,
                  "rotation amplitude " + std::to_string(a) + " exceeds 1");
        } else {
          require(val <= 1.0 + 1e-12, ErrorKind::range,
                  "rotation value " + std::to_string(val) + " exceeds 1");
          a = std::sqrt(val);
        }
        return rotation(std::min(a, 1.0), inverse);
      },
      {ancilla});
}

}  // namespace

void controlled_rotation(SimState& s, const std::string& control, const std::string& ancilla,
                         double scale, RotationMode mode, const DenseCondition& when) {
  rotation_impl(s, control, ancilla, scale, mode, when, false);
}

void controlled_rotation_uncompute(SimState& s, const std::string& control,
                                   const std::string& ancilla, double scale, RotationMode mode,
                                   const DenseCondition& when) {
  rotation_impl(s, control, ancilla, scale, mode, when, true);
}

}  // namespace qlap
