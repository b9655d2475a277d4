#include "qlap/operator.hpp"

#include <algorithm>
#include <random>

#include "qlap/error.hpp"

namespace qlap {

CVector QubitOperator::operator*(const CVector& x) const {
  require(static_cast<std::size_t>(x.size()) == dim(), ErrorKind::contract,
          "operator applied to vector of wrong size");
  CVector y(x.size());
  apply(x.data(), y.data());
  return y;
}

CVector QubitOperator::adjoint_times(const CVector& x) const {
  require(static_cast<std::size_t>(x.size()) == dim(), ErrorKind::contract,
          "operator applied to vector of wrong size");
  CVector y(x.size());
  apply_adjoint(x.data(), y.data());
  return y;
}

namespace {

class DenseOp final : public QubitOperator {
 public:
  DenseOp(CMatrix u, int q) : QubitOperator(q), u_(std::move(u)), ua_(u_.adjoint()) {}
  void apply(const cplx* in, cplx* out) const override {
    const Eigen::Index n = u_.rows();
    Eigen::Map<CVector>(out, n).noalias() = u_ * Eigen::Map<const CVector>(in, n);
  }
  void apply_adjoint(const cplx* in, cplx* out) const override {
    const Eigen::Index n = u_.rows();
    Eigen::Map<CVector>(out, n).noalias() = ua_ * Eigen::Map<const CVector>(in, n);
  }

 private:
  CMatrix u_, ua_;
};

class IdentityOp final : public QubitOperator {
 public:
  using QubitOperator::QubitOperator;
  void apply(const cplx* in, cplx* out) const override {
    std::copy(in, in + dim(), out);
  }
  void apply_adjoint(const cplx* in, cplx* out) const override { apply(in, out); }
};

// U = ph (I - 2 v v^dag / v^dag v)
class HouseholderOp final : public QubitOperator {
 public:
  HouseholderOp(const CVector& psi, int q) : QubitOperator(q) {
    require(static_cast<std::size_t>(psi.size()) == dim(), ErrorKind::contract,
            "state preparation size is not a power of two");
    require(std::abs(psi.norm() - 1.0) <= 1e-9, ErrorKind::contract,
            "state preparation target is not a unit vector");
    ph_ = std::abs(psi(0)) > 0 ? psi(0) / std::abs(psi(0)) : cplx(1.0);
    v_ = -std::conj(ph_) * psi;
    v_(0) += 1.0;
    const double vv = v_.squaredNorm();
    scale_ = vv > 1e-30 ? 2.0 / vv : 0.0;
  }
  void apply(const cplx* in, cplx* out) const override { reflect(in, out, ph_); }
  void apply_adjoint(const cplx* in, cplx* out) const override {
    reflect(in, out, std::conj(ph_));
  }

 private:
  void reflect(const cplx* in, cplx* out, cplx ph) const {
    const Eigen::Index n = v_.size();
    Eigen::Map<const CVector> x(in, n);
    Eigen::Map<CVector> y(out, n);
    const cplx c = scale_ * v_.dot(x);
    y = ph * (x - c * v_);
  }
  CVector v_;
  cplx ph_;
  double scale_ = 0.0;
};

class OnQubitsOp final : public QubitOperator {
 public:
  OnQubitsOp(OperatorPtr op, int total, std::vector<int> pos)
      : QubitOperator(total), op_(std::move(op)) {
    const int q = op_->qubits();
    require(static_cast<int>(pos.size()) == q, ErrorKind::contract,
            "on_qubits: position count mismatch");
    std::vector<bool> used(total, false);
    for (int p : pos) {
      require(p >= 0 && p < total && !used[p], ErrorKind::contract,
              "on_qubits: bad qubit position");
      used[p] = true;
    }
    sub_offset_.assign(std::size_t{1} << q, 0);
    for (std::size_t s = 0; s < sub_offset_.size(); ++s) {
      std::size_t off = 0;
      for (int k = 0; k < q; ++k)
        if ((s >> (q - 1 - k)) & 1) off |= std::size_t{1} << (total - 1 - pos[k]);
      sub_offset_[s] = off;
    }
    std::vector<int> rest;
    for (int p = 0; p < total; ++p)
      if (!used[p]) rest.push_back(p);
    const int r = static_cast<int>(rest.size());
    rest_offset_.assign(std::size_t{1} << r, 0);
    for (std::size_t s = 0; s < rest_offset_.size(); ++s) {
      std::size_t off = 0;
      for (int k = 0; k < r; ++k)
        if ((s >> (r - 1 - k)) & 1) off |= std::size_t{1} << (total - 1 - rest[k]);
      rest_offset_[s] = off;
    }
  }
  void apply(const cplx* in, cplx* out) const override { run(in, out, false); }
  void apply_adjoint(const cplx* in, cplx* out) const override { run(in, out, true); }

 private:
  void run(const cplx* in, cplx* out, bool adj) const {
    const std::size_t m = sub_offset_.size();
    std::vector<cplx> a(m), b(m);
    for (std::size_t base : rest_offset_) {
      for (std::size_t s = 0; s < m; ++s) a[s] = in[base | sub_offset_[s]];
      if (adj)
        op_->apply_adjoint(a.data(), b.data());
      else
        op_->apply(a.data(), b.data());
      for (std::size_t s = 0; s < m; ++s) out[base | sub_offset_[s]] = b[s];
    }
  }
  OperatorPtr op_;
  std::vector<std::size_t> sub_offset_, rest_offset_;
};

// Contiguous embedding, cheaper than the general gather.
class EmbedOp final : public QubitOperator {
 public:
  EmbedOp(OperatorPtr op, int high, int low)
      : QubitOperator(high + op->qubits() + low), op_(std::move(op)), high_(high), low_(low) {}
  void apply(const cplx* in, cplx* out) const override { run(in, out, false); }
  void apply_adjoint(const cplx* in, cplx* out) const override { run(in, out, true); }

 private:
  void run(const cplx* in, cplx* out, bool adj) const {
    const std::size_t mid = op_->dim();
    const std::size_t low = std::size_t{1} << low_;
    const std::size_t high = std::size_t{1} << high_;
    const std::size_t block = mid * low;
    if (low == 1) {
      for (std::size_t h = 0; h < high; ++h) {
        if (adj)
          op_->apply_adjoint(in + h * block, out + h * block);
        else
          op_->apply(in + h * block, out + h * block);
      }
      return;
    }
    std::vector<cplx> a(mid), b(mid);
    for (std::size_t h = 0; h < high; ++h)
      for (std::size_t l = 0; l < low; ++l) {
        const std::size_t base = h * block + l;
        for (std::size_t s = 0; s < mid; ++s) a[s] = in[base + s * low];
        if (adj)
          op_->apply_adjoint(a.data(), b.data());
        else
          op_->apply(a.data(), b.data());
        for (std::size_t s = 0; s < mid; ++s) out[base + s * low] = b[s];
      }
  }
  OperatorPtr op_;
  int high_, low_;
};

class ProductOp final : public QubitOperator {
 public:
  ProductOp(std::vector<OperatorPtr> ops, int q) : QubitOperator(q), ops_(std::move(ops)) {}
  void apply(const cplx* in, cplx* out) const override {
    chain(in, out, false);
  }
  void apply_adjoint(const cplx* in, cplx* out) const override {
    chain(in, out, true);
  }

 private:
  void chain(const cplx* in, cplx* out, bool adj) const {
    const std::size_t n = dim();
    if (ops_.empty()) {
      std::copy(in, in + n, out);
      return;
    }
    std::vector<cplx> a(in, in + n), b(n);
    const std::size_t k = ops_.size();
    for (std::size_t t = 0; t < k; ++t) {
      const auto& op = adj ? ops_[k - 1 - t] : ops_[t];
      if (adj)
        op->apply_adjoint(a.data(), b.data());
      else
        op->apply(a.data(), b.data());
      a.swap(b);
    }
    std::copy(a.begin(), a.end(), out);
  }
  std::vector<OperatorPtr> ops_;
};

class AdjointOp final : public QubitOperator {
 public:
  explicit AdjointOp(OperatorPtr op) : QubitOperator(op->qubits()), op_(std::move(op)) {}
  void apply(const cplx* in, cplx* out) const override { op_->apply_adjoint(in, out); }
  void apply_adjoint(const cplx* in, cplx* out) const override { op_->apply(in, out); }

 private:
  OperatorPtr op_;
};

class ScaledOp final : public QubitOperator {
 public:
  ScaledOp(OperatorPtr op, cplx s) : QubitOperator(op->qubits()), op_(std::move(op)), s_(s) {}
  void apply(const cplx* in, cplx* out) const override {
    op_->apply(in, out);
    for (std::size_t i = 0; i < dim(); ++i) out[i] *= s_;
  }
  void apply_adjoint(const cplx* in, cplx* out) const override {
    op_->apply_adjoint(in, out);
    const cplx c = std::conj(s_);
    for (std::size_t i = 0; i < dim(); ++i) out[i] *= c;
  }

 private:
  OperatorPtr op_;
  cplx s_;
};

class SelectOp final : public QubitOperator {
 public:
  SelectOp(int c, int t, std::vector<OperatorPtr> br)
      : QubitOperator(c + t), t_(t), br_(std::move(br)) {}
  void apply(const cplx* in, cplx* out) const override { run(in, out, false); }
  void apply_adjoint(const cplx* in, cplx* out) const override { run(in, out, true); }

 private:
  void run(const cplx* in, cplx* out, bool adj) const {
    const std::size_t block = std::size_t{1} << t_;
    const std::size_t slots = dim() / block;
    for (std::size_t j = 0; j < slots; ++j) {
      const cplx* a = in + j * block;
      cplx* b = out + j * block;
      if (j < br_.size() && br_[j]) {
        if (adj)
          br_[j]->apply_adjoint(a, b);
        else
          br_[j]->apply(a, b);
      } else {
        std::copy(a, a + block, b);
      }
    }
  }
  int t_;
  std::vector<OperatorPtr> br_;
};

class SwapRangesOp final : public QubitOperator {
 public:
  SwapRangesOp(int total, int a, int b, int w) : QubitOperator(total) {
    require(w >= 1 && a >= 0 && b >= 0 && a + w <= total && b + w <= total &&
                (a + w <= b || b + w <= a),
            ErrorKind::contract, "swap_ranges: bad ranges");
    const int sa = total - a - w, sb = total - b - w;
    const std::size_t mask = (std::size_t{1} << w) - 1;
    perm_.resize(dim());
    for (std::size_t x = 0; x < dim(); ++x) {
      const std::size_t va = (x >> sa) & mask, vb = (x >> sb) & mask;
      std::size_t y = x & ~((mask << sa) | (mask << sb));
      y |= (va << sb) | (vb << sa);
      perm_[x] = y;
    }
  }
  // Involution, so the adjoint is the same map.
  void apply(const cplx* in, cplx* out) const override {
    for (std::size_t x = 0; x < perm_.size(); ++x) out[perm_[x]] = in[x];
  }
  void apply_adjoint(const cplx* in, cplx* out) const override { apply(in, out); }

 private:
  std::vector<std::size_t> perm_;
};

class ZeroReflectionOp final : public QubitOperator {
 public:
  ZeroReflectionOp(int total, int anc) : QubitOperator(total), anc_(anc) {}
  void apply(const cplx* in, cplx* out) const override {
    const std::size_t keep = std::size_t{1} << (qubits() - anc_);
    for (std::size_t x = 0; x < dim(); ++x) out[x] = x < keep ? in[x] : -in[x];
  }
  void apply_adjoint(const cplx* in, cplx* out) const override { apply(in, out); }

 private:
  int anc_;
};

class ControlledOp final : public QubitOperator {
 public:
  explicit ControlledOp(OperatorPtr op) : QubitOperator(op->qubits() + 1), op_(std::move(op)) {}
  void apply(const cplx* in, cplx* out) const override {
    const std::size_t h = op_->dim();
    std::copy(in, in + h, out);
    op_->apply(in + h, out + h);
  }
  void apply_adjoint(const cplx* in, cplx* out) const override {
    const std::size_t h = op_->dim();
    std::copy(in, in + h, out);
    op_->apply_adjoint(in + h, out + h);
  }

 private:
  OperatorPtr op_;
};

}  // namespace

OperatorPtr dense_operator(CMatrix u) {
  require(u.rows() == u.cols() && is_power_of_two(static_cast<std::uint64_t>(u.rows())),
          ErrorKind::contract, "dense operator must be square with power-of-two size");
  const int q = ceil_log2(static_cast<std::uint64_t>(u.rows()));
  return std::make_shared<DenseOp>(std::move(u), q);
}

OperatorPtr identity_operator(int qubits) { return std::make_shared<IdentityOp>(qubits); }

OperatorPtr state_preparation_operator(const CVector& psi) {
  require(is_power_of_two(static_cast<std::uint64_t>(psi.size())), ErrorKind::contract,
          "state preparation size is not a power of two");
  return std::make_shared<HouseholderOp>(psi, ceil_log2(static_cast<std::uint64_t>(psi.size())));
}

OperatorPtr on_qubits(OperatorPtr op, int total, std::vector<int> positions) {
  bool contiguous = !positions.empty();
  for (std::size_t k = 1; k < positions.size(); ++k)
    contiguous = contiguous && positions[k] == positions[k - 1] + 1;
  if (contiguous) {
    const int high = positions.front();
    const int low = total - positions.back() - 1;
    require(high + op->qubits() + low == total, ErrorKind::contract,
            "on_qubits: position count mismatch");
    return embed(std::move(op), high, low);
  }
  return std::make_shared<OnQubitsOp>(std::move(op), total, std::move(positions));
}

OperatorPtr embed(OperatorPtr op, int high, int low) {
  require(high >= 0 && low >= 0, ErrorKind::contract, "embed: negative padding");
  if (high == 0 && low == 0) return op;
  return std::make_shared<EmbedOp>(std::move(op), high, low);
}

OperatorPtr product(std::vector<OperatorPtr> ops) {
  require(!ops.empty(), ErrorKind::contract, "product of zero operators");
  const int q = ops.front()->qubits();
  for (const auto& o : ops)
    require(o->qubits() == q, ErrorKind::contract, "product: qubit count mismatch");
  if (ops.size() == 1) return ops.front();
  return std::make_shared<ProductOp>(std::move(ops), q);
}

OperatorPtr adjoint(OperatorPtr op) { return std::make_shared<AdjointOp>(std::move(op)); }

OperatorPtr scaled(OperatorPtr op, cplx phase) {
  return std::make_shared<ScaledOp>(std::move(op), phase);
}

OperatorPtr select_operator(int control_qubits, std::vector<OperatorPtr> branches) {
  require(branches.size() <= (std::size_t{1} << control_qubits), ErrorKind::contract,
          "select: too many branches for the control register");
  int t = -1;
  for (const auto& b : branches) {
    if (!b) continue;
    require(t < 0 || b->qubits() == t, ErrorKind::contract,
            "select: branches act on different sizes");
    t = b->qubits();
  }
  require(t >= 0, ErrorKind::contract, "select: no branches");
  return std::make_shared<SelectOp>(control_qubits, t, std::move(branches));
}

OperatorPtr swap_ranges(int total, int first_a, int first_b, int width) {
  return std::make_shared<SwapRangesOp>(total, first_a, first_b, width);
}

OperatorPtr zero_reflection(int total, int ancillas) {
  require(ancillas >= 0 && ancillas <= total, ErrorKind::contract,
          "zero_reflection: bad ancilla count");
  return std::make_shared<ZeroReflectionOp>(total, ancillas);
}

OperatorPtr controlled(OperatorPtr op) { return std::make_shared<ControlledOp>(std::move(op)); }

CMatrix materialize(const QubitOperator& op) {
  const std::size_t n = op.dim();
  CMatrix m(n, n);
  CVector e = CVector::Zero(n), col(n);
  for (std::size_t j = 0; j < n; ++j) {
    e(j) = 1.0;
    op.apply(e.data(), col.data());
    m.col(j) = col;
    e(j) = 0.0;
  }
  return m;
}

CMatrix top_left_block(const QubitOperator& op, int ancillas) {
  require(ancillas >= 0 && ancillas <= op.qubits(), ErrorKind::contract,
          "top_left_block: bad ancilla count");
  const std::size_t n = op.dim();
  const std::size_t s = std::size_t{1} << (op.qubits() - ancillas);
  CMatrix blk(s, s);
  CVector e = CVector::Zero(n), col(n);
  for (std::size_t j = 0; j < s; ++j) {
    e(j) = 1.0;
    op.apply(e.data(), col.data());
    blk.col(j) = col.head(s);
    e(j) = 0.0;
  }
  return blk;
}

double unitarity_defect(const QubitOperator& op, std::uint64_t seed) {
  if (op.qubits() <= 8) return unitarity_defect(materialize(op));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int t = 0; t < 3; ++t) {
    CVector x(op.dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = cplx(g(rng), g(rng));
    x.normalize();
    CVector y = op * x;
    CVector z = op.adjoint_times(y);
    worst = std::max(worst, std::abs(y.norm() - 1.0));
    worst = std::max(worst, (z - x).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace qlap
