#include "qlap/qsim.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <random>

#include "qlap/error.hpp"

namespace qlap {

Label FixedPointSpec::max_label() const {
  return bits >= 64 ? ~Label{0} : (Label{1} << bits) - 1;
}

double FixedPointSpec::resolution() const { return std::ldexp(1.0, -frac_bits()); }

double FixedPointSpec::max_value() const {
  return std::ldexp(static_cast<double>(max_label()), -frac_bits());
}

void FixedPointSpec::validate() const {
  require(bits >= 1 && bits <= 62, ErrorKind::contract, "fixed point width must be in [1, 62]");
  require(int_bits >= 0 && int_bits <= bits, ErrorKind::contract,
          "fixed point integer bits out of range");
}

Label FixedPointSpec::encode(double v) const {
  require(std::isfinite(v) && v >= 0.0, ErrorKind::overflow,
          "fixed point value must be finite and nonnegative");
  const double scaled = std::ldexp(v, frac_bits());
  const double r = std::nearbyint(scaled);  // default mode: ties to even
  require(r <= std::ldexp(1.0, bits) - 1.0 && r < 18446744073709551615.0, ErrorKind::overflow,
          "value " + std::to_string(v) + " exceeds fixed point range");
  const auto x = static_cast<Label>(r);
  require(x <= max_label(), ErrorKind::overflow, "value exceeds fixed point range");
  return x;
}

double FixedPointSpec::decode(Label x) const {
  return std::ldexp(static_cast<double>(x), -frac_bits());
}

RegisterLayout::RegisterLayout(std::vector<Register> regs) : regs_(std::move(regs)) {
  require(!regs_.empty(), ErrorKind::contract, "layout has no registers");
  for (std::size_t i = 0; i < regs_.size(); ++i) {
    const auto& r = regs_[i];
    require(!r.name.empty() && r.qubits >= 1, ErrorKind::contract,
            "register needs a name and at least one qubit");
    for (std::size_t j = 0; j < i; ++j)
      require(regs_[j].name != r.name, ErrorKind::contract, "duplicate register " + r.name);
    if (r.kind == RegisterKind::arithmetic) {
      require(r.fixed.has_value(), ErrorKind::contract,
              "arithmetic register " + r.name + " needs a fixed point spec");
      r.fixed->validate();
      require(r.fixed->bits == r.qubits, ErrorKind::contract,
              "arithmetic register width must equal its fixed point width");
    }
    total_ += r.qubits;
  }
  shift_.assign(regs_.size(), -1);
  slot_.assign(regs_.size(), -1);
  int below = 0;
  for (std::size_t i = regs_.size(); i-- > 0;) {
    if (regs_[i].kind == RegisterKind::arithmetic) continue;
    shift_[i] = below;
    below += regs_[i].qubits;
  }
  dense_ = below;
  require(dense_ >= 1 && dense_ <= 28, ErrorKind::contract,
          "dense part must have between 1 and 28 qubits");
  for (std::size_t i = 0; i < regs_.size(); ++i)
    if (regs_[i].kind == RegisterKind::arithmetic) {
      slot_[i] = static_cast<int>(arith_names_.size());
      arith_names_.push_back(regs_[i].name);
    }
}

std::size_t RegisterLayout::position(const std::string& name) const {
  for (std::size_t i = 0; i < regs_.size(); ++i)
    if (regs_[i].name == name) return i;
  fail(ErrorKind::contract, "unknown register " + name);
}

const Register& RegisterLayout::at(const std::string& name) const { return regs_[position(name)]; }

bool RegisterLayout::contains(const std::string& name) const {
  for (const auto& r : regs_)
    if (r.name == name) return true;
  return false;
}

bool RegisterLayout::is_arithmetic(const std::string& name) const {
  return at(name).kind == RegisterKind::arithmetic;
}

std::size_t RegisterLayout::slot(const std::string& name) const {
  const int s = slot_[position(name)];
  require(s >= 0, ErrorKind::contract, name + " is not an arithmetic register");
  return static_cast<std::size_t>(s);
}

int RegisterLayout::dense_shift(const std::string& name) const {
  const int s = shift_[position(name)];
  require(s >= 0, ErrorKind::contract, name + " is not a dense register");
  return s;
}

std::uint64_t RegisterLayout::dense_value(std::size_t x, const std::string& name) const {
  const std::size_t i = position(name);
  require(shift_[i] >= 0, ErrorKind::contract, name + " is not a dense register");
  return (x >> shift_[i]) & ((std::uint64_t{1} << regs_[i].qubits) - 1);
}

void DensityOperator::validate(double tol) const {
  require(matrix.rows() == matrix.cols() && matrix.rows() > 0, ErrorKind::contract,
          "density operator must be square");
  require((matrix - matrix.adjoint()).cwiseAbs().maxCoeff() <= std::max(tol, 1e-12),
          ErrorKind::contract, "density operator is not Hermitian");
  require(std::abs(matrix.trace() - 1.0) <= tol, ErrorKind::contract,
          "density operator trace is not 1");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (matrix + matrix.adjoint()),
                                            Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -tol, ErrorKind::contract,
          "density operator is not positive semidefinite");
}

SimState::SimState(RegisterLayout layout) : layout_(std::move(layout)) {
  CVector v = CVector::Zero(layout_.dense_dim());
  v(0) = 1.0;
  branches_.emplace(BranchKey(layout_.arithmetic_count(), 0), std::move(v));
}

double SimState::norm() const {
  double s = 0.0;
  for (const auto& [k, v] : branches_) s += v.squaredNorm();
  return std::sqrt(s);
}

void SimState::normalize() {
  const double n = norm();
  require(n > 0, ErrorKind::contract, "cannot normalise the zero state");
  for (auto& [k, v] : branches_) v /= n;
}

void SimState::set_dense(const CVector& dense) {
  require(static_cast<std::size_t>(dense.size()) == layout_.dense_dim(), ErrorKind::contract,
          "dense vector has wrong size");
  branches_.clear();
  branches_.emplace(BranchKey(layout_.arithmetic_count(), 0), dense);
}

Label SimState::label(const BranchKey& key, const std::string& reg) const {
  return key[layout_.slot(reg)];
}

namespace {

struct TargetMap {
  std::vector<std::size_t> sub;  // dense offset of each target basis state
  std::size_t mask = 0;
};

TargetMap target_map(const RegisterLayout& lay, const std::vector<std::string>& targets) {
  TargetMap tm;
  std::vector<int> bitpos;  // dense bit positions, most significant target bit first
  for (const auto& t : targets) {
    const int sh = lay.dense_shift(t);
    const int q = lay.at(t).qubits;
    for (int b = q - 1; b >= 0; --b) bitpos.push_back(sh + b);
  }
  for (int b : bitpos) {
    const std::size_t bit = std::size_t{1} << b;
    require(!(tm.mask & bit), ErrorKind::contract, "target registers overlap");
    tm.mask |= bit;
  }
  const int t = static_cast<int>(bitpos.size());
  tm.sub.assign(std::size_t{1} << t, 0);
  for (std::size_t s = 0; s < tm.sub.size(); ++s) {
    std::size_t off = 0;
    for (int k = 0; k < t; ++k)
      if ((s >> (t - 1 - k)) & 1) off |= std::size_t{1} << bitpos[k];
    tm.sub[s] = off;
  }
  return tm;
}

struct ControlMap {
  std::vector<int> shift;
  std::vector<std::uint64_t> mask;
  std::size_t bits_mask = 0;
  std::vector<int> width;

  void read(std::size_t x, std::vector<std::uint64_t>& out) const {
    for (std::size_t c = 0; c < shift.size(); ++c) out[c] = (x >> shift[c]) & mask[c];
  }
  std::uint64_t combo(std::size_t x) const {
    std::uint64_t id = 0;
    for (std::size_t c = 0; c < shift.size(); ++c)
      id = (id << width[c]) | ((x >> shift[c]) & mask[c]);
    return id;
  }
};

ControlMap control_map(const RegisterLayout& lay, const std::vector<std::string>& controls) {
  ControlMap cm;
  for (const auto& c : controls) {
    const int sh = lay.dense_shift(c);
    const int q = lay.at(c).qubits;
    cm.shift.push_back(sh);
    cm.width.push_back(q);
    cm.mask.push_back((std::uint64_t{1} << q) - 1);
    cm.bits_mask |= ((std::size_t{1} << q) - 1) << sh;
  }
  return cm;
}

}  // namespace

void SimState::apply_unitary(const CMatrix& u, const std::vector<std::string>& targets) {
  apply_branch_controlled(
      {}, [&](const BranchKey&, ControlValues) { return std::optional<CMatrix>(u); }, targets);
}

void SimState::apply_controlled(
    const std::vector<std::string>& controls,
    const std::function<std::optional<CMatrix>(ControlValues)>& u_for,
    const std::vector<std::string>& targets) {
  apply_branch_controlled(
      controls, [&](const BranchKey&, ControlValues v) { return u_for(v); }, targets);
}

void SimState::apply_branch_controlled(const std::vector<std::string>& controls,
                                       const BranchUnitary& u_for,
                                       const std::vector<std::string>& targets) {
  require(!targets.empty(), ErrorKind::contract, "no target registers");
  const TargetMap tm = target_map(layout_, targets);
  const ControlMap cm = control_map(layout_, controls);
  require(!(tm.mask & cm.bits_mask), ErrorKind::contract, "control and target overlap");
  const std::size_t m = tm.sub.size();
  std::vector<std::uint64_t> vals(controls.size());
  CVector a(m), b(m);
  for (auto& [key, v] : branches_) {
    std::map<std::uint64_t, std::optional<CMatrix>> cache;
    for (std::size_t x = 0; x < static_cast<std::size_t>(v.size()); ++x) {
      if (x & tm.mask) continue;
      bool any = false;
      for (std::size_t s = 0; s < m; ++s) {
        a(s) = v(x | tm.sub[s]);
        any = any || a(s) != cplx(0.0);
      }
      if (!any) continue;
      const std::uint64_t id = cm.combo(x);
      auto it = cache.find(id);
      if (it == cache.end()) {
        cm.read(x, vals);
        std::optional<CMatrix> u = u_for(key, ControlValues(vals));
        if (u) {
          require(u->rows() == static_cast<Eigen::Index>(m) && u->cols() == u->rows(),
                  ErrorKind::contract, "unitary does not match target size");
          require(is_unitary(*u), ErrorKind::contract, "gate is not unitary");
        }
        it = cache.emplace(id, std::move(u)).first;
      }
      if (!it->second) continue;
      b.noalias() = *it->second * a;
      for (std::size_t s = 0; s < m; ++s) v(x | tm.sub[s]) = b(s);
    }
  }
}

void SimState::transform_labels(const std::vector<std::string>& controls, const LabelMap& fn) {
  const ControlMap cm = control_map(layout_, controls);
  std::vector<std::uint64_t> vals(controls.size());
  std::vector<Label> maxl;
  for (const auto& r : layout_.registers())
    if (r.kind == RegisterKind::arithmetic) maxl.push_back(r.fixed->max_label());
  auto checked = [&](BranchKey k) {
    require(k.size() == maxl.size(), ErrorKind::contract, "label map changed key size");
    for (std::size_t s = 0; s < k.size(); ++s)
      require(k[s] <= maxl[s], ErrorKind::overflow, "label exceeds register width");
    return k;
  };
  std::map<BranchKey, CVector> out;
  auto target = [&](const BranchKey& k) -> CVector& {
    auto it = out.find(k);
    if (it == out.end()) it = out.emplace(k, CVector::Zero(layout_.dense_dim())).first;
    return it->second;
  };
  for (auto& [key, v] : branches_) {
    if (controls.empty()) {
      BranchKey nk = key;
      fn(nk, ControlValues(vals));
      target(checked(nk)) += v;
      continue;
    }
    std::map<std::uint64_t, CVector*> dest;
    for (std::size_t x = 0; x < static_cast<std::size_t>(v.size()); ++x) {
      if (v(x) == cplx(0.0)) continue;
      const std::uint64_t id = cm.combo(x);
      auto it = dest.find(id);
      if (it == dest.end()) {
        cm.read(x, vals);
        BranchKey nk = key;
        fn(nk, ControlValues(vals));
        it = dest.emplace(id, &target(checked(nk))).first;
      }
      (*it->second)(x) += v(x);
    }
  }
  branches_.swap(out);
  if (branches_.empty()) branches_.emplace(BranchKey(layout_.arithmetic_count(), 0),
                                           CVector::Zero(layout_.dense_dim()));
}

double SimState::weight(const BasisPredicate& pred) const {
  double s = 0.0;
  for (const auto& [k, v] : branches_)
    for (Eigen::Index x = 0; x < v.size(); ++x)
      if (v(x) != cplx(0.0) && pred(k, static_cast<std::size_t>(x))) s += std::norm(v(x));
  return s;
}

void SimState::project(const BasisPredicate& pred) {
  for (auto& [k, v] : branches_)
    for (Eigen::Index x = 0; x < v.size(); ++x)
      if (!pred(k, static_cast<std::size_t>(x))) v(x) = 0.0;
}

void SimState::prune(double tol) {
  for (auto it = branches_.begin(); it != branches_.end();) {
    if (it->second.squaredNorm() < tol && branches_.size() > 1)
      it = branches_.erase(it);
    else
      ++it;
  }
}

namespace {

// Full-index shift of every register (layout order, first most significant).
std::vector<int> full_shifts(const RegisterLayout& lay) {
  const auto& regs = lay.registers();
  std::vector<int> sh(regs.size());
  int below = 0;
  for (std::size_t i = regs.size(); i-- > 0;) {
    sh[i] = below;
    below += regs[i].qubits;
  }
  return sh;
}

}  // namespace

CVector SimState::flatten() const {
  require(layout_.total_qubits() <= 26, ErrorKind::contract, "state too large to flatten");
  const auto& regs = layout_.registers();
  const auto fsh = full_shifts(layout_);
  CVector flat = CVector::Zero(std::size_t{1} << layout_.total_qubits());
  for (const auto& [key, v] : branches_) {
    std::size_t arith = 0;
    for (std::size_t i = 0; i < regs.size(); ++i)
      if (regs[i].kind == RegisterKind::arithmetic)
        arith |= static_cast<std::size_t>(key[layout_.slot(regs[i].name)]) << fsh[i];
    for (Eigen::Index x = 0; x < v.size(); ++x) {
      if (v(x) == cplx(0.0)) continue;
      std::size_t idx = arith;
      for (std::size_t i = 0; i < regs.size(); ++i)
        if (regs[i].kind != RegisterKind::arithmetic)
          idx |= static_cast<std::size_t>(layout_.dense_value(x, regs[i].name)) << fsh[i];
      flat(idx) += v(x);
    }
  }
  return flat;
}

SimState SimState::from_flat(const RegisterLayout& layout, const CVector& flat) {
  require(static_cast<std::size_t>(flat.size()) == (std::size_t{1} << layout.total_qubits()),
          ErrorKind::contract, "flat vector has wrong size");
  SimState st(layout);
  st.branches_.clear();
  const auto& regs = layout.registers();
  const auto fsh = full_shifts(layout);
  for (Eigen::Index idx = 0; idx < flat.size(); ++idx) {
    if (flat(idx) == cplx(0.0)) continue;
    BranchKey key(layout.arithmetic_count(), 0);
    std::size_t x = 0;
    for (std::size_t i = 0; i < regs.size(); ++i) {
      const std::uint64_t val =
          (static_cast<std::uint64_t>(idx) >> fsh[i]) & ((std::uint64_t{1} << regs[i].qubits) - 1);
      if (regs[i].kind == RegisterKind::arithmetic)
        key[layout.slot(regs[i].name)] = val;
      else
        x |= static_cast<std::size_t>(val) << layout.dense_shift(regs[i].name);
    }
    auto it = st.branches_.find(key);
    if (it == st.branches_.end())
      it = st.branches_.emplace(key, CVector::Zero(layout.dense_dim())).first;
    it->second(x) += flat(idx);
  }
  if (st.branches_.empty())
    st.branches_.emplace(BranchKey(layout.arithmetic_count(), 0), CVector::Zero(layout.dense_dim()));
  return st;
}

std::map<std::uint64_t, double> SimState::marginal(const std::string& reg) const {
  std::map<std::uint64_t, double> m;
  const bool arith = layout_.is_arithmetic(reg);
  for (const auto& [key, v] : branches_)
    for (Eigen::Index x = 0; x < v.size(); ++x) {
      const double p = std::norm(v(x));
      if (p == 0.0) continue;
      const std::uint64_t val =
          arith ? key[layout_.slot(reg)] : layout_.dense_value(static_cast<std::size_t>(x), reg);
      m[val] += p;
    }
  return m;
}

std::string SimState::to_json() const {
  using nlohmann::json;
  json j;
  json regs = json::array();
  for (const auto& r : layout_.registers()) {
    static const char* kinds[] = {"index", "coefficient", "arithmetic", "flag"};
    json e{{"name", r.name}, {"qubits", r.qubits}, {"kind", kinds[static_cast<int>(r.kind)]}};
    if (r.fixed) e["fixed_point"] = {{"bits", r.fixed->bits}, {"int_bits", r.fixed->int_bits}};
    regs.push_back(e);
  }
  j["layout"] = regs;
  json br = json::array();
  for (const auto& [key, v] : branches_) {
    json labels = json::object();
    for (const auto& r : layout_.registers())
      if (r.kind == RegisterKind::arithmetic) labels[r.name] = key[layout_.slot(r.name)];
    json amps = json::array();
    for (Eigen::Index x = 0; x < v.size(); ++x)
      if (v(x) != cplx(0.0)) amps.push_back({x, v(x).real(), v(x).imag()});
    br.push_back({{"labels", labels}, {"amplitudes", amps}});
  }
  j["branches"] = br;
  return j.dump();
}

DensityOperator partial_trace(const SimState& state, const std::vector<std::string>& keep) {
  const RegisterLayout& lay = state.layout();
  require(!keep.empty(), ErrorKind::contract, "partial trace must keep at least one register");
  std::vector<bool> kept(lay.registers().size(), false);
  for (const auto& k : keep) kept[lay.position(k)] = true;
  // Kept registers in layout order define the output basis.
  std::vector<std::size_t> kidx;
  for (std::size_t i = 0; i < kept.size(); ++i)
    if (kept[i]) kidx.push_back(i);
  std::vector<int> kshift(kidx.size());
  int kq = 0;
  for (std::size_t t = kidx.size(); t-- > 0;) {
    kshift[t] = kq;
    kq += lay.registers()[kidx[t]].qubits;
  }
  require(kq <= 14, ErrorKind::contract, "kept subsystem too large");
  const std::size_t kd = std::size_t{1} << kq;

  // Traced dense bits collapse into an environment index.
  std::size_t keep_dense_mask = 0;
  for (std::size_t t = 0; t < kidx.size(); ++t) {
    const auto& r = lay.registers()[kidx[t]];
    if (r.kind != RegisterKind::arithmetic)
      keep_dense_mask |= ((std::size_t{1} << r.qubits) - 1) << lay.dense_shift(r.name);
  }
  std::vector<std::size_t> env_bits;
  for (int b = 0; b < lay.dense_qubits(); ++b)
    if (!((keep_dense_mask >> b) & 1)) env_bits.push_back(static_cast<std::size_t>(b));
  const std::size_t ed = std::size_t{1} << env_bits.size();

  std::vector<std::size_t> arith_traced_slots, arith_kept_slots;
  std::vector<int> arith_kept_shift;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& r = lay.registers()[i];
    if (r.kind != RegisterKind::arithmetic) continue;
    if (kept[i]) {
      arith_kept_slots.push_back(lay.slot(r.name));
      for (std::size_t t = 0; t < kidx.size(); ++t)
        if (kidx[t] == i) arith_kept_shift.push_back(kshift[t]);
    } else {
      arith_traced_slots.push_back(lay.slot(r.name));
    }
  }

  std::map<BranchKey, CMatrix> groups;
  for (const auto& [key, v] : state.branches()) {
    BranchKey env;
    for (auto s : arith_traced_slots) env.push_back(key[s]);
    auto it = groups.find(env);
    if (it == groups.end()) it = groups.emplace(env, CMatrix::Zero(kd, ed)).first;
    std::size_t krow_base = 0;
    for (std::size_t a = 0; a < arith_kept_slots.size(); ++a)
      krow_base |= static_cast<std::size_t>(key[arith_kept_slots[a]]) << arith_kept_shift[a];
    for (Eigen::Index x = 0; x < v.size(); ++x) {
      if (v(x) == cplx(0.0)) continue;
      const auto ux = static_cast<std::size_t>(x);
      std::size_t row = krow_base;
      for (std::size_t t = 0; t < kidx.size(); ++t) {
        const auto& r = lay.registers()[kidx[t]];
        if (r.kind != RegisterKind::arithmetic)
          row |= static_cast<std::size_t>(lay.dense_value(ux, r.name)) << kshift[t];
      }
      std::size_t col = 0;
      for (std::size_t e = 0; e < env_bits.size(); ++e)
        col |= ((ux >> env_bits[e]) & 1) << e;
      it->second(row, col) += v(x);
    }
  }
  DensityOperator rho;
  rho.matrix = CMatrix::Zero(kd, kd);
  for (const auto& [env, m] : groups) rho.matrix.noalias() += m * m.adjoint();
  for (auto i : kidx) rho.subsystem.push_back(lay.registers()[i].name);
  return rho;
}

std::vector<std::size_t> sample_indices(const std::vector<double>& probs, std::size_t shots,
                                        std::uint64_t seed) {
  require(!probs.empty(), ErrorKind::contract, "empty distribution");
  std::vector<double> cdf(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    require(probs[i] >= 0 && std::isfinite(probs[i]), ErrorKind::contract, "bad probability");
    acc += probs[i];
    cdf[i] = acc;
  }
  require(acc > 0, ErrorKind::contract, "distribution has zero mass");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> out(shots);
  for (auto& o : out) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t k = static_cast<std::size_t>(it - cdf.begin());
    if (k >= probs.size()) k = probs.size() - 1;
    o = k;
  }
  return out;
}

std::map<std::uint64_t, std::size_t> sample_measurement(const SimState& state,
                                                        const std::string& reg,
                                                        std::size_t shots,
                                                        std::uint64_t seed) {
  require(shots >= 1, ErrorKind::contract, "need at least one shot");
  const auto marg = state.marginal(reg);
  std::vector<std::uint64_t> vals;
  std::vector<double> probs;
  for (const auto& [v, p] : marg) {
    vals.push_back(v);
    probs.push_back(p);
  }
  std::map<std::uint64_t, std::size_t> hist;
  for (auto k : sample_indices(probs, shots, seed)) ++hist[vals[k]];
  return hist;
}

}  // namespace qlap
