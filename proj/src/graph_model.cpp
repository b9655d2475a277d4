#include "qlap/graph_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "qlap/error.hpp"

namespace qlap {

double VertexSet::max_norm() const {
  double m = 0.0;
  for (std::size_t i = 0; i < count; ++i) m = std::max(m, norms[i]);
  return m;
}

bool VertexSet::unit_norm(double tol) const {
  for (std::size_t i = 0; i < count; ++i)
    if (std::abs(norms[i] - 1.0) > tol) return false;
  return true;
}

VertexSet VertexSet::from_rows(const std::vector<std::vector<double>>& rows) {
  require(rows.size() >= 2, ErrorKind::input, "need at least two vertices");
  const std::size_t m = rows.front().size();
  require(m >= 1, ErrorKind::input, "vertices must have at least one coordinate");
  for (const auto& r : rows) {
    require(r.size() == m, ErrorKind::input, "vertices have inconsistent dimension");
    for (double v : r) require(std::isfinite(v), ErrorKind::input, "non-finite vertex entry");
  }
  VertexSet vs;
  vs.count = rows.size();
  vs.dim = m;
  const std::size_t pn = std::size_t{1} << ceil_log2(vs.count, true);
  const std::size_t pm = std::size_t{1} << ceil_log2(m, true);
  vs.vertices = RMatrix::Zero(pn, pm);
  vs.norms.assign(pn, 0.0);
  for (std::size_t i = 0; i < vs.count; ++i) {
    for (std::size_t k = 0; k < m; ++k) vs.vertices(i, k) = rows[i][k];
    vs.norms[i] = vs.vertices.row(i).norm();
  }
  return vs;
}

void VertexSet::validate() const {
  require(count >= 2 && dim >= 1, ErrorKind::input, "vertex set too small");
  require(is_power_of_two(padded_count()) && is_power_of_two(padded_dim()),
          ErrorKind::input, "vertex set not padded to powers of two");
  require(norms.size() == padded_count(), ErrorKind::input, "norm list has wrong length");
  require(vertices.allFinite(), ErrorKind::input, "non-finite vertex entry");
  for (std::size_t i = 0; i < padded_count(); ++i) {
    const double n = vertices.row(i).norm();
    require(std::abs(n - norms[i]) <= 1e-12 * std::max(1.0, n), ErrorKind::input,
            "stored norm disagrees with vertex");
    if (i >= count) require(n == 0.0, ErrorKind::input, "padding vertex is not zero");
  }
}

VertexSet read_vertices_csv(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open input file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        require(cell.find_first_not_of(" \t", used) == std::string::npos, ErrorKind::input,
                "bad number");
      } catch (const std::logic_error&) {
        fail(ErrorKind::input, path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return VertexSet::from_rows(rows);
}

VertexSet read_vertices_json(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open input file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::input, path + ": " + e.what());
  }
  require(j.is_object() && j.contains("vertices") && j["vertices"].is_array(),
          ErrorKind::input, path + ": expected {\"vertices\": [[...], ...]}");
  std::vector<std::vector<double>> rows;
  for (const auto& r : j["vertices"]) {
    require(r.is_array(), ErrorKind::input, path + ": vertex is not an array");
    std::vector<double> row;
    for (const auto& v : r) {
      require(v.is_number(), ErrorKind::input, path + ": non-numeric coordinate");
      row.push_back(v.get<double>());
    }
    rows.push_back(std::move(row));
  }
  return VertexSet::from_rows(rows);
}

VertexSet read_vertices(const std::string& path) {
  const auto dot = path.rfind('.');
  if (dot != std::string::npos && path.substr(dot) == ".json") return read_vertices_json(path);
  return read_vertices_csv(path);
}

KernelParams KernelParams::make(double lambda, int p) {
  require(std::isfinite(lambda) && lambda > 0, ErrorKind::input, "lambda must be positive");
  require(p >= 0, ErrorKind::input, "truncation order must be nonnegative");
  KernelParams kp;
  kp.lambda = lambda;
  kp.p = p;
  const double damp = std::exp(-2.0 * lambda);
  double ak = 1.0;
  for (int k = 0; k <= p; ++k) {
    if (k > 0) ak *= 2.0 * lambda / k;
    kp.a.push_back(ak);
    kp.a_tilde.push_back(damp * ak);
  }
  for (double v : kp.a) kp.a_sum += v;
  for (double v : kp.a_tilde) kp.a_tilde_sum += v;
  return kp;
}

RMatrix build_weight_matrix(const VertexSet& vs, const KernelParams& kp) {
  require(kp.lambda > 0, ErrorKind::input, "lambda must be positive");
  require(vs.vertices.allFinite(), ErrorKind::input, "non-finite vertex entry");
  const std::size_t n = vs.padded_count();
  RMatrix w = RMatrix::Zero(n, n);
  for (std::size_t i = 0; i < vs.count; ++i)
    for (std::size_t j = i + 1; j < vs.count; ++j) {
      const double d2 = (vs.vertices.row(i) - vs.vertices.row(j)).squaredNorm();
      w(i, j) = w(j, i) = std::exp(-kp.lambda * d2);
    }
  return w;
}

namespace {

double taylor_entry(const VertexSet& vs, const KernelParams& kp, std::size_t i, std::size_t j) {
  const double ip = vs.vertices.row(i).dot(vs.vertices.row(j));
  double s = 0.0, pw = 1.0;
  for (int k = 0; k <= kp.p; ++k) {
    s += kp.a[k] * pw;
    pw *= ip;
  }
  const double pre = std::exp(-kp.lambda * (vs.norms[i] * vs.norms[i] + vs.norms[j] * vs.norms[j]));
  return pre * s;
}

}  // namespace

TaylorWeights build_taylor_weight_matrix(const VertexSet& vs, const KernelParams& kp) {
  require(kp.p >= 0 && kp.a.size() == static_cast<std::size_t>(kp.p + 1), ErrorKind::input,
          "kernel parameters not initialised");
  require(vs.vertices.allFinite(), ErrorKind::input, "non-finite vertex entry");
  const std::size_t n = vs.padded_count();
  TaylorWeights tw{RMatrix::Zero(n, n), RVector::Zero(n)};
  for (std::size_t i = 0; i < vs.count; ++i) {
    tw.diagonal(i) = taylor_entry(vs, kp, i, i);
    for (std::size_t j = i + 1; j < vs.count; ++j)
      tw.off_diagonal(i, j) = tw.off_diagonal(j, i) = taylor_entry(vs, kp, i, j);
  }
  return tw;
}

RMatrix build_taylor_weight_matrix_unit(const VertexSet& vs, const KernelParams& kp) {
  require(vs.unit_norm(1e-10), ErrorKind::input, "unit-norm form needs unit-norm vertices");
  const std::size_t n = vs.padded_count();
  RMatrix w = RMatrix::Zero(n, n);
  for (std::size_t i = 0; i < vs.count; ++i)
    for (std::size_t j = i + 1; j < vs.count; ++j) {
      const double ip = vs.vertices.row(i).dot(vs.vertices.row(j));
      double s = 0.0, pw = 1.0;
      for (int k = 0; k <= kp.p; ++k) {
        s += kp.a_tilde[k] * pw;
        pw *= ip;
      }
      w(i, j) = w(j, i) = s;
    }
  return w;
}

GraphMatrices build_laplacians(const RMatrix& w, std::size_t active) {
  const auto n = static_cast<std::size_t>(w.rows());
  require(w.rows() == w.cols() && active >= 1 && active <= n, ErrorKind::contract,
          "weight matrix must be square");
  require(w.allFinite(), ErrorKind::input, "non-finite weight");
  for (std::size_t i = 0; i < n; ++i) {
    require(w(i, i) == 0.0, ErrorKind::contract, "weight matrix diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j) {
      require(w(i, j) >= 0.0, ErrorKind::contract, "negative weight");
      require(std::abs(w(i, j) - w(j, i)) <= 1e-14 * std::max(1.0, std::abs(w(i, j))),
              ErrorKind::contract, "weight matrix is not symmetric");
      if (i >= active || j >= active)
        require(w(i, j) == 0.0, ErrorKind::contract, "padding vertex carries weight");
    }
  }
  GraphMatrices g;
  g.active = active;
  g.W = w;
  const RVector deg = w.rowwise().sum();
  for (std::size_t i = 0; i < active; ++i)
    require(deg(i) > 0.0, ErrorKind::degenerate,
            "vertex " + std::to_string(i) + " has zero degree");
  g.D = deg.asDiagonal();
  g.L = g.D - w;
  g.trace_D = deg.sum();
  RVector isq = RVector::Zero(n), inv = RVector::Zero(n);
  for (std::size_t i = 0; i < active; ++i) {
    isq(i) = 1.0 / std::sqrt(deg(i));
    inv(i) = 1.0 / deg(i);
  }
  g.L_s = isq.asDiagonal() * g.L * isq.asDiagonal();
  g.L_s = 0.5 * (g.L_s + g.L_s.transpose()).eval();
  g.L_r = inv.asDiagonal() * g.L;
  return g;
}

GraphMatrices build_laplacians(const RMatrix& w_like) {
  return build_laplacians(w_like, static_cast<std::size_t>(w_like.rows()));
}

GraphMatrices build_graph(const VertexSet& vs, const KernelParams& kp) {
  vs.validate();
  GraphMatrices g = build_laplacians(build_weight_matrix(vs, kp), vs.count);
  g.W_p = build_taylor_weight_matrix(vs, kp).off_diagonal;
  return g;
}

namespace {

void fix_signs(RMatrix& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    const double scale = v.col(c).cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      if (std::abs(v(r, c)) > 1e-8 * scale) {
        if (v(r, c) < 0) v.col(c) *= -1.0;
        break;
      }
    }
  }
}

}  // namespace

SpectralReference full_eigensolve(const RMatrix& m) {
  require(m.rows() == m.cols(), ErrorKind::contract, "eigensolve needs a square matrix");
  require(m.isApprox(m.transpose(), 1e-10) || m.norm() == 0.0, ErrorKind::contract,
          "eigensolve needs a symmetric matrix");
  Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (m + m.transpose()));
  SpectralReference r{es.eigenvalues(), es.eigenvectors(), static_cast<std::size_t>(m.rows())};
  fix_signs(r.eigenvectors);
  return r;
}

SpectralReference classical_eigensolve(const RMatrix& m, std::size_t d, double zero_tol) {
  require(m.rows() == m.cols(), ErrorKind::contract, "eigensolve needs a square matrix");
  require(d >= 1 && d < static_cast<std::size_t>(m.rows()), ErrorKind::range,
          "d must lie in [1, n-1]");
  const SpectralReference all = full_eigensolve(m);
  const double scale = std::max(1.0, all.eigenvalues.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < all.eigenvalues.size(); ++k)
    if (std::abs(all.eigenvalues(k)) > zero_tol * scale) keep.push_back(k);
  require(keep.size() >= d, ErrorKind::range,
          "requested " + std::to_string(d) + " nonzero eigenpairs, only " +
              std::to_string(keep.size()) + " exist");
  SpectralReference r;
  r.d = d;
  r.eigenvalues.resize(d);
  r.eigenvectors.resize(m.rows(), d);
  for (std::size_t k = 0; k < d; ++k) {
    r.eigenvalues(k) = all.eigenvalues(keep[k]);
    r.eigenvectors.col(k) = all.eigenvectors.col(keep[k]);
  }
  return r;
}

TruncationReport truncation_error_report(const VertexSet& vs, const KernelParams& kp) {
  require(kp.p >= 0, ErrorKind::input, "truncation order must be nonnegative");
  const RMatrix w = build_weight_matrix(vs, kp);
  const RMatrix wp = build_taylor_weight_matrix(vs, kp).off_diagonal;
  const std::size_t n = vs.padded_count();
  TruncationReport rep{RMatrix::Zero(n, n), RMatrix::Zero(n, n)};
  for (std::size_t i = 0; i < vs.count; ++i)
    for (std::size_t j = 0; j < vs.count; ++j) {
      if (i == j) continue;
      const double z = 2.0 * kp.lambda * std::abs(vs.vertices.row(i).dot(vs.vertices.row(j)));
      const double pre = std::exp(-kp.lambda * (vs.norms[i] * vs.norms[i] + vs.norms[j] * vs.norms[j]));
      const double rem = std::exp((kp.p + 1) * std::log(z) - std::lgamma(kp.p + 2.0) + z);
      rep.bound(i, j) = z == 0.0 ? 0.0 : rem * pre;
      rep.measured(i, j) = std::abs(w(i, j) - wp(i, j));
    }
  rep.max_measured = rep.measured.maxCoeff();
  rep.max_bound = rep.bound.maxCoeff();
  // Rounding in the two evaluations sits well below this slack.
  rep.within = ((rep.measured - rep.bound).array() <= 1e-15).all();
  return rep;
}

std::string graph_matrices_json(const GraphMatrices& g) {
  auto mat = [](const RMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      nlohmann::json r = nlohmann::json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
      rows.push_back(r);
    }
    return rows;
  };
  nlohmann::json j;
  j["n"] = g.active;
  j["W"] = mat(g.W);
  if (g.W_p.size()) j["W_p"] = mat(g.W_p);
  j["D"] = mat(g.D);
  j["L"] = mat(g.L);
  j["L_s"] = mat(g.L_s);
  j["L_r"] = mat(g.L_r);
  j["trace_D"] = g.trace_D;
  return j.dump();
}

}  // namespace qlap
