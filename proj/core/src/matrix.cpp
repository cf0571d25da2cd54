#include "blochtk/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace blochtk {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

void require(bool ok, errc kind, const char* msg) {
  if (!ok) throw error(kind, msg);
}
} // namespace

CMatrix CMatrix::identity(int n) {
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CMatrix CMatrix::adjoint() const {
  CMatrix r(cols, rows);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) r(j, i) = std::conj((*this)(i, j));
  return r;
}

CMatrix CMatrix::transpose() const {
  CMatrix r(cols, rows);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) r(j, i) = (*this)(i, j);
  return r;
}

CMatrix CMatrix::conj() const {
  CMatrix r(rows, cols);
  for (size_t i = 0; i < a.size(); ++i) r.a[i] = std::conj(a[i]);
  return r;
}

CMatrix& CMatrix::operator+=(const CMatrix& o) {
  require(rows == o.rows && cols == o.cols, errc::shape, "matrix sum: shape mismatch");
  for (size_t i = 0; i < a.size(); ++i) a[i] += o.a[i];
  return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& o) {
  require(rows == o.rows && cols == o.cols, errc::shape, "matrix difference: shape mismatch");
  for (size_t i = 0; i < a.size(); ++i) a[i] -= o.a[i];
  return *this;
}

CMatrix& CMatrix::operator*=(cplx s) {
  for (auto& x : a) x *= s;
  return *this;
}

CMatrix operator+(CMatrix x, const CMatrix& y) { return x += y; }
CMatrix operator-(CMatrix x, const CMatrix& y) { return x -= y; }

CMatrix operator*(const CMatrix& x, const CMatrix& y) {
  require(x.cols == y.rows, errc::shape, "matrix product: shape mismatch");
  CMatrix r(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      cplx xi = x(i, k);
      if (xi == cplx(0.0)) continue;
      for (int j = 0; j < y.cols; ++j) r(i, j) += xi * y(k, j);
    }
  return r;
}

CMatrix operator*(cplx s, CMatrix x) { return x *= s; }

double fro_norm(const CMatrix& m) {
  double s = 0.0;
  for (const auto& x : m.a) s += std::norm(x);
  return std::sqrt(s);
}

cplx trace(const CMatrix& m) {
  cplx t = 0.0;
  for (int i = 0; i < std::min(m.rows, m.cols); ++i) t += m(i, i);
  return t;
}

cplx det(CMatrix m) {
  require(m.rows == m.cols, errc::shape, "det: square input required");
  int n = m.rows;
  cplx d = 1.0;
  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(m(i, k)) > std::abs(m(p, k))) p = i;
    if (m(p, k) == cplx(0.0)) return 0.0;
    if (p != k) {
      for (int j = 0; j < n; ++j) std::swap(m(k, j), m(p, j));
      d = -d;
    }
    d *= m(k, k);
    for (int i = k + 1; i < n; ++i) {
      cplx f = m(i, k) / m(k, k);
      for (int j = k; j < n; ++j) m(i, j) -= f * m(k, j);
    }
  }
  return d;
}

CMatrix inverse(CMatrix m) {
  require(m.rows == m.cols, errc::shape, "inverse: square input required");
  int n = m.rows;
  CMatrix r = CMatrix::identity(n);
  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(m(i, k)) > std::abs(m(p, k))) p = i;
    require(std::abs(m(p, k)) > 0.0, errc::invalid_input, "inverse: singular matrix");
    if (p != k) {
      for (int j = 0; j < n; ++j) {
        std::swap(m(k, j), m(p, j));
        std::swap(r(k, j), r(p, j));
      }
    }
    cplx piv = m(k, k);
    for (int j = 0; j < n; ++j) {
      m(k, j) /= piv;
      r(k, j) /= piv;
    }
    for (int i = 0; i < n; ++i) {
      if (i == k) continue;
      cplx f = m(i, k);
      if (f == cplx(0.0)) continue;
      for (int j = 0; j < n; ++j) {
        m(i, j) -= f * m(k, j);
        r(i, j) -= f * r(k, j);
      }
    }
  }
  return r;
}

double herm_residual(const CMatrix& m) { return fro_norm(m - m.adjoint()); }

double unitary_residual(const CMatrix& m) {
  return fro_norm(m.adjoint() * m - CMatrix::identity(m.cols));
}

CMatrix polar_unitary(const CMatrix& m) {
  require(m.rows == m.cols, errc::shape, "polar: square input required");
  CMatrix x = m;
  for (int it = 0; it < 100; ++it) {
    CMatrix y = inverse(x).adjoint();
    y += x;
    y *= 0.5;
    double delta = fro_norm(y - x);
    x = std::move(y);
    if (delta < 1e-12) break;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Cyclic Jacobi for complex Hermitian matrices.

void herm_eig_vectors(const CMatrix& h, double tol, std::vector<double>& evals, CMatrix& vecs) {
  require(h.rows == h.cols, errc::shape, "herm_eig: square input required");
  require(herm_residual(h) <= std::max(tol, 1e-12), errc::symmetry,
          "herm_eig: input not Hermitian within tolerance");
  int n = h.rows;
  CMatrix a = h;
  // symmetrize exactly so rounding in the input cannot bias the sweeps
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      cplx v = 0.5 * (a(i, j) + std::conj(a(j, i)));
      a(i, j) = v;
      a(j, i) = std::conj(v);
    }
  CMatrix q = CMatrix::identity(n);
  double scale = fro_norm(a);
  double stop = std::max(1e-300, 1e-14 * scale);
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += std::norm(a(i, j));
    off = std::sqrt(2.0 * off);
    if (off <= stop) break;
    for (int p = 0; p < n; ++p) {
      for (int qq = p + 1; qq < n; ++qq) {
        cplx z = a(p, qq);
        if (std::abs(z) <= 1e-300) continue;
        double ap = a(p, p).real(), aq = a(qq, qq).real();
        double d = 0.5 * (ap - aq);
        double r = std::hypot(d, std::abs(z));
        if (r == 0.0) continue;
        // orthonormal eigenvectors of [[ap, z], [conj(z), aq]]; the branch on
        // sign(d) avoids the cancellation in r+d (resp. r-d)
        cplx v11, v21, v12, v22;
        if (d >= 0.0) {
          double rd = r + d;
          double nn = std::sqrt(rd * rd + std::norm(z));
          if (nn <= 1e-300) continue;
          v11 = -z / nn;
          v21 = cplx(rd / nn, 0.0);
          v12 = cplx(rd / nn, 0.0);
          v22 = std::conj(z) / nn;
        } else {
          double rm = r - d;
          double nn = std::sqrt(rm * rm + std::norm(z));
          if (nn <= 1e-300) continue;
          v11 = cplx(-rm / nn, 0.0);
          v21 = std::conj(z) / nn;
          v12 = z / nn;
          v22 = cplx(rm / nn, 0.0);
        }
        // rows p,q of a: (rowp, rowq) <- V^* (rowp, rowq)
        for (int j = 0; j < n; ++j) {
          cplx xp = a(p, j), xq = a(qq, j);
          a(p, j) = std::conj(v11) * xp + std::conj(v21) * xq;
          a(qq, j) = std::conj(v12) * xp + std::conj(v22) * xq;
        }
        // columns p,q of a and of q: (colp, colq) <- (colp, colq) V
        for (int i = 0; i < n; ++i) {
          cplx xp = a(i, p), xq = a(i, qq);
          a(i, p) = xp * v11 + xq * v21;
          a(i, qq) = xp * v12 + xq * v22;
          cplx yp = q(i, p), yq = q(i, qq);
          q(i, p) = yp * v11 + yq * v21;
          q(i, qq) = yp * v12 + yq * v22;
        }
        a(p, qq) = 0.0;
        a(qq, p) = 0.0;
      }
    }
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a(i, i).real() < a(j, j).real(); });
  evals.resize(n);
  vecs = CMatrix(n, n);
  for (int c = 0; c < n; ++c) {
    evals[c] = a(order[c], order[c]).real();
    for (int i = 0; i < n; ++i) vecs(i, c) = q(i, order[c]);
  }
}

namespace {
SpectralDecomp cluster_decomp(const std::vector<double>& evals, const CMatrix& vecs,
                              double cluster_tol) {
  int n = static_cast<int>(evals.size());
  SpectralDecomp d;
  int i = 0;
  while (i < n) {
    int j = i + 1;
    while (j < n && evals[j] - evals[j - 1] <= cluster_tol) ++j;
    double mean = 0.0;
    CMatrix proj(n, n);
    for (int c = i; c < j; ++c) {
      mean += evals[c];
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) proj(r, s) += vecs(r, c) * std::conj(vecs(s, c));
    }
    d.values.push_back(mean / (j - i));
    d.projectors.push_back(std::move(proj));
    d.multiplicities.push_back(j - i);
    i = j;
  }
  return d;
}
} // namespace

SpectralDecomp herm_eig(const CMatrix& h, double tol, double cluster_tol) {
  std::vector<double> evals;
  CMatrix vecs;
  herm_eig_vectors(h, tol, evals, vecs);
  if (cluster_tol <= 0.0) cluster_tol = std::max(1e-12, 1e3 * 2.220446049250313e-16 * fro_norm(h));
  return cluster_decomp(evals, vecs, cluster_tol);
}

CMatrix SpectralDecomp::reconstruct_hermitian() const {
  CMatrix r = CMatrix::zero(projectors.front().rows, projectors.front().cols);
  for (size_t i = 0; i < values.size(); ++i) r += values[i] * CMatrix(projectors[i]);
  return r;
}

CMatrix SpectralDecomp::reconstruct_unitary() const {
  CMatrix r = CMatrix::zero(projectors.front().rows, projectors.front().cols);
  for (size_t i = 0; i < values.size(); ++i)
    r += cplx(std::cos(values[i]), std::sin(values[i])) * CMatrix(projectors[i]);
  return r;
}

SpectralDecomp unitary_eig(const CMatrix& u, double tol) {
  require(u.rows == u.cols, errc::shape, "unitary_eig: square input required");
  require(unitary_residual(u) <= std::max(tol, 1e-9), errc::unitarity,
          "unitary_eig: input not unitary within tolerance");
  int n = u.rows;
  CMatrix ua = u.adjoint();
  CMatrix re(n, n), im(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      re(i, j) = 0.5 * (u(i, j) + ua(i, j));
      im(i, j) = (u(i, j) - ua(i, j)) / cplx(0.0, 2.0);
    }

  // near-degenerate cosine clusters are refined by the sine part, so the
  // split threshold can be generous without losing accuracy
  double split = std::max(1e-7, 1e3 * 2.220446049250313e-16 * fro_norm(u));
  std::vector<double> ev;
  CMatrix vv;
  herm_eig_vectors(re, 1e-9, ev, vv);

  // eigenvectors with phases, refined inside each cosine cluster by the sine part
  std::vector<std::pair<double, int>> phased; // (phase, column in basis matrix)
  CMatrix basis(n, n);
  int nxt = 0;
  int i = 0;
  while (i < n) {
    int j = i + 1;
    while (j < n && ev[j] - ev[j - 1] <= split) ++j;
    int mlt = j - i;
    if (mlt == 1) {
      double b = 0.0;
      cplx acc = 0.0;
      for (int r = 0; r < n; ++r) {
        cplx s = 0.0;
        for (int c = 0; c < n; ++c) s += im(r, c) * vv(c, i);
        acc += std::conj(vv(r, i)) * s;
      }
      b = acc.real();
      for (int r = 0; r < n; ++r) basis(r, nxt) = vv(r, i);
      phased.emplace_back(std::atan2(b, ev[i]), nxt);
      ++nxt;
    } else {
      CMatrix sub(mlt, mlt);
      for (int r = 0; r < mlt; ++r)
        for (int c = 0; c < mlt; ++c) {
          cplx s = 0.0;
          for (int x = 0; x < n; ++x) {
            cplx t = 0.0;
            for (int y = 0; y < n; ++y) t += im(x, y) * vv(y, i + c);
            s += std::conj(vv(x, i + r)) * t;
          }
          sub(r, c) = s;
        }
      std::vector<double> sev;
      CMatrix svv;
      herm_eig_vectors(sub, 1e-9, sev, svv);
      for (int c = 0; c < mlt; ++c) {
        for (int r = 0; r < n; ++r) {
          cplx s = 0.0;
          for (int x = 0; x < mlt; ++x) s += vv(r, i + x) * svv(x, c);
          basis(r, nxt) = s;
        }
        // cosine value recomputed with the refined vector: the crude cluster
        // value is only split-accurate
        cplx ac = 0.0;
        for (int r = 0; r < n; ++r) {
          cplx s = 0.0;
          for (int y = 0; y < n; ++y) s += re(r, y) * basis(y, nxt);
          ac += std::conj(basis(r, nxt)) * s;
        }
        phased.emplace_back(std::atan2(sev[c], ac.real()), nxt);
        ++nxt;
      }
    }
    i = j;
  }

  std::sort(phased.begin(), phased.end());
  // circular clustering: phases within tol merged, including the wrap at +-pi
  int m = n;
  std::vector<int> cluster_of(m, -1);
  int nclusters = 0;
  for (int c = 0; c < m; ++c) {
    if (c > 0 && phased[c].first - phased[c - 1].first <= tol)
      cluster_of[c] = cluster_of[c - 1];
    else
      cluster_of[c] = nclusters++;
  }
  if (nclusters > 1 && (phased.front().first + 2.0 * kPi - phased.back().first) <= tol) {
    // merge the wrap-around cluster into the first
    int last = cluster_of[m - 1];
    for (int c = 0; c < m; ++c)
      if (cluster_of[c] == last) cluster_of[c] = 0;
    // compact ids
    std::vector<int> remap(nclusters, -1);
    int k = 0;
    for (int c = 0; c < m; ++c) {
      if (remap[cluster_of[c]] < 0) remap[cluster_of[c]] = k++;
      cluster_of[c] = remap[cluster_of[c]];
    }
    nclusters = k;
  }

  SpectralDecomp d;
  d.values.resize(nclusters, 0.0);
  d.multiplicities.resize(nclusters, 0);
  d.projectors.assign(nclusters, CMatrix(n, n));
  std::vector<cplx> mean(nclusters, 0.0); // circular mean via unit vectors
  for (int c = 0; c < m; ++c) {
    int cl = cluster_of[c];
    int col = phased[c].second;
    d.multiplicities[cl]++;
    mean[cl] += cplx(std::cos(phased[c].first), std::sin(phased[c].first));
    for (int r = 0; r < n; ++r)
      for (int s = 0; s < n; ++s)
        d.projectors[cl](r, s) += basis(r, col) * std::conj(basis(s, col));
  }
  for (int cl = 0; cl < nclusters; ++cl) d.values[cl] = std::arg(mean[cl]);
  // report ascending by phase
  std::vector<int> order(nclusters);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return d.values[x] < d.values[y]; });
  SpectralDecomp out;
  for (int cl : order) {
    out.values.push_back(d.values[cl]);
    out.projectors.push_back(std::move(d.projectors[cl]));
    out.multiplicities.push_back(d.multiplicities[cl]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pfaffian.

cplx pfaffian(const CMatrix& a_in, double tol) {
  require(a_in.rows == a_in.cols, errc::shape, "pfaffian: square input required");
  int n = a_in.rows;
  require(n % 2 == 0, errc::shape, "pfaffian: even size required");
  require(fro_norm(a_in + a_in.transpose()) <=
              std::max(tol, 1e-10) * std::max(1.0, fro_norm(a_in)),
          errc::symmetry, "pfaffian: input not antisymmetric within tolerance");
  if (n == 0) return 1.0;
  CMatrix a = a_in;
  // exact antisymmetrization
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      cplx v = 0.5 * (a(i, j) - a(j, i));
      a(i, j) = v;
      a(j, i) = -v;
    }
  double sign = 1.0;
  for (int k = 0; k + 2 < n; ++k) {
    // eliminate column k below row k+1 with a unitary Householder congruence
    double xnorm2 = 0.0;
    for (int i = k + 1; i < n; ++i) xnorm2 += std::norm(a(i, k));
    double xnorm = std::sqrt(xnorm2);
    // column already eliminated (possibly with a zero subdiagonal entry: a
    // genuinely zero Pfaffian then falls out of the superdiagonal product)
    if (xnorm == 0.0) continue;
    double tail2 = 0.0;
    for (int i = k + 2; i < n; ++i) tail2 += std::norm(a(i, k));
    if (std::sqrt(tail2) <= 1e-15 * xnorm) continue; // already eliminated
    cplx x1 = a(k + 1, k);
    cplx phase = (x1 == cplx(0.0)) ? cplx(1.0) : x1 / std::abs(x1);
    cplx alpha = -phase * xnorm;
    // v = x - alpha*e_{k+1}
    std::vector<cplx> v(n, 0.0);
    for (int i = k + 1; i < n; ++i) v[i] = a(i, k);
    v[k + 1] -= alpha;
    double vv = 0.0;
    for (int i = k + 1; i < n; ++i) vv += std::norm(v[i]);
    if (vv == 0.0) continue;
    // A <- Q A Q^t with Q = I - 2 v v^*/v^*v ; Pf picks up 1/det(Q) = -1
    // rows: A <- Q A  => row_i -= 2 v_i (v^* A)_j / vv
    std::vector<cplx> w(n, 0.0);
    for (int j = 0; j < n; ++j) {
      cplx s = 0.0;
      for (int i = k + 1; i < n; ++i) s += std::conj(v[i]) * a(i, j);
      w[j] = 2.0 * s / vv;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) -= v[i] * w[j];
    // columns: A <- A Q^t => col_j -= 2 (A conj(v))_i conj(v_j)... Q^t = I - 2 conj(v) v^t / vv
    for (int i = 0; i < n; ++i) {
      cplx s = 0.0;
      for (int j = k + 1; j < n; ++j) s += a(i, j) * std::conj(v[j]);
      s = 2.0 * s / vv;
      for (int j = k + 1; j < n; ++j) a(i, j) -= s * v[j];
    }
    sign = -sign;
  }
  cplx pf = sign;
  for (int i = 0; i + 1 < n; i += 2) pf *= a(i, i + 1);
  return pf;
}

namespace {
cplx pf_rec(const CMatrix& a, std::vector<int>& idx) {
  size_t n = idx.size();
  if (n == 0) return 1.0;
  int i0 = idx[0];
  cplx acc = 0.0;
  double sgn = 1.0;
  for (size_t j = 1; j < n; ++j) {
    int ij = idx[j];
    std::vector<int> rest;
    rest.reserve(n - 2);
    for (size_t t = 1; t < n; ++t)
      if (t != j) rest.push_back(idx[t]);
    acc += sgn * a(i0, ij) * pf_rec(a, rest);
    sgn = -sgn;
  }
  return acc;
}
} // namespace

cplx pfaffian_recursive(const CMatrix& a) {
  require(a.rows == a.cols && a.rows % 2 == 0, errc::shape,
          "pfaffian_recursive: even square input required");
  std::vector<int> idx(a.rows);
  std::iota(idx.begin(), idx.end(), 0);
  return pf_rec(a, idx);
}

// ---------------------------------------------------------------------------
// Logarithm / exponential.

CMatrix principal_log(const CMatrix& u, double cut_phase, double tol) {
  SpectralDecomp d = unitary_eig(u, 1e-12);
  int n = u.rows;
  CMatrix h(n, n);
  for (size_t i = 0; i < d.values.size(); ++i) {
    double rel = d.values[i] - cut_phase;
    rel = std::fmod(rel, 2.0 * kPi);
    if (rel < 0.0) rel += 2.0 * kPi;
    // rel in [0, 2pi); distance to the cut at 0 (== 2pi)
    double gap = std::min(rel, 2.0 * kPi - rel);
    if (gap < tol)
      throw error(errc::branch_cut, "principal_log: eigenvalue within tol of the branch cut");
    h += (cut_phase + rel) * CMatrix(d.projectors[i]);
  }
  // exact Hermitian symmetrization of the spectral sum
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      cplx v = 0.5 * (h(i, j) + std::conj(h(j, i)));
      h(i, j) = v;
      h(j, i) = std::conj(v);
    }
  return h;
}

CMatrix exp_i(const CMatrix& h) {
  int n = h.rows;
  std::vector<double> ev;
  CMatrix vv;
  herm_eig_vectors(h, 1e-9, ev, vv);
  CMatrix r(n, n);
  for (int c = 0; c < n; ++c) {
    cplx ph(std::cos(ev[c]), std::sin(ev[c]));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r(i, j) += ph * vv(i, c) * std::conj(vv(j, c));
  }
  return r;
}

CMatrix orthonormalize_columns(const CMatrix& x) {
  CMatrix gram = x.adjoint() * x;
  std::vector<double> ev;
  CMatrix vv;
  herm_eig_vectors(gram, 1e-12, ev, vv);
  for (double e : ev)
    if (e < 1e-12)
      throw error(errc::invalid_input, "orthonormalize_columns: columns numerically dependent");
  CMatrix inv_sqrt(gram.rows, gram.cols);
  for (int c = 0; c < gram.cols; ++c) {
    double s = 1.0 / std::sqrt(ev[c]);
    for (int i = 0; i < gram.rows; ++i)
      for (int j = 0; j < gram.cols; ++j)
        inv_sqrt(i, j) += s * vv(i, c) * std::conj(vv(j, c));
  }
  return x * inv_sqrt;
}

std::vector<cplx> sqrt_det_branch(const std::vector<CMatrix>& path) {
  require(!path.empty(), errc::invalid_input, "sqrt_det_branch: empty path");
  std::vector<cplx> out;
  out.reserve(path.size());
  cplx prev_det = det(path.front());
  double phi = std::arg(prev_det); // principal, in (-pi, pi]
  double mag = std::sqrt(std::abs(prev_det));
  out.push_back(std::polar(mag, phi / 2.0));
  double acc_phase = phi; // unwrapped det phase along the path
  for (size_t i = 1; i < path.size(); ++i) {
    cplx d = det(path[i]);
    double dphi = std::arg(d / prev_det);
    if (std::abs(dphi) >= kPi / 2.0)
      throw error(errc::refinement, "sqrt_det_branch: path too coarse (det phase jump >= pi/2)");
    acc_phase += dphi;
    prev_det = d;
    out.push_back(std::polar(std::sqrt(std::abs(d)), acc_phase / 2.0));
  }
  return out;
}

double op_norm(const CMatrix& m) {
  CMatrix g = m.adjoint() * m;
  std::vector<double> ev;
  CMatrix vv;
  herm_eig_vectors(g, 1e-6 + 1e-9 * fro_norm(g), ev, vv);
  double mx = ev.empty() ? 0.0 : ev.back();
  return std::sqrt(std::max(0.0, mx));
}

} // namespace blochtk
