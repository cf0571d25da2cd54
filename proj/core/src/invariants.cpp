#include "blochtk/invariants.hpp"

#include <cmath>

namespace blochtk {

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

void require_1d_fermionic(const UnitaryFamily& alpha, const char* who) {
  if (alpha.grid.dim != 1) throw error(errc::shape, std::string(who) + ": needs a 1D family");
  if (!alpha.symmetry || alpha.symmetry->kind != sym_kind::fermionic)
    throw error(errc::symmetry, std::string(who) + ": needs fermionic symmetry");
}

cplx p_value(const CMatrix& eps, const CMatrix& a, cplx sqrt_det, const char* who) {
  CMatrix ea = eps * a;
  if (fro_norm(ea + ea.transpose()) > 1e-8)
    throw error(errc::symmetry, std::string(who) + ": eps*alpha not antisymmetric at k#");
  cplx pf = pfaffian(ea);
  cplx p = sqrt_det / pf;
  if (std::abs(p * p - cplx(1.0)) > 1e-8)
    throw error(errc::symmetry, std::string(who) + ": p(k#)^2 deviates from 1");
  return p;
}

} // namespace

Z2Report gp_index(const UnitaryFamily& alpha) {
  require_1d_fermionic(alpha, "gp_index");
  int half = alpha.grid.n / 2;
  std::vector<CMatrix> path(alpha.samples.begin(), alpha.samples.begin() + half + 1);
  std::vector<cplx> roots = sqrt_det_branch(path);

  CMatrix eps = alpha.symmetry->epsilon();
  cplx p0 = p_value(eps, alpha.samples[0], roots.front(), "gp_index");
  cplx ph = p_value(eps, alpha.samples[static_cast<size_t>(half)], roots.back(), "gp_index");

  Z2Report rep;
  rep.p_values["line:0"] = p0;
  rep.p_values["line:1/2"] = ph;
  rep.det_phases["line:0"] = std::arg(roots.front() * roots.front());
  rep.det_phases["line:1/2"] = 2.0 * std::arg(roots.back()); // unwrapped branch doubles cleanly
  rep.indices["line"] = (p0 * ph).real() < 0.0 ? 1 : 0;
  rep.consistent = true;
  return rep;
}

int winding_det(const UnitaryFamily& gamma) {
  if (gamma.grid.dim != 1) throw error(errc::shape, "winding_det: needs a 1D family");
  double total = 0.0;
  size_t n = gamma.samples.size();
  cplx prev = det(gamma.samples[0]);
  for (size_t j = 1; j <= n; ++j) {
    cplx cur = det(gamma.samples[j % n]);
    double step = std::arg(cur / prev);
    if (std::abs(step) > 2.5)
      throw error(errc::refinement, "winding_det: determinant phase step too large, refine");
    total += step;
    prev = cur;
  }
  double w = total / kTau;
  long rounded = std::lround(w);
  if (std::abs(w - rounded) > 0.1)
    throw error(errc::refinement, "winding_det: winding not close to an integer, refine");
  return static_cast<int>(rounded);
}

UnitaryFamily matching_from_factor(const UnitaryFamily& gamma) {
  if (gamma.grid.dim != 1) throw error(errc::shape, "matching_from_factor: needs a 1D family");
  SymmetryKind sym = SymmetryKind::fermionic(gamma.m);
  CMatrix eps = sym.epsilon();
  CMatrix eps_inv = inverse(eps);
  UnitaryFamily alpha;
  alpha.grid = gamma.grid;
  alpha.m = gamma.m;
  alpha.symmetry = sym;
  alpha.samples.resize(gamma.samples.size());
  for (size_t i = 0; i < gamma.samples.size(); ++i) {
    size_t r = gamma.grid.reflect(i);
    alpha.samples[i] = eps_inv * gamma.samples[r].transpose() * eps * gamma.samples[i];
  }
  return alpha;
}

int gp_index_via_factorization(const UnitaryFamily& gamma) {
  int w = winding_det(gamma);
  int idx = ((w % 2) + 2) % 2;
  UnitaryFamily alpha = matching_from_factor(gamma);
  Z2Report rep = gp_index(alpha);
  if (rep.indices.at("line") != idx)
    throw error(errc::invalid_input,
                "gp_index_via_factorization: winding parity disagrees with the GP index");
  return idx;
}

Z2Report indices_2d(const UnitaryFamily& alpha) {
  if (alpha.grid.dim != 2) throw error(errc::shape, "indices_2d: needs a 2D family");
  if (!alpha.symmetry || alpha.symmetry->kind != sym_kind::fermionic)
    throw error(errc::symmetry, "indices_2d: needs fermionic symmetry");

  struct Line {
    const char* name;
    int axis;
    double value;
  };
  const Line lines[4] = {{"k1=0", 0, 0.0}, {"k1=1/2", 0, 0.5}, {"k2=0", 1, 0.0}, {"k2=1/2", 1, 0.5}};

  Z2Report rep;
  int sum = 0;
  for (const Line& ln : lines) {
    UnitaryFamily restr = restrict_family(alpha, ln.axis, ln.value);
    Z2Report sub = gp_index(restr);
    int idx = sub.indices.at("line");
    rep.indices[ln.name] = idx;
    sum += idx;
    for (const auto& [key, val] : sub.p_values)
      rep.p_values[std::string(ln.name) + ":" + key.substr(key.find(':') + 1)] = val;
    for (const auto& [key, val] : sub.det_phases)
      rep.det_phases[std::string(ln.name) + ":" + key.substr(key.find(':') + 1)] = val;
  }
  rep.consistent = (sum % 2 == 0);
  return rep;
}

bool classify(const UnitaryFamily& a0, const UnitaryFamily& a1) {
  if (a0.m != a1.m || a0.grid.dim != a1.grid.dim || a0.grid.n != a1.grid.n)
    throw error(errc::shape, "classify: family shapes differ");
  bool f0 = a0.symmetry && a0.symmetry->kind == sym_kind::fermionic;
  bool f1 = a1.symmetry && a1.symmetry->kind == sym_kind::fermionic;
  if (f0 != f1) throw error(errc::symmetry, "classify: symmetry kinds differ");
  if (!f0) return true; // bosonic matching families are all null-homotopic
  if (a0.grid.dim == 1)
    return gp_index(a0).indices.at("line") == gp_index(a1).indices.at("line");
  return indices_2d(a0).indices == indices_2d(a1).indices;
}

bool kramers_check(const CMatrix& a, double cluster_tol) {
  SpectralDecomp sd = unitary_eig(a, cluster_tol);
  for (int mult : sd.multiplicities)
    if (mult % 2 != 0) return false;
  return true;
}

} // namespace blochtk
