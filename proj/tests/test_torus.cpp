#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "blochtk/io.hpp"
#include "blochtk/torus.hpp"
#include "test_util.hpp"

using namespace blochtk;
using btk_test::random_hermitian;
using btk_test::random_unitary;

namespace {
constexpr double kTau = 6.283185307179586476925286766559;

UnitaryFamily diag_phase_family(int n_pts) {
  // alpha(k) = diag(e^{2 pi i k}, e^{-2 pi i k}) is fermionic-TRS:
  // eps alpha(k) eps^-1 has swapped phases, matching alpha(-k)^t.
  UnitaryFamily fam;
  fam.grid = TorusGrid(1, n_pts);
  fam.m = 2;
  fam.symmetry = SymmetryKind::fermionic(2);
  fam.samples.resize(fam.grid.size());
  for (size_t i = 0; i < fam.samples.size(); ++i) {
    double k = fam.grid.coordinate(i, 0);
    CMatrix u(2, 2);
    u(0, 0) = std::polar(1.0, kTau * k);
    u(1, 1) = std::polar(1.0, -kTau * k);
    fam.samples[i] = u;
  }
  return fam;
}
} // namespace

TEST_CASE("grid indexing round-trips and reflection is an involution") {
  TorusGrid g(3, 8);
  CHECK(g.size() == 512);
  for (size_t f : {size_t{0}, size_t{17}, size_t{511}, size_t{300}}) {
    CHECK(g.flatten(g.unflatten(f)) == f);
    CHECK(g.reflect(g.reflect(f)) == f);
  }
  // last axis fastest
  CHECK(g.flatten({0, 0, 1}) == 1);
  CHECK(g.flatten({0, 1, 0}) == 8);
  CHECK(g.flatten({1, 0, 0}) == 64);
  CHECK(g.shift(0, 2, -1) == 7);
  CHECK(g.reflect(g.flatten({1, 2, 3})) == g.flatten({7, 6, 5}));
  CHECK(g.coordinate(g.flatten({1, 4, 0}), 1) == doctest::Approx(0.5));

  CHECK(g.high_symmetry_points().size() == 8);
  CHECK(g.is_high_symmetry(g.flatten({0, 4, 4})));
  CHECK(!g.is_high_symmetry(g.flatten({0, 1, 4})));

  CHECK_THROWS_AS(TorusGrid(0, 8), error);
  CHECK_THROWS_AS(TorusGrid(1, 7), error);
  CHECK_THROWS_AS(TorusGrid(1, 4), error);
}

TEST_CASE("symmetry kinds: epsilon structure and theta") {
  SymmetryKind b = SymmetryKind::bosonic(3);
  CHECK(fro_norm(b.epsilon() - CMatrix::identity(3)) == 0.0);
  CHECK(b.theta_square_sign() == 1);

  SymmetryKind f = SymmetryKind::fermionic(4);
  CMatrix e = f.epsilon();
  CHECK(fro_norm(e * e + CMatrix::identity(4)) == 0.0); // eps^2 = -1
  CHECK(e(0, 1) == cplx(1.0));
  CHECK(e(1, 0) == cplx(-1.0));
  CHECK(f.theta_square_sign() == -1);
  // theta^2 v = eps conj(eps conj v) = eps conj(eps) v = -v
  CMatrix v(4, 1);
  v(0, 0) = cplx(1.0, 2.0);
  v(2, 0) = cplx(-0.5, 0.25);
  CHECK(fro_norm(f.theta(f.theta(v)) + v) < 1e-15);

  CHECK_THROWS_AS(SymmetryKind::fermionic(3), error);
}

TEST_CASE("constant identity family validates with zero residuals") {
  UnitaryFamily fam;
  fam.grid = TorusGrid(2, 8);
  fam.m = 2;
  fam.symmetry = SymmetryKind::bosonic(2);
  fam.samples.assign(fam.grid.size(), CMatrix::identity(2));
  ValidationReport rep = validate_matching(fam);
  CHECK(rep.pass);
  CHECK(rep.unitarity_residual == 0.0);
  CHECK(rep.trs_residual == 0.0);
  CHECK(rep.step_norm == 0.0);
}

TEST_CASE("scaled sample fails unitarity validation") {
  UnitaryFamily fam;
  fam.grid = TorusGrid(1, 8);
  fam.m = 2;
  fam.samples.assign(fam.grid.size(), CMatrix::identity(2));
  fam.samples[3] *= cplx(1.5);
  ValidationReport rep = validate_matching(fam);
  CHECK(!rep.pass);
  CHECK(rep.worst_index == 3);
  CHECK(rep.unitarity_residual > 0.1);
}

TEST_CASE("diagonal winding family has machine-exact fermionic TRS") {
  UnitaryFamily fam = diag_phase_family(32);
  CHECK(trs_residual(fam) <= 1e-12);
  ValidationReport rep = validate_matching(fam);
  CHECK(rep.pass);
}

TEST_CASE("trs_residual detects a broken sample") {
  UnitaryFamily fam = diag_phase_family(16);
  fam.samples[5](0, 1) = cplx(0.0, 0.3);
  CHECK(trs_residual(fam) > 0.1);
}

TEST_CASE("projection validation: constant rank-1 family") {
  ProjectionFamily fam;
  fam.grid = TorusGrid(1, 8);
  fam.amb = 2;
  fam.m = 1;
  fam.symmetry = SymmetryKind::bosonic(2);
  CMatrix p(2, 2);
  p(0, 0) = 0.5;
  p(0, 1) = 0.5;
  p(1, 0) = 0.5;
  p(1, 1) = 0.5;
  fam.samples.assign(fam.grid.size(), p);
  ValidationReport rep = validate_projections(fam);
  CHECK(rep.pass);
  CHECK(rep.idempotency_residual < 1e-15);
  CHECK(rep.rank_deviation < 1e-15);
  CHECK(rep.trs_residual < 1e-15); // real matrix, bosonic theta

  fam.samples[2](0, 0) = 0.8; // no longer a projection
  rep = validate_projections(fam);
  CHECK(!rep.pass);
  CHECK(rep.worst_index == 2);
}

TEST_CASE("bump profile: evenness, plateau, support") {
  BumpProfile b = make_bump(0.0, 0.05, 0.2, 64);
  CHECK(b.values.size() == 64);
  CHECK(b[0] == 1.0);
  CHECK(b[1] == 1.0); // 1/64 < 0.05
  CHECK(b[3] == 1.0); // 3/64 = 0.046875 < 0.05
  CHECK(b[4] < 1.0);
  CHECK(b[4] > 0.0);
  for (int i = 1; i < 64; ++i) CHECK(b[i] == b[64 - i]); // exactly even
  for (int i = 13; i <= 51; ++i) CHECK(b[i] == 0.0);     // 13/64 > 0.2

  // off-center bump, still even about its center on the grid
  BumpProfile c = make_bump(0.5, 0.0, 0.1, 64);
  CHECK(c[32] == 1.0);
  for (int d = 1; d < 32; ++d) CHECK(c[32 + d] == doctest::Approx(c[32 - d]).epsilon(1e-15));

  CHECK_THROWS_AS(make_bump(0.0, 0.1, 0.3, 64), error);  // support too wide
  CHECK_THROWS_AS(make_bump(0.0, 0.2, 0.1, 64), error);  // plateau >= support

  // continuous evaluation: monotone decay across the shoulder
  double prev = 1.0;
  for (double x = 0.05; x <= 0.2; x += 0.01) {
    double v = bump_value(0.0, 0.05, 0.2, x);
    CHECK(v <= prev + 1e-15);
    prev = v;
  }
  CHECK(bump_value(0.0, 0.05, 0.2, 0.9) ==
        doctest::Approx(bump_value(0.0, 0.05, 0.2, 0.1)).epsilon(1e-12)); // periodized
}

TEST_CASE("smoothing: preserves exact symmetries, reduces roughness") {
  std::mt19937_64 rng(77);
  UnitaryFamily fam = diag_phase_family(32);
  // roughen with a TRS-symmetric multiplicative noise exp(i h_sym)
  CMatrix eps = fam.symmetry->epsilon();
  CMatrix eps_inv = inverse(eps);
  std::vector<CMatrix> h(fam.grid.size());
  for (size_t i = 0; i < h.size(); ++i) h[i] = random_hermitian(2, rng, 0.35);
  for (size_t i = 0; i < h.size(); ++i) {
    size_t r = fam.grid.reflect(i);
    CMatrix sym = cplx(0.5) * (h[i] + eps_inv * h[r].transpose() * eps);
    if (i <= r) {
      h[i] = sym;
      h[r] = eps_inv * sym.transpose() * eps; // exact grid-index symmetrization
    }
  }
  // symmetric sandwich keeps the matching constraint exact; a one-sided
  // product would not
  UnitaryFamily rough = fam;
  for (size_t i = 0; i < h.size(); ++i) {
    CMatrix half = exp_i(cplx(0.5) * h[i]);
    rough.samples[i] = half * fam.samples[i] * half;
  }
  double rough_step = step_norm(rough.grid, rough.samples);
  CHECK(trs_residual(rough) < 1e-12);

  UnitaryFamily smooth = smooth_even_convolve(rough, 0.12);
  for (const auto& s : smooth.samples) CHECK(unitary_residual(s) < 1e-12);
  CHECK(trs_residual(smooth) < 1e-10);
  CHECK(step_norm(smooth.grid, smooth.samples) < rough_step);

  CHECK_THROWS_AS(smooth_even_convolve(rough, 0.3), error);
}

TEST_CASE("det phase normalization: winding split off, non-winding exact") {
  // flat family with a small non-winding det phase wobble
  UnitaryFamily fam;
  fam.grid = TorusGrid(1, 16);
  fam.m = 2;
  fam.samples.resize(fam.grid.size());
  for (size_t i = 0; i < fam.samples.size(); ++i) {
    double k = fam.grid.coordinate(i, 0);
    double phi = 0.4 * std::sin(kTau * k);
    CMatrix u = CMatrix::identity(2);
    u *= std::polar(1.0, phi / 2.0);
    fam.samples[i] = u;
  }
  DetNormalization dn = det_phase_normalize(fam);
  for (size_t i = 0; i < fam.samples.size(); ++i) {
    CHECK(std::abs(det(dn.normalized.samples[i]) - cplx(1.0)) < 1e-12);
    double k = fam.grid.coordinate(i, 0);
    CHECK(dn.phase[i] == doctest::Approx(0.4 * std::sin(kTau * k)).epsilon(1e-12));
  }

  // winding determinant along the cycle must be rejected
  UnitaryFamily wind = diag_phase_family(16);
  for (auto& s : wind.samples) s(1, 1) = 1.0; // det = e^{2 pi i k}, winding 1
  wind.symmetry.reset();
  CHECK_THROWS_AS(det_phase_normalize(wind), error);
}

TEST_CASE("restriction: hyperplanes, symmetry survival, off-grid rejection") {
  std::mt19937_64 rng(5);
  UnitaryFamily fam;
  fam.grid = TorusGrid(2, 8);
  fam.m = 2;
  fam.symmetry = SymmetryKind::bosonic(2);
  fam.samples.resize(fam.grid.size());
  for (auto& s : fam.samples) s = random_unitary(2, rng);

  UnitaryFamily line = restrict_family(fam, 0, 0.5);
  CHECK(line.grid.dim == 1);
  CHECK(line.symmetry.has_value());
  for (size_t i = 0; i < line.samples.size(); ++i) {
    size_t src = fam.grid.flatten({4, static_cast<int>(i), 0});
    CHECK(fro_norm(line.samples[i] - fam.samples[src]) == 0.0);
  }

  UnitaryFamily off = restrict_family(fam, 1, 0.25);
  CHECK(!off.symmetry.has_value()); // not a half-integer line
  for (size_t i = 0; i < off.samples.size(); ++i) {
    size_t src = fam.grid.flatten({static_cast<int>(i), 2, 0});
    CHECK(fro_norm(off.samples[i] - fam.samples[src]) == 0.0);
  }

  CHECK_THROWS_AS(restrict_family(fam, 0, 0.13), error); // not a grid coordinate
  CHECK_THROWS_AS(restrict_family(fam, 2, 0.0), error);  // bad axis
  UnitaryFamily one_d = diag_phase_family(8);
  CHECK_THROWS_AS(restrict_family(one_d, 0, 0.0), error); // dim 1 cannot restrict
}

TEST_CASE("TRS matching family has even eigenphase multisets (Kramers property)") {
  std::mt19937_64 rng(11);
  // build an exactly-TRS family: a(k) = exp(i h(k)) with eps h(k) = h(-k)^t eps
  for (auto kind : {SymmetryKind::bosonic(2), SymmetryKind::fermionic(2)}) {
    UnitaryFamily fam;
    fam.grid = TorusGrid(1, 16);
    fam.m = 2;
    fam.symmetry = kind;
    fam.samples.resize(fam.grid.size());
    CMatrix eps = kind.epsilon();
    CMatrix eps_inv = inverse(eps);
    std::vector<CMatrix> h(fam.grid.size());
    for (size_t i = 0; i < h.size(); ++i) h[i] = random_hermitian(2, rng, 0.4);
    for (size_t i = 0; i < h.size(); ++i) {
      size_t r = fam.grid.reflect(i);
      if (i > r) continue;
      CMatrix sym = cplx(0.5) * (h[i] + eps_inv * h[r].transpose() * eps);
      h[i] = sym;
      h[r] = eps_inv * sym.transpose() * eps;
    }
    for (size_t i = 0; i < h.size(); ++i) fam.samples[i] = exp_i(h[i]);
    REQUIRE(trs_residual(fam) < 1e-13);

    // spectrum of a(k) equals spectrum of a(-k)
    for (size_t i = 0; i < fam.samples.size(); ++i) {
      auto sp = unitary_eig(fam.samples[i], 1e-10);
      auto sr = unitary_eig(fam.samples[fam.grid.reflect(i)], 1e-10);
      REQUIRE(sp.values.size() == sr.values.size());
      for (size_t c = 0; c < sp.values.size(); ++c)
        CHECK(sp.values[c] == doctest::Approx(sr.values[c]).epsilon(1e-9));
    }
  }
}

TEST_CASE("family file round-trip is byte-exact") {
  std::mt19937_64 rng(23);
  UnitaryFamily fam;
  fam.grid = TorusGrid(2, 8);
  fam.m = 3;
  fam.symmetry = SymmetryKind::bosonic(3);
  fam.samples.resize(fam.grid.size());
  for (auto& s : fam.samples) s = random_unitary(3, rng);

  std::stringstream buf;
  write_family(buf, fam);
  UnitaryFamily back = read_unitary_family(buf);
  CHECK(back.grid.dim == 2);
  CHECK(back.grid.n == 8);
  CHECK(back.m == 3);
  REQUIRE(back.symmetry.has_value());
  CHECK(back.symmetry->kind == sym_kind::bosonic);
  for (size_t i = 0; i < fam.samples.size(); ++i)
    CHECK(fam.samples[i].a == back.samples[i].a); // bitwise

  // writing twice produces identical bytes
  std::stringstream buf2;
  write_family(buf2, fam);
  std::stringstream buf3;
  write_family(buf3, fam);
  CHECK(buf2.str() == buf3.str());
}

TEST_CASE("projection family file round-trip and payload mismatch") {
  ProjectionFamily fam;
  fam.grid = TorusGrid(1, 8);
  fam.amb = 2;
  fam.m = 1;
  fam.symmetry = SymmetryKind::fermionic(2);
  CMatrix p(2, 2);
  p(0, 0) = 1.0;
  fam.samples.assign(fam.grid.size(), p);

  std::stringstream buf;
  write_family(buf, fam);
  ProjectionFamily back = read_projection_family(buf);
  CHECK(back.amb == 2);
  CHECK(back.m == 1);
  CHECK(back.symmetry.kind == sym_kind::fermionic);
  CHECK(fro_norm(back.samples[5] - p) == 0.0);

  std::stringstream buf2;
  write_family(buf2, fam);
  CHECK_THROWS_AS(read_unitary_family(buf2), error); // payload mismatch

  std::stringstream junk("not json\n");
  CHECK_THROWS_AS(read_projection_family(junk), error);

  // truncated blob
  std::stringstream buf3;
  write_family(buf3, fam);
  std::string bytes = buf3.str();
  std::stringstream cut(bytes.substr(0, bytes.size() - 8));
  CHECK_THROWS_AS(read_projection_family(cut), error);
}

TEST_CASE("CSV export has a row per entry") {
  TorusGrid g(1, 8);
  std::vector<CMatrix> samples(g.size(), CMatrix::identity(2));
  std::stringstream out;
  write_csv(out, g, samples);
  std::string text = out.str();
  size_t lines = static_cast<size_t>(std::count(text.begin(), text.end(), '\n'));
  CHECK(lines == 1 + g.size() * 4); // header + 8 points * 4 entries
  CHECK(text.rfind("flat,k1,i,j,re,im\n", 0) == 0);
}
