#include <doctest.h>

#include <cmath>

#include "blochtk/invariants.hpp"
#include "blochtk/zoo.hpp"

using namespace blochtk;

namespace {
constexpr double kTau = 6.283185307179586476925286766559;

ModelSpec spec_of(const std::string& name, int dim, int n, int m, sym_kind kind,
                  std::uint64_t seed = 0, int w = 0) {
  ModelSpec s;
  s.name = name;
  s.dim = dim;
  s.n_pts = n;
  s.m = m;
  s.kind = kind;
  s.seed = seed;
  s.winding = w;
  return s;
}

// independent Chern-number oracle for the x-block of the stacked family:
// winding of the discrete Berry phase of the rank-1 projector column
int chern_oracle(const ProjectionFamily& fam) {
  TorusGrid plane(2, fam.grid.n);
  int n = fam.grid.n;
  auto column = [&](int i1, int i2) {
    size_t f = fam.grid.flatten({i1, i2, 0});
    const CMatrix& p = fam.samples[f];
    // x legs are rows/cols 0 and 2; pick the larger column of the 2x2 block
    cplx q00 = p(0, 0), q10 = p(2, 0), q01 = p(0, 2), q11 = p(2, 2);
    cplx a, b;
    if (std::abs(q00) >= std::abs(q11)) {
      a = q00;
      b = q10;
    } else {
      a = q01;
      b = q11;
    }
    double nn = std::sqrt(std::norm(a) + std::norm(b));
    return std::pair<cplx, cplx>(a / nn, b / nn);
  };
  auto berry = [&](int i2) {
    cplx prod = 1.0;
    for (int j = 0; j < n; ++j) {
      auto u = column(j, i2);
      auto v = column((j + 1) % n, i2);
      prod *= std::conj(v.first) * u.first + std::conj(v.second) * u.second;
    }
    return -std::arg(prod);
  };
  double total = 0.0;
  double prev = berry(0);
  for (int i2 = 1; i2 <= n; ++i2) {
    double cur = berry(i2 % n);
    double d = cur - prev;
    while (d > 3.141592653589793) d -= kTau;
    while (d < -3.141592653589793) d += kTau;
    total += d;
    prev = cur;
  }
  return static_cast<int>(std::lround(total / kTau));
}
} // namespace

TEST_CASE("catalog: identity and diag-winding indices") {
  UnitaryFamily id = make_matching(spec_of("identity", 1, 64, 2, sym_kind::fermionic));
  CHECK(validate_matching(id).pass);
  CHECK(gp_index(id).indices.at("line") == 0);

  UnitaryFamily w1 = make_matching(spec_of("diag-winding", 1, 64, 2, sym_kind::fermionic, 0, 1));
  CHECK(validate_matching(w1).pass);
  CHECK(gp_index(w1).indices.at("line") == 1);

  UnitaryFamily w2 = make_matching(spec_of("diag-winding", 1, 64, 2, sym_kind::fermionic, 0, 2));
  CHECK(gp_index(w2).indices.at("line") == 0);

  CHECK_THROWS_AS(make_matching(spec_of("diag-winding", 1, 64, 2, sym_kind::bosonic)), error);
  CHECK_THROWS_AS(make_matching(spec_of("no-such-family", 1, 64, 2, sym_kind::bosonic)), error);
}

TEST_CASE("catalog: factorized families carry the winding parity") {
  for (int m : {2, 4}) {
    for (int w : {0, 1}) {
      UnitaryFamily fam =
          make_matching(spec_of("factorized", 1, 64, m, sym_kind::fermionic, 7 + w, w));
      CHECK(validate_matching(fam).pass);
      CHECK(trs_residual(fam) < 1e-12);
      CHECK(gp_index(fam).indices.at("line") == w);
    }
  }
  // bosonic variant validates too
  UnitaryFamily bos = make_matching(spec_of("factorized", 1, 64, 3, sym_kind::bosonic, 3, 1));
  CHECK(validate_matching(bos).pass);
}

TEST_CASE("catalog: 2D factorized families are four-index consistent and paired") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    UnitaryFamily fam = make_matching(spec_of("factorized", 2, 64, 2, sym_kind::fermionic, seed, 1));
    CHECK(validate_matching(fam).pass);
    Z2Report rep = indices_2d(fam);
    CHECK(rep.consistent);
    CHECK(rep.indices.at("k1=0") == rep.indices.at("k1=1/2"));
    CHECK(rep.indices.at("k2=0") == rep.indices.at("k2=1/2"));
  }
}

TEST_CASE("catalog: su2-random respects parity and prescribed obstruction") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    UnitaryFamily bos = make_matching(spec_of("su2-random", 1, 64, 2, sym_kind::bosonic, seed));
    CHECK(validate_matching(bos).pass);
    CHECK(trs_residual(bos) < 1e-14);

    UnitaryFamily triv =
        make_matching(spec_of("su2-random", 1, 64, 2, sym_kind::fermionic, seed, 0));
    CHECK(validate_matching(triv).pass);
    CHECK(gp_index(triv).indices.at("line") == 0);

    UnitaryFamily obs =
        make_matching(spec_of("su2-random", 1, 64, 2, sym_kind::fermionic, seed, 1));
    CHECK(validate_matching(obs).pass);
    CHECK(gp_index(obs).indices.at("line") == 1);
  }
}

TEST_CASE("catalog: 2D su2-random trivial family has all-zero indices") {
  UnitaryFamily fam = make_matching(spec_of("su2-random", 2, 32, 2, sym_kind::fermionic, 11, 0));
  CHECK(validate_matching(fam).pass);
  Z2Report rep = indices_2d(fam);
  for (const auto& [name, idx] : rep.indices) CHECK(idx == 0);
  CHECK(rep.consistent);
}

TEST_CASE("catalog: product inherits the head index") {
  UnitaryFamily fam = make_matching(spec_of("product", 1, 64, 4, sym_kind::fermionic, 5, 1));
  CHECK(validate_matching(fam).pass);
  CHECK(gp_index(fam).indices.at("line") == 1);
  UnitaryFamily even = make_matching(spec_of("product", 1, 64, 4, sym_kind::fermionic, 5, 2));
  CHECK(gp_index(even).indices.at("line") == 0);
}

TEST_CASE("catalog: constant and gauged projection families validate") {
  ProjectionFamily c = make_projections(spec_of("constant", 1, 64, 2, sym_kind::fermionic));
  CHECK(validate_projections(c).pass);

  for (int dim : {1, 2, 3}) {
    ModelSpec s = spec_of("gauged", dim, dim == 3 ? 16 : 64, 2, sym_kind::fermionic, 42);
    s.amb = 4;
    ProjectionFamily g = make_projections(s);
    ValidationReport rep = validate_projections(g);
    CHECK(rep.pass);
    CHECK(rep.trs_residual < 1e-12);
  }
  ModelSpec b = spec_of("gauged", 2, 32, 2, sym_kind::bosonic, 9);
  b.amb = 4;
  CHECK(validate_projections(make_projections(b)).pass);

  ModelSpec bad = spec_of("constant", 1, 64, 3, sym_kind::fermionic);
  bad.amb = 4;
  CHECK_THROWS_AS(make_projections(bad), error);
}

TEST_CASE("catalog: stacked-2d family validates and has the prescribed Chern block") {
  for (int w : {0, 1, 2}) {
    ModelSpec s = spec_of("stacked-2d", 3, w == 2 ? 32 : 16, 2, sym_kind::fermionic, 0, w);
    ProjectionFamily fam = make_projections(s);
    ValidationReport rep = validate_projections(fam);
    CHECK(rep.pass);
    CHECK(rep.trs_residual < 1e-13);
    CHECK(std::abs(chern_oracle(fam)) == w);
    // k3-independence
    size_t a = fam.grid.flatten({3, 5, 0});
    size_t b = fam.grid.flatten({3, 5, 7});
    CHECK(fro_norm(fam.samples[a] - fam.samples[b]) == 0.0);
  }
}
