#ifndef BLOCHTK_INVARIANTS_HPP
#define BLOCHTK_INVARIANTS_HPP

#include <map>
#include <string>

#include "blochtk/torus.hpp"

namespace blochtk {

// Z2 invariant certificate. For a 1D family `indices` holds the single entry
// "line"; for a 2D family the four restriction entries "k1=0", "k1=1/2",
// "k2=0", "k2=1/2". p_values are the +-1 ratios sqrt(det)/Pf at the
// high-symmetry points, keyed "<line>:<point>".
struct Z2Report {
  std::map<std::string, int> indices;
  std::map<std::string, cplx> p_values;
  std::map<std::string, double> det_phases; // unwrapped det phase at the endpoints, audit data
  bool consistent = true;
};

// Z2 index of a 1D fermionic matching family:
//   (-1)^I = p(0) p(1/2),  p(k#) = sqrt(det alpha(k#)) / Pf(eps alpha(k#)),
// with the square root continued along k in [0, 1/2].
Z2Report gp_index(const UnitaryFamily& alpha);

// Winding number of det(gamma) over one period. Throws refinement if the
// unwrapped total is farther than 0.1 * 2pi from an integer multiple.
int winding_det(const UnitaryFamily& gamma);

// Builds alpha(k) = eps^-1 gamma(-k)^t eps gamma(k) (exactly TRS on the grid),
// returns deg(det gamma) mod 2, and cross-checks it against gp_index(alpha).
int gp_index_via_factorization(const UnitaryFamily& gamma);

// The same factorization used by gp_index_via_factorization, exposed so
// callers can inspect the derived matching family.
UnitaryFamily matching_from_factor(const UnitaryFamily& gamma);

// Four restriction indices of a 2D fermionic matching family, plus the
// dependency check sum == 0 mod 2.
Z2Report indices_2d(const UnitaryFamily& alpha);

// Equivariant-homotopy classification: bosonic families are always
// equivalent; fermionic families are equivalent iff their Z2 data agree.
bool classify(const UnitaryFamily& a0, const UnitaryFamily& a1);

// Thrown when a symmetric construction is blocked by a nonzero Z2 index; the
// certificate travels with the exception.
class obstruction_error : public error {
public:
  obstruction_error(Z2Report rep, const std::string& what)
      : error(errc::obstruction, what), report(std::move(rep)) {}
  Z2Report report;
};

// Every eigenphase cluster of `a` has even multiplicity (Kramers degeneracy).
bool kramers_check(const CMatrix& a, double cluster_tol = 1e-6);

} // namespace blochtk

#endif
