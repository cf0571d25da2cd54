#ifndef BLOCHTK_ERRORS_HPP
#define BLOCHTK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace blochtk {

// Every failure the library can report, tagged so callers (and the CLI exit
// codes) can tell a mathematical obstruction from a numerical shortfall.
enum class errc {
  shape,            // wrong dimensions / odd size / mismatched families
  symmetry,         // hermiticity, antisymmetry or TRS violated beyond tol
  unitarity,        // input not unitary / not a projection
  branch_cut,       // eigenvalue too close to the requested cut
  refinement,       // grid too coarse for the requested certificate
  obstruction,      // nonzero Z2 index in symmetric mode
  search_exhausted, // certified random search ran out of retries
  invalid_input,    // catch-all contract violation
  io,               // file format problems
};

class error : public std::runtime_error {
public:
  error(errc kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  errc kind() const { return kind_; }

private:
  errc kind_;
};

inline const char* errc_name(errc k) {
  switch (k) {
    case errc::shape: return "shape";
    case errc::symmetry: return "symmetry";
    case errc::unitarity: return "unitarity";
    case errc::branch_cut: return "branch-cut";
    case errc::refinement: return "refinement-needed";
    case errc::obstruction: return "obstructed";
    case errc::search_exhausted: return "search-exhausted";
    case errc::invalid_input: return "invalid-input";
    case errc::io: return "io";
  }
  return "unknown";
}

} // namespace blochtk

#endif
