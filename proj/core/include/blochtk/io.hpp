#ifndef BLOCHTK_IO_HPP
#define BLOCHTK_IO_HPP

#include <iosfwd>
#include <string>

#include "blochtk/torus.hpp"

namespace blochtk {

// On-disk family format: a single newline-terminated JSON header line
//   {"dim":..,"N":..,"m":..,"n":..,"symmetry":"none"|"bosonic"|"fermionic",
//    "payload":"unitary"|"projection"}
// followed by a raw little-endian float64 blob of (re, im) pairs, row-major
// within each matrix, grid samples in odometer order (last axis fastest).
// For projections "n" is the ambient dimension; for unitaries n == m.

// Additional payload kinds reuse the same container: "selfadjoint" (m == n)
// for log steps, "frame" (n = ambient, m = rank) for Bloch frames; a frame
// never has symmetry "none".

void write_family(std::ostream& out, const UnitaryFamily& fam);
void write_family(std::ostream& out, const ProjectionFamily& fam);
void write_family(std::ostream& out, const SelfAdjointFamily& fam);
void write_family(std::ostream& out, const BlochFrame& frame);
void write_family(const std::string& path, const UnitaryFamily& fam);
void write_family(const std::string& path, const ProjectionFamily& fam);
void write_family(const std::string& path, const SelfAdjointFamily& fam);
void write_family(const std::string& path, const BlochFrame& frame);

// "payload" tag from the header, without consuming the stream twice.
std::string peek_payload(const std::string& path);

UnitaryFamily read_unitary_family(std::istream& in);
UnitaryFamily read_unitary_family(const std::string& path);
ProjectionFamily read_projection_family(std::istream& in);
ProjectionFamily read_projection_family(const std::string& path);
SelfAdjointFamily read_selfadjoint_family(std::istream& in);
SelfAdjointFamily read_selfadjoint_family(const std::string& path);
BlochFrame read_frame(std::istream& in);
BlochFrame read_frame(const std::string& path);

// Flat CSV: one row per (grid point, i, j) with coordinates and re/im parts.
void write_csv(std::ostream& out, const TorusGrid& grid, const std::vector<CMatrix>& samples);
void write_csv(const std::string& path, const TorusGrid& grid, const std::vector<CMatrix>& samples);

} // namespace blochtk

#endif
