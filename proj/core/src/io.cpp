#include "blochtk/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>

#include <json.hpp>

namespace blochtk {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "family blob I/O assumes a little-endian host");

void write_blob(std::ostream& out, const std::vector<CMatrix>& samples) {
  for (const CMatrix& s : samples) {
    out.write(reinterpret_cast<const char*>(s.a.data()),
              static_cast<std::streamsize>(s.a.size() * sizeof(cplx)));
  }
  if (!out) throw error(errc::io, "write_family: stream write failed");
}

std::string sym_tag(const std::optional<SymmetryKind>& s) {
  if (!s) return "none";
  return s->kind == sym_kind::bosonic ? "bosonic" : "fermionic";
}

void write_header(std::ostream& out, int dim, int n_pts, int m, int amb,
                  const std::string& sym, const std::string& payload) {
  json h;
  h["dim"] = dim;
  h["N"] = n_pts;
  h["m"] = m;
  h["n"] = amb;
  h["symmetry"] = sym;
  h["payload"] = payload;
  out << h.dump() << '\n';
}

json read_header(std::istream& in, const std::string& want_payload) {
  std::string line;
  if (!std::getline(in, line)) throw error(errc::io, "read_family: missing header line");
  json h;
  try {
    h = json::parse(line);
  } catch (const json::exception&) {
    throw error(errc::io, "read_family: header is not valid JSON");
  }
  for (const char* key : {"dim", "N", "m", "n", "symmetry", "payload"})
    if (!h.contains(key)) throw error(errc::io, "read_family: header missing a required key");
  if (h["payload"].get<std::string>() != want_payload)
    throw error(errc::io, "read_family: payload kind mismatch");
  return h;
}

std::optional<SymmetryKind> parse_sym(const std::string& tag, int m) {
  if (tag == "none") return std::nullopt;
  if (tag == "bosonic") return SymmetryKind::bosonic(m);
  if (tag == "fermionic") return SymmetryKind::fermionic(m);
  throw error(errc::io, "read_family: unknown symmetry tag");
}

std::vector<CMatrix> read_blob(std::istream& in, const TorusGrid& grid, int rows, int cols) {
  std::vector<CMatrix> samples(grid.size(), CMatrix(rows, cols));
  for (CMatrix& s : samples) {
    in.read(reinterpret_cast<char*>(s.a.data()),
            static_cast<std::streamsize>(s.a.size() * sizeof(cplx)));
    if (!in) throw error(errc::io, "read_family: blob truncated");
  }
  char extra;
  if (in.read(&extra, 1)) throw error(errc::io, "read_family: trailing bytes after blob");
  return samples;
}

template <typename Fam, typename Fn>
Fam from_path(const std::string& path, Fn&& reader) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(errc::io, "cannot open family file: " + path);
  return reader(in);
}

} // namespace

void write_family(std::ostream& out, const UnitaryFamily& fam) {
  write_header(out, fam.grid.dim, fam.grid.n, fam.m, fam.m, sym_tag(fam.symmetry), "unitary");
  write_blob(out, fam.samples);
}

void write_family(std::ostream& out, const ProjectionFamily& fam) {
  write_header(out, fam.grid.dim, fam.grid.n, fam.m, fam.amb,
               fam.symmetry.kind == sym_kind::bosonic ? "bosonic" : "fermionic", "projection");
  write_blob(out, fam.samples);
}

void write_family(std::ostream& out, const SelfAdjointFamily& fam) {
  write_header(out, fam.grid.dim, fam.grid.n, fam.m, fam.m, sym_tag(fam.symmetry), "selfadjoint");
  write_blob(out, fam.samples);
}

void write_family(std::ostream& out, const BlochFrame& frame) {
  write_header(out, frame.grid.dim, frame.grid.n, frame.m, frame.amb,
               frame.kind == sym_kind::bosonic ? "bosonic" : "fermionic", "frame");
  write_blob(out, frame.columns);
}

void write_family(const std::string& path, const UnitaryFamily& fam) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error(errc::io, "cannot open family file for writing: " + path);
  write_family(out, fam);
}

void write_family(const std::string& path, const ProjectionFamily& fam) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error(errc::io, "cannot open family file for writing: " + path);
  write_family(out, fam);
}

void write_family(const std::string& path, const SelfAdjointFamily& fam) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error(errc::io, "cannot open family file for writing: " + path);
  write_family(out, fam);
}

void write_family(const std::string& path, const BlochFrame& frame) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error(errc::io, "cannot open family file for writing: " + path);
  write_family(out, frame);
}

std::string peek_payload(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(errc::io, "cannot open family file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw error(errc::io, "peek_payload: missing header line");
  try {
    return json::parse(line).at("payload").get<std::string>();
  } catch (const json::exception&) {
    throw error(errc::io, "peek_payload: malformed header");
  }
}

UnitaryFamily read_unitary_family(std::istream& in) {
  json h = read_header(in, "unitary");
  UnitaryFamily fam;
  fam.grid = TorusGrid(h["dim"].get<int>(), h["N"].get<int>());
  fam.m = h["m"].get<int>();
  if (h["n"].get<int>() != fam.m)
    throw error(errc::io, "read_family: unitary payload requires n == m");
  fam.symmetry = parse_sym(h["symmetry"].get<std::string>(), fam.m);
  fam.samples = read_blob(in, fam.grid, fam.m, fam.m);
  return fam;
}

UnitaryFamily read_unitary_family(const std::string& path) {
  return from_path<UnitaryFamily>(path, [](std::istream& in) { return read_unitary_family(in); });
}

ProjectionFamily read_projection_family(std::istream& in) {
  json h = read_header(in, "projection");
  ProjectionFamily fam;
  fam.grid = TorusGrid(h["dim"].get<int>(), h["N"].get<int>());
  fam.m = h["m"].get<int>();
  fam.amb = h["n"].get<int>();
  auto sym = parse_sym(h["symmetry"].get<std::string>(), fam.amb);
  if (!sym) throw error(errc::io, "read_family: projection payload requires a symmetry");
  fam.symmetry = *sym;
  fam.samples = read_blob(in, fam.grid, fam.amb, fam.amb);
  return fam;
}

ProjectionFamily read_projection_family(const std::string& path) {
  return from_path<ProjectionFamily>(path,
                                     [](std::istream& in) { return read_projection_family(in); });
}

SelfAdjointFamily read_selfadjoint_family(std::istream& in) {
  json h = read_header(in, "selfadjoint");
  SelfAdjointFamily fam;
  fam.grid = TorusGrid(h["dim"].get<int>(), h["N"].get<int>());
  fam.m = h["m"].get<int>();
  if (h["n"].get<int>() != fam.m)
    throw error(errc::io, "read_family: selfadjoint payload requires n == m");
  fam.symmetry = parse_sym(h["symmetry"].get<std::string>(), fam.m);
  fam.samples = read_blob(in, fam.grid, fam.m, fam.m);
  return fam;
}

SelfAdjointFamily read_selfadjoint_family(const std::string& path) {
  return from_path<SelfAdjointFamily>(
      path, [](std::istream& in) { return read_selfadjoint_family(in); });
}

BlochFrame read_frame(std::istream& in) {
  json h = read_header(in, "frame");
  BlochFrame frame;
  frame.grid = TorusGrid(h["dim"].get<int>(), h["N"].get<int>());
  frame.m = h["m"].get<int>();
  frame.amb = h["n"].get<int>();
  auto sym = parse_sym(h["symmetry"].get<std::string>(), frame.amb);
  if (!sym) throw error(errc::io, "read_family: frame payload requires a symmetry");
  frame.kind = sym->kind;
  frame.columns = read_blob(in, frame.grid, frame.amb, frame.m);
  return frame;
}

BlochFrame read_frame(const std::string& path) {
  return from_path<BlochFrame>(path, [](std::istream& in) { return read_frame(in); });
}

void write_csv(std::ostream& out, const TorusGrid& grid, const std::vector<CMatrix>& samples) {
  out << "flat";
  for (int a = 0; a < grid.dim; ++a) out << ",k" << (a + 1);
  out << ",i,j,re,im\n";
  char buf[64];
  for (size_t f = 0; f < samples.size(); ++f) {
    const CMatrix& s = samples[f];
    for (int i = 0; i < s.rows; ++i)
      for (int j = 0; j < s.cols; ++j) {
        out << f;
        for (int a = 0; a < grid.dim; ++a) {
          std::snprintf(buf, sizeof buf, ",%.17g", grid.coordinate(f, a));
          out << buf;
        }
        std::snprintf(buf, sizeof buf, ",%d,%d,%.17g,%.17g", i, j, s(i, j).real(), s(i, j).imag());
        out << buf << '\n';
      }
  }
  if (!out) throw error(errc::io, "write_csv: stream write failed");
}

void write_csv(const std::string& path, const TorusGrid& grid, const std::vector<CMatrix>& samples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw error(errc::io, "cannot open CSV file for writing: " + path);
  write_csv(out, grid, samples);
}

} // namespace blochtk
