// blochtk command-line tool: validate families, compute Z2 invariants, build
// multi-step logarithms, homotopies and Bloch frames, and emit the model zoo.
//
// Exit codes: 0 success, 1 error, 2 obstructed (a legitimate mathematical
// outcome), 3 refinement-needed. Every failure prints a JSON object with a
// machine-readable "reason" field.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "blochtk/errors.hpp"
#include "blochtk/frame.hpp"
#include "blochtk/invariants.hpp"
#include "blochtk/io.hpp"
#include "blochtk/logsmith.hpp"
#include "blochtk/torus.hpp"
#include "blochtk/zoo.hpp"

namespace btk = blochtk;
using nlohmann::json;

namespace {

struct RunConfig {
  std::string input;
  std::string output = "out"; // prefix for report/artifact files
  std::string config_path;
  int grid = 64;
  double tol = 1e-8;
  std::string mode = "symmetric"; // or "periodic-only"
  std::uint64_t seed = 0;
  double budget = 0.05; // generic-form supremum distance s
  int slices = 16;

  void check() const {
    if (tol <= 0) throw btk::error(btk::errc::invalid_input, "tolerance must be positive");
    if (grid < 2 || grid % 2 != 0)
      throw btk::error(btk::errc::invalid_input, "grid size must be even and >= 2");
    if (mode != "symmetric" && mode != "periodic-only")
      throw btk::error(btk::errc::invalid_input, "mode must be 'symmetric' or 'periodic-only'");
    if (budget < 0 || budget >= 1)
      throw btk::error(btk::errc::invalid_input, "budget s must lie in [0, 1)");
    if (slices < 1) throw btk::error(btk::errc::invalid_input, "slice count must be positive");
  }
  bool symmetric() const { return mode == "symmetric"; }
};

// Config file (JSON object) fills in any option the command line left at its
// default; explicit flags always win.
void apply_config_file(const RunConfig& cfg, CLI::App* sub) {
  if (cfg.config_path.empty()) return;
  std::ifstream in(cfg.config_path);
  if (!in) throw btk::error(btk::errc::io, "cannot open config file: " + cfg.config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw btk::error(btk::errc::io, std::string("config file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw btk::error(btk::errc::io, "config file must hold a JSON object");
  for (auto& [key, value] : j.items()) {
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt) throw btk::error(btk::errc::io, "config file: unknown option '" + key + "'");
    if (opt->count() > 0) continue; // explicit flag wins
    opt->clear();
    opt->add_result(value.is_string() ? value.get<std::string>() : value.dump());
    opt->run_callback();
  }
}

json cplx_json(btk::cplx z) { return json::array({z.real(), z.imag()}); }

json report_json(const btk::Z2Report& rep) {
  json j;
  j["indices"] = rep.indices;
  json pv = json::object();
  for (const auto& [key, value] : rep.p_values) pv[key] = cplx_json(value);
  j["p_values"] = pv;
  j["det_phases"] = rep.det_phases;
  j["consistent"] = rep.consistent;
  return j;
}

json report_json(const btk::ValidationReport& rep) {
  json j;
  j["pass"] = rep.pass;
  j["unitarity_residual"] = rep.unitarity_residual;
  j["hermiticity_residual"] = rep.hermiticity_residual;
  j["idempotency_residual"] = rep.idempotency_residual;
  j["rank_deviation"] = rep.rank_deviation;
  j["trs_residual"] = rep.trs_residual;
  j["step_norm"] = rep.step_norm;
  j["worst_index"] = rep.worst_index;
  if (!rep.note.empty()) j["note"] = rep.note;
  return j;
}

// Reports go to stdout and to <output>.json so runs can be diffed.
void emit(const RunConfig& cfg, const json& report) {
  std::string text = report.dump(2);
  std::cout << text << '\n';
  std::ofstream out(cfg.output + ".json", std::ios::trunc);
  if (!out) throw btk::error(btk::errc::io, "cannot write report: " + cfg.output + ".json");
  out << text << '\n';
}

double max_op_norm_diff(const btk::UnitaryFamily& a, const btk::UnitaryFamily& b) {
  double worst = 0.0;
  for (size_t f = 0; f < a.samples.size(); ++f)
    worst = std::max(worst, btk::op_norm(a.samples[f] - b.samples[f]));
  return worst;
}

// --- validate -----------------------------------------------------------------

int cmd_validate(const RunConfig& cfg) {
  btk::ValidationConfig vc;
  vc.unitarity_tol = vc.projection_tol = vc.trs_tol = cfg.tol;
  std::string payload = btk::peek_payload(cfg.input);
  json report;
  report["command"] = "validate";
  report["input"] = cfg.input;
  report["payload"] = payload;
  bool pass = false;
  if (payload == "unitary") {
    btk::UnitaryFamily fam = btk::read_unitary_family(cfg.input);
    btk::ValidationReport rep = btk::validate_matching(fam, vc);
    report["checks"] = report_json(rep);
    pass = rep.pass;
  } else if (payload == "projection") {
    btk::ProjectionFamily fam = btk::read_projection_family(cfg.input);
    btk::ValidationReport rep = btk::validate_projections(fam, vc);
    report["checks"] = report_json(rep);
    pass = rep.pass;
  } else if (payload == "selfadjoint") {
    btk::SelfAdjointFamily fam = btk::read_selfadjoint_family(cfg.input);
    double herm = 0.0;
    for (const btk::CMatrix& s : fam.samples) herm = std::max(herm, btk::op_norm(s - s.adjoint()));
    double trs = fam.symmetry ? btk::trs_residual(fam) : 0.0;
    report["checks"] = {{"hermiticity_residual", herm},
                        {"trs_residual", trs},
                        {"step_norm", btk::step_norm(fam.grid, fam.samples)}};
    pass = herm <= cfg.tol && trs <= cfg.tol;
    report["checks"]["pass"] = pass;
  } else if (payload == "frame") {
    btk::BlochFrame fr = btk::read_frame(cfg.input);
    btk::SymmetryKind amb = fr.ambient_symmetry();
    btk::CMatrix eps_m = fr.frame_symmetry().epsilon();
    double ortho = 0.0, trs = 0.0;
    btk::CMatrix id = btk::CMatrix::identity(fr.m);
    for (size_t f = 0; f < fr.columns.size(); ++f) {
      const btk::CMatrix& xi = fr.columns[f];
      ortho = std::max(ortho, btk::op_norm(xi.adjoint() * xi - id));
      trs = std::max(trs, btk::op_norm(amb.theta(xi) * eps_m - fr.columns[fr.grid.reflect(f)]));
    }
    report["checks"] = {{"orthonormality_residual", ortho},
                        {"trs_residual", trs},
                        {"step_norm", btk::step_norm(fr.grid, fr.columns)}};
    pass = ortho <= cfg.tol && trs <= cfg.tol;
    report["checks"]["pass"] = pass;
  } else {
    throw btk::error(btk::errc::io, "unknown payload kind: " + payload);
  }
  report["status"] = pass ? "ok" : "fail";
  if (!pass) report["reason"] = "validation-failed";
  emit(cfg, report);
  return pass ? 0 : 1;
}

// --- invariants ---------------------------------------------------------------

// Plot data: per grid point the det phase (unwrapped along the last axis
// within each row) and the principal eigenphases.
void write_tracks_csv(const std::string& path, const btk::UnitaryFamily& fam) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw btk::error(btk::errc::io, "cannot write CSV: " + path);
  out << "flat";
  for (int a = 0; a < fam.grid.dim; ++a) out << ",k" << (a + 1);
  out << ",det_phase";
  for (int j = 0; j < fam.m; ++j) out << ",eigenphase" << (j + 1);
  out << '\n';
  char buf[64];
  double acc = 0.0, prev = 0.0;
  for (size_t f = 0; f < fam.samples.size(); ++f) {
    double arg = std::arg(btk::det(fam.samples[f]));
    if (f % static_cast<size_t>(fam.grid.n) == 0)
      acc = arg; // new track: restart the unwrap
    else
      acc += std::remainder(arg - prev, 2 * std::numbers::pi);
    prev = arg;
    btk::SpectralDecomp d = btk::unitary_eig(fam.samples[f], 1e-9);
    out << f;
    for (int a = 0; a < fam.grid.dim; ++a) {
      std::snprintf(buf, sizeof buf, ",%.17g", fam.grid.coordinate(f, a));
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g", acc);
    out << buf;
    for (size_t c = 0; c < d.values.size(); ++c)
      for (int r = 0; r < d.multiplicities[c]; ++r) {
        std::snprintf(buf, sizeof buf, ",%.17g", d.values[c]);
        out << buf;
      }
    out << '\n';
  }
  if (!out) throw btk::error(btk::errc::io, "write failed: " + path);
}

int cmd_invariants(const RunConfig& cfg) {
  btk::UnitaryFamily fam = btk::read_unitary_family(cfg.input);
  json report;
  report["command"] = "invariants";
  report["input"] = cfg.input;
  report["status"] = "ok";
  if (!fam.symmetry) {
    throw btk::error(btk::errc::invalid_input,
                     "invariants require symmetry metadata on the input family");
  } else if (fam.symmetry->kind == btk::sym_kind::bosonic) {
    btk::Z2Report rep; // all indices vanish: bosonic matching families deform to the identity
    report["z2"] = report_json(rep);
    report["note"] = "bosonic matching families are always null-homotopic";
  } else if (fam.grid.dim == 1) {
    report["z2"] = report_json(btk::gp_index(fam));
  } else if (fam.grid.dim == 2) {
    report["z2"] = report_json(btk::indices_2d(fam));
  } else {
    throw btk::error(btk::errc::invalid_input, "invariants are defined for 1D and 2D families");
  }
  write_tracks_csv(cfg.output + "_tracks.csv", fam);
  report["tracks_csv"] = cfg.output + "_tracks.csv";
  emit(cfg, report);
  return 0;
}

// --- log ----------------------------------------------------------------------

json log_manifest(const RunConfig& cfg, const btk::MultiStepLog& log,
                  const btk::UnitaryFamily& alpha) {
  json report;
  report["command"] = "log";
  report["input"] = cfg.input;
  report["status"] = "ok";
  report["dim"] = log.grid.dim;
  report["N"] = log.grid.n;
  report["m"] = log.m;
  report["symmetric"] = log.symmetry.has_value();
  json steps = json::array();
  for (size_t i = 0; i < log.steps.size(); ++i) {
    std::string path = cfg.output + "_step" + std::to_string(i + 1) + ".fam";
    btk::write_family(path, log.steps[i]);
    steps.push_back(path);
  }
  report["steps"] = steps;
  json residuals;
  residuals["reconstruction"] = log.reconstruction_residual;
  residuals["step_trs"] = log.trs_residual;
  residuals["beta_gluing"] = btk::beta_gluing_residual(log);
  residuals["beta_twist"] = btk::beta_twist_residual(log, alpha);
  if (log.symmetry) residuals["beta_symmetry"] = btk::beta_symmetry_residual(log);
  report["residuals"] = residuals;
  return report;
}

int cmd_log(const RunConfig& cfg) {
  btk::UnitaryFamily alpha = btk::read_unitary_family(cfg.input);
  btk::MultiStepLog log = btk::two_step_log(alpha, cfg.budget, cfg.symmetric(), cfg.seed);
  emit(cfg, log_manifest(cfg, log, alpha));
  return 0;
}

// --- frame --------------------------------------------------------------------

void write_decay_csv(const std::string& path, const btk::BlochFrame& frame,
                     const std::vector<double>& widths) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw btk::error(btk::errc::io, "cannot write CSV: " + path);
  out << "width,shell,max_coefficient,exponent\n";
  char buf[96];
  for (double w : widths) {
    btk::DecayReport rep = btk::fourier_decay(frame, w);
    for (size_t s = 0; s < rep.shell_max.size(); ++s) {
      std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%.17g\n", w, s, rep.shell_max[s],
                    rep.exponent);
      out << buf;
    }
  }
  if (!out) throw btk::error(btk::errc::io, "write failed: " + path);
}

int cmd_frame(const RunConfig& cfg) {
  btk::ProjectionFamily p = btk::read_projection_family(cfg.input);
  btk::FrameBuildConfig fc;
  fc.s = cfg.budget;
  fc.seed = cfg.seed;
  fc.mode = cfg.symmetric() ? btk::frame_mode::symmetric : btk::frame_mode::periodic_only;
  btk::BlochFrame frame = btk::build_frame(p, fc);

  std::string frame_path = cfg.output + "_frame.fam";
  btk::write_family(frame_path, frame);

  btk::ValidationConfig vc;
  vc.unitarity_tol = vc.projection_tol = vc.trs_tol = cfg.tol;
  // A periodic-only frame may absorb an O(1) symmetry-breaking twist into one
  // grid step, so the continuity proxy does not gate its pass/fail.
  if (!cfg.symmetric()) vc.step_tol = 4.0;
  btk::ValidationReport rep = btk::check_frame(frame, p, vc, cfg.symmetric());

  std::string decay_path = cfg.output + "_decay.csv";
  write_decay_csv(decay_path, frame, {0.0, 0.05, 0.1});

  json report;
  report["command"] = "frame";
  report["input"] = cfg.input;
  report["mode"] = cfg.mode;
  report["frame_file"] = frame_path;
  report["decay_csv"] = decay_path;
  report["checks"] = report_json(rep);
  report["status"] = rep.pass ? "ok" : "fail";
  if (!rep.pass) report["reason"] = "validation-failed";
  emit(cfg, report);
  return rep.pass ? 0 : 1;
}

// --- homotopy -----------------------------------------------------------------

int cmd_homotopy(const RunConfig& cfg) {
  btk::UnitaryFamily alpha = btk::read_unitary_family(cfg.input);
  btk::MultiStepLog log = btk::two_step_log(alpha, cfg.budget, cfg.symmetric(), cfg.seed);
  std::vector<btk::UnitaryFamily> path = btk::homotopy_from_beta(log, cfg.slices);

  json slices = json::array();
  int slices_passing = 0;
  btk::ValidationConfig vc;
  vc.unitarity_tol = vc.trs_tol = cfg.tol;
  vc.step_tol = 2.0; // continuity in t is checked by the endpoints, not per slice
  for (size_t j = 0; j < path.size(); ++j) {
    std::string slice_path = cfg.output + "_t" + std::to_string(j) + ".fam";
    btk::write_family(slice_path, path[j]);
    slices.push_back(slice_path);
    if (btk::validate_matching(path[j], vc).pass) ++slices_passing;
  }

  btk::UnitaryFamily id = alpha;
  for (btk::CMatrix& s : id.samples) s = btk::CMatrix::identity(alpha.m);
  double start_res = max_op_norm_diff(path.front(), id);
  double end_res = max_op_norm_diff(path.back(), alpha);

  json report;
  report["command"] = "homotopy";
  report["input"] = cfg.input;
  report["slices"] = slices;
  report["slices_passing"] = slices_passing;
  report["residuals"] = {{"start_vs_identity", start_res}, {"end_vs_input", end_res}};
  bool pass = slices_passing == static_cast<int>(path.size()) && start_res <= cfg.tol &&
              end_res <= cfg.tol;
  report["status"] = pass ? "ok" : "fail";
  if (!pass) report["reason"] = "validation-failed";
  emit(cfg, report);
  return pass ? 0 : 1;
}

// --- zoo ------------------------------------------------------------------------

int cmd_zoo(const RunConfig& cfg, const btk::ModelSpec& spec, bool list_only) {
  if (list_only) {
    json report;
    report["command"] = "zoo";
    report["status"] = "ok";
    report["matching"] = btk::matching_catalog();
    report["projections"] = btk::projection_catalog();
    emit(cfg, report);
    return 0;
  }
  std::vector<std::string> match = btk::matching_catalog();
  std::vector<std::string> proj = btk::projection_catalog();
  std::string path = cfg.output + ".fam";
  json report;
  report["command"] = "zoo";
  report["model"] = spec.name;
  report["status"] = "ok";
  report["family_file"] = path;
  if (std::find(match.begin(), match.end(), spec.name) != match.end()) {
    btk::write_family(path, btk::make_matching(spec));
    report["payload"] = "unitary";
  } else if (std::find(proj.begin(), proj.end(), spec.name) != proj.end()) {
    btk::write_family(path, btk::make_projections(spec));
    report["payload"] = "projection";
  } else {
    throw btk::error(btk::errc::invalid_input, "unknown zoo model: " + spec.name);
  }
  emit(cfg, report);
  return 0;
}

// --- dispatch -------------------------------------------------------------------

int fail_with(const btk::error& e) {
  json report;
  report["reason"] = btk::errc_name(e.kind());
  report["message"] = e.what();
  if (const auto* obs = dynamic_cast<const btk::obstruction_error*>(&e)) {
    report["status"] = "obstructed";
    report["z2"] = report_json(obs->report);
  } else if (e.kind() == btk::errc::refinement) {
    report["status"] = "refinement-needed";
  } else {
    report["status"] = "error";
  }
  std::cout << report.dump(2) << '\n';
  switch (e.kind()) {
    case btk::errc::obstruction: return 2;
    case btk::errc::refinement: return 3;
    default: return 1;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bloch frame toolkit: Z2 invariants, multi-step logarithms, "
               "homotopies and symmetric Bloch frames for matching families"};
  app.require_subcommand(1);

  RunConfig cfg;
  btk::ModelSpec spec;
  bool zoo_list = false;
  std::string zoo_kind = "fermionic";

  auto add_common = [&](CLI::App* sub, bool needs_input) {
    if (needs_input) sub->add_option("input", cfg.input, "input family file")->required();
    sub->add_option("--config", cfg.config_path, "JSON config file (flags override)");
    sub->add_option("--output", cfg.output, "output path prefix");
    sub->add_option("--grid", cfg.grid, "grid points per axis (even)");
    sub->add_option("--tol", cfg.tol, "pass/fail tolerance");
    sub->add_option("--mode", cfg.mode, "symmetric | periodic-only");
    sub->add_option("--seed", cfg.seed, "seed for randomized searches");
    sub->add_option("--budget", cfg.budget, "generic-form supremum distance s");
    sub->add_option("--slices", cfg.slices, "homotopy slice count");
    return sub;
  };

  CLI::App* validate = add_common(app.add_subcommand("validate", "check a family file"), true);
  CLI::App* invariants =
      add_common(app.add_subcommand("invariants", "Z2 indices and spectral tracks"), true);
  CLI::App* logc =
      add_common(app.add_subcommand("log", "periodic multi-step logarithm"), true);
  CLI::App* frame =
      add_common(app.add_subcommand("frame", "build and check a Bloch frame"), true);
  CLI::App* homotopy =
      add_common(app.add_subcommand("homotopy", "deformation to the identity"), true);
  CLI::App* zoo = add_common(app.add_subcommand("zoo", "emit catalog families"), false);
  zoo->add_option("model", spec.name, "catalog model name");
  zoo->add_flag("--list", zoo_list, "list catalog names");
  zoo->add_option("--dim", spec.dim, "torus dimension");
  zoo->add_option("--rank", spec.m, "family rank");
  zoo->add_option("--ambient", spec.amb, "ambient dimension (projections)");
  zoo->add_option("--kind", zoo_kind, "bosonic | fermionic");
  zoo->add_option("--winding", spec.winding, "winding / obstruction parameter");
  zoo->add_option("--scale", spec.scale, "random-mode amplitude");

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* sub = app.get_subcommands().front();
    apply_config_file(cfg, sub);
    cfg.check();
    if (sub == validate) return cmd_validate(cfg);
    if (sub == invariants) return cmd_invariants(cfg);
    if (sub == logc) return cmd_log(cfg);
    if (sub == frame) return cmd_frame(cfg);
    if (sub == homotopy) return cmd_homotopy(cfg);
    if (sub == zoo) {
      if (!zoo_list && spec.name.empty())
        throw btk::error(btk::errc::invalid_input, "zoo: give a model name or --list");
      if (zoo_kind != "bosonic" && zoo_kind != "fermionic")
        throw btk::error(btk::errc::invalid_input, "kind must be 'bosonic' or 'fermionic'");
      spec.kind = zoo_kind == "bosonic" ? btk::sym_kind::bosonic : btk::sym_kind::fermionic;
      spec.n_pts = cfg.grid;
      spec.seed = cfg.seed;
      return cmd_zoo(cfg, spec, zoo_list);
    }
    return 1;
  } catch (const btk::error& e) {
    return fail_with(e);
  } catch (const std::exception& e) {
    json report;
    report["status"] = "error";
    report["reason"] = "internal";
    report["message"] = e.what();
    std::cout << report.dump(2) << '\n';
    return 1;
  }
}
