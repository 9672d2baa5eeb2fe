// Command-line front end. Exit statuses: 0 success, 2 precondition or usage,
// 3 numerical failure, 4 I/O. Errors print one line to stderr:
//   dpgap-error code=<CODE> kind=<kind> message=<text>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpgap/cutoff.hpp"
#include "dpgap/errors.hpp"
#include "dpgap/gap_fem.hpp"
#include "dpgap/geometry.hpp"
#include "dpgap/orlicz.hpp"
#include "dpgap/regime.hpp"

using namespace dpgap;
using nlohmann::json;

namespace {

Error io_error(const std::string& message) { return Error(ErrorKind::Io, "IO_ERROR", message); }

std::string fmt9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Empty path or "-" means stdout.
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw io_error("cannot write to stdout");
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw io_error("cannot open " + path + " for writing");
  f << text;
  f.close();
  if (!f) throw io_error("write to " + path + " failed");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// --config file.json -> argv. Keys become flags, arrays are comma-joined,
// true booleans become bare flags. Unknown keys surface as CLI11 extras.
std::vector<std::string> config_to_args(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot read config " + path);
  json cfg;
  try {
    cfg = json::parse(f);
  } catch (const json::exception& e) {
    throw precondition_error("CONFIG_ERROR", std::string("config is not valid JSON: ") + e.what());
  }
  if (!cfg.is_object() || !cfg.contains("command") || !cfg["command"].is_string()) {
    throw precondition_error("CONFIG_ERROR", "config must be an object with a string \"command\"");
  }
  auto scalar = [](const json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return fmt17(v.get<double>());
    throw precondition_error("CONFIG_ERROR", "unsupported config value " + v.dump());
  };
  std::vector<std::string> args{cfg["command"].get<std::string>()};
  for (const auto& [key, value] : cfg.items()) {
    if (key == "command") continue;
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + scalar(v);
      args.push_back(flag);
      args.push_back(joined);
    } else {
      args.push_back(flag);
      args.push_back(scalar(value));
    }
  }
  return args;
}

struct ClassifyArgs {
  double alpha = 0, beta = 0, p = 2;
  std::string out;
};

struct PhaseArgs {
  std::vector<double> grid{0.25, 0.5, 1.0, 1.25, 2.0, 3.0};
  std::vector<double> alphas, betas;
  double p = 2;
  std::string format = "csv", out;
};

struct GapArgs {
  double alpha = 0, beta = 0, grading = 2, dirichlet_scale = 10;
  std::vector<int> levels{32, 64, 128};
  std::string mode = "auto", out, nodes_csv, format = "json";
  bool override_guard = false;
  int max_iterations = 5000;
};

struct CutoffArgs {
  std::string kind;
  double eps = 0, alpha = 0, r2 = 0.5, delta = 0, p = 2, gamma = 1;
  std::string out, csv;
};

struct NormArgs {
  std::string field = "b2", phase = "double";
  double alpha = 2, beta = 2, p = 2;
  int resolution = 256;
  std::string out;
};

struct ConjugateArgs {
  double p = 2, gamma = 0;
  std::vector<double> s{10.0, 1e3, 1e6};
  std::string out;
};

struct FluxArgs {
  int nquad = 1024;
  std::string format = "table", out;
};

struct FieldsArgs {
  int resolution = 64;
  std::string out;
};

void run_classify(const ClassifyArgs& a) {
  emit(a.out, dump(classify_borderline(a.alpha, a.beta, a.p).to_json()));
}

void run_phase(const PhaseArgs& a) {
  const auto& alphas = a.alphas.empty() ? a.grid : a.alphas;
  const auto& betas = a.betas.empty() ? a.grid : a.betas;
  const auto cells = phase_diagram(alphas, betas, a.p);
  if (a.format == "json") {
    json arr = json::array();
    for (const auto& c : cells) arr.push_back({{"alpha", c.alpha}, {"beta", c.beta}, {"report", c.report.to_json()}});
    emit(a.out, dump(arr));
    return;
  }
  std::string csv = "alpha,beta,verdict,rule\n";
  for (const auto& c : cells) {
    csv += fmt9(c.alpha) + "," + fmt9(c.beta) + "," + to_string(c.report.verdict) + "," +
           to_string(c.report.rule) + "\n";
  }
  emit(a.out, csv);
}

void run_gap(const GapArgs& a) {
  GapOptions opts;
  opts.grading = a.grading;
  opts.mode = a.mode == "G" ? GapMode::G : a.mode == "dirichlet" ? GapMode::Dirichlet : GapMode::Auto;
  opts.override_guard = a.override_guard;
  opts.solver.dirichlet_scale = a.dirichlet_scale;
  opts.solver.max_iterations = a.max_iterations;
  std::string nodes = "n,x1,x2,u_conforming,u_enriched\n";
  if (!a.nodes_csv.empty()) {
    opts.on_level = [&](const MeshSpace& mesh, const MinimizeResult& conf, const MinimizeResult& enr) {
      for (int v = 0; v < mesh.num_vertices(); ++v) {
        const Point2& x = mesh.vertices[v];
        const double ue = enr.field.base.values[v] + enr.field.s * eval_enrichment(x);
        nodes += std::to_string(mesh.n) + "," + fmt9(x.x1) + "," + fmt9(x.x2) + "," +
                 fmt9(conf.field.base.values[v]) + "," + fmt9(ue) + "\n";
      }
    };
  }
  const GapReport report = gap_experiment(a.alpha, a.beta, a.levels, opts);
  if (a.format == "table") {
    std::string t = "n        h_min            E1               E2               s_opt            sep_value        iters converged\n";
    for (const auto& l : report.levels) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "%-8d %-16.9g %-16.9g %-16.9g %-16.9g %-16.9g %-5d %s\n", l.n, l.h_min,
                    l.E1, l.E2, l.s_opt, l.sep_value, l.iters, l.converged ? "yes" : "no");
      t += buf;
    }
    t += "mode " + report.mode + ", verdict " + to_string(report.verdict) + "\n";
    emit(a.out, t);
  } else {
    emit(a.out, dump(report.to_json()));
  }
  if (!a.nodes_csv.empty()) emit(a.nodes_csv, nodes);
}

void run_cutoff(const CutoffArgs& a) {
  RadialCutoff cut;
  json out;
  if (a.kind == "loglog") {
    cut = build_loglog_cutoff(a.eps);
    const double energy = cutoff_energy(cut, OrliczFunction::log_power(a.p, a.gamma));
    out = {{"kind", "loglog"},
           {"eps", a.eps},
           {"log_r1", cut.log_r1},
           {"log_r2", cut.log_r2},
           {"p", a.p},
           {"gamma", a.gamma},
           {"energy", energy},
           {"energy_times_log_inv_eps", energy * std::log(1.0 / a.eps)}};
  } else if (a.kind == "psi-harmonic") {
    const auto psi = OrliczFunction::log_power(a.p, a.alpha);
    const double log_r1 = find_inner_log_radius(psi, a.r2, a.delta);
    cut = build_psi_harmonic_cutoff_log(psi, log_r1, std::log(a.r2));
    out = {{"kind", "psi-harmonic"},
           {"p", a.p},
           {"alpha", a.alpha},
           {"delta", a.delta},
           {"log_r1", cut.log_r1},
           {"log_r2", cut.log_r2},
           {"certificate", energy_certificate(cut).to_json()}};
  } else {
    throw precondition_error("USAGE_ERROR", "--kind must be loglog or psi-harmonic");
  }
  if (!a.csv.empty()) {
    std::string csv = "r,eta,deta,log_r,log_deta\n";
    for (const auto& n : cut.profile) {
      csv += fmt9(std::exp(n.log_r)) + "," + fmt9(n.eta) + "," + fmt9(std::exp(n.log_deta)) + "," +
             fmt9(n.log_r) + "," + fmt9(n.log_deta) + "\n";
    }
    emit(a.csv, csv);
  }
  emit(a.out, dump(out));
}

void run_norm(const NormArgs& a) {
  const auto samples = sample_fields(a.resolution);
  const double w = 4.0 / (static_cast<double>(a.resolution) * a.resolution);
  std::vector<FieldSampleValue> values;
  values.reserve(samples.size());
  for (const auto& s : samples) {
    const double v = a.field == "u2" ? s.u2 : a.field == "grad-u2" ? s.grad_u2_norm : s.b2_norm;
    values.push_back({s.x, v, w});
  }
  const DoublePhase pair = DoublePhase::borderline(a.alpha, a.beta, a.p);
  double norm = 0.0;
  if (a.phase == "phi") norm = luxemburg_norm(values, pair.phi);
  else if (a.phase == "psi") norm = luxemburg_norm(values, pair.psi);
  else norm = luxemburg_norm(values, pair);
  emit(a.out, dump({{"field", a.field},
                    {"phase", a.phase},
                    {"alpha", a.alpha},
                    {"beta", a.beta},
                    {"p", a.p},
                    {"resolution", a.resolution},
                    {"norm", norm}}));
}

void run_conjugate(const ConjugateArgs& a) {
  const auto f = OrliczFunction::log_power(a.p, a.gamma);
  const auto cc = conjugate_log_power(a.p, a.gamma);
  const auto back = conjugate_log_power(cc);
  const auto fc = OrliczFunction::log_power(cc.p, cc.gamma);
  json rows = json::array();
  double lo = INFINITY, hi = 0.0;
  for (double s : a.s) {
    const double numeric = conjugate_numeric(f, s);
    const double closed = fc.eval(s);
    const double ratio = numeric / closed;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    rows.push_back({{"s", s}, {"numeric", numeric}, {"class_value", closed}, {"ratio", ratio}});
  }
  emit(a.out, dump({{"p", a.p},
                    {"gamma", a.gamma},
                    {"conjugate_p", cc.p},
                    {"conjugate_gamma", cc.gamma},
                    {"round_trip_exact", back == LogPowerParams{a.p, a.gamma}},
                    {"rows", rows},
                    {"bracket_C", std::max(hi, 1.0 / lo)}}));
}

void run_flux(const FluxArgs& a) {
  const BoundaryFlux f = boundary_flux(a.nquad);
  if (a.format == "json") {
    emit(a.out, dump({{"nquad", a.nquad}, {"total", f.total}, {"sides", f.sides}}));
    return;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.8f\n", f.total);
  emit(a.out, buf);
}

void run_fields(const FieldsArgs& a) {
  std::string csv = "x1,x2,a,u2,grad_u2,b2\n";
  for (const auto& s : sample_fields(a.resolution)) {
    csv += fmt9(s.x.x1) + "," + fmt9(s.x.x2) + "," + std::to_string(s.a) + "," + fmt9(s.u2) + "," +
           fmt9(s.grad_u2_norm) + "," + fmt9(s.b2_norm) + "\n";
  }
  emit(a.out, csv);
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

int report_error(const std::string& code, const char* kind, const std::string& message, int status) {
  std::cerr << "dpgap-error code=" << code << " kind=" << kind << " message=" << one_line(message) << "\n";
  return status;
}

int run(int argc, char** argv) {
  CLI::App app{"dpgap: double-phase gap experiments"};
  app.require_subcommand(0, 1);
  std::string config;
  app.add_option("--config", config, "JSON config mirroring the flags of one command");

  ClassifyArgs ca;
  auto* classify = app.add_subcommand("classify", "Gap verdict for phi = t^p log^-beta, psi = t^p log^alpha");
  classify->add_option("--alpha", ca.alpha)->required();
  classify->add_option("--beta", ca.beta)->required();
  classify->add_option("--p", ca.p)->capture_default_str();
  classify->add_option("--out", ca.out);

  PhaseArgs pa;
  auto* phase = app.add_subcommand("phase-diagram", "Verdicts over an (alpha, beta) grid");
  phase->add_option("--grid", pa.grid)->delimiter(',')->capture_default_str();
  phase->add_option("--alphas", pa.alphas)->delimiter(',');
  phase->add_option("--betas", pa.betas)->delimiter(',');
  phase->add_option("--p", pa.p)->capture_default_str();
  phase->add_option("--format", pa.format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  phase->add_option("--out", pa.out);

  GapArgs ga;
  auto* gap = app.add_subcommand("gap", "Conforming versus enriched minima over mesh levels");
  gap->add_option("--alpha", ga.alpha)->required();
  gap->add_option("--beta", ga.beta)->required();
  gap->add_option("--levels", ga.levels)->delimiter(',')->capture_default_str();
  gap->add_option("--grading", ga.grading)->capture_default_str();
  gap->add_option("--mode", ga.mode)->check(CLI::IsMember({"auto", "G", "dirichlet"}))->capture_default_str();
  gap->add_flag("--override-guard", ga.override_guard);
  gap->add_option("--dirichlet-scale", ga.dirichlet_scale)->capture_default_str();
  gap->add_option("--max-iterations", ga.max_iterations)->check(CLI::PositiveNumber)->capture_default_str();
  gap->add_option("--format", ga.format)->check(CLI::IsMember({"json", "table"}))->capture_default_str();
  gap->add_option("--out", ga.out);
  gap->add_option("--nodes-csv", ga.nodes_csv, "nodal values of both minimizers, every level");

  CutoffArgs cu;
  auto* cutoff = app.add_subcommand("cutoff", "Radial cutoff profile and energy certificate");
  cutoff->add_option("--kind", cu.kind)->required()->check(CLI::IsMember({"loglog", "psi-harmonic"}));
  cutoff->add_option("--eps", cu.eps);
  cutoff->add_option("--alpha", cu.alpha);
  cutoff->add_option("--r2", cu.r2)->capture_default_str();
  cutoff->add_option("--delta", cu.delta);
  cutoff->add_option("--p", cu.p)->capture_default_str();
  cutoff->add_option("--gamma", cu.gamma, "log exponent of the energy integrand (loglog)")->capture_default_str();
  cutoff->add_option("--out", cu.out);
  cutoff->add_option("--csv", cu.csv, "profile as r,eta,deta,log_r,log_deta");

  NormArgs na;
  auto* norm = app.add_subcommand("norm", "Luxemburg norm of a sampled field");
  norm->add_option("--field", na.field)->check(CLI::IsMember({"u2", "grad-u2", "b2"}))->capture_default_str();
  norm->add_option("--phase", na.phase)->check(CLI::IsMember({"phi", "psi", "double"}))->capture_default_str();
  norm->add_option("--alpha", na.alpha)->capture_default_str();
  norm->add_option("--beta", na.beta)->capture_default_str();
  norm->add_option("--p", na.p)->capture_default_str();
  norm->add_option("--resolution", na.resolution)->check(CLI::PositiveNumber)->capture_default_str();
  norm->add_option("--out", na.out);

  ConjugateArgs co;
  auto* conj = app.add_subcommand("conjugate", "Numeric versus closed-form conjugate of t^p log^gamma");
  conj->add_option("--p", co.p)->capture_default_str();
  conj->add_option("--gamma", co.gamma)->capture_default_str();
  conj->add_option("--s", co.s)->delimiter(',')->capture_default_str();
  conj->add_option("--out", co.out);

  FluxArgs fa;
  auto* flux = app.add_subcommand("flux", "Boundary integral of (b2 . nu) u2");
  flux->add_option("--nquad", fa.nquad)->check(CLI::PositiveNumber)->capture_default_str();
  flux->add_option("--format", fa.format)->check(CLI::IsMember({"table", "json"}))->capture_default_str();
  flux->add_option("--out", fa.out);

  FieldsArgs fi;
  auto* fields = app.add_subcommand("fields", "Cell-centred samples of a, u2, |grad u2|, |b2|");
  fields->add_option("--resolution", fi.resolution)->check(CLI::PositiveNumber)->capture_default_str();
  fields->add_option("--out", fi.out);

  try {
    app.parse(argc, argv);
    if (!config.empty()) {
      if (!app.get_subcommands().empty()) {
        throw precondition_error("USAGE_ERROR", "--config replaces the command line; give one or the other");
      }
      auto args = config_to_args(config);
      std::reverse(args.begin(), args.end());
      app.parse(args);
    }
    if (app.get_subcommands().empty()) {
      std::cout << app.help();
      return 2;
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("USAGE_ERROR", "precondition", e.what(), 2);
  } catch (const Error& e) {
    const int status = e.kind() == ErrorKind::Io ? 4 : 2;
    return report_error(e.code(), e.kind() == ErrorKind::Io ? "io" : "precondition", e.what(), status);
  }

  try {
    if (classify->parsed()) run_classify(ca);
    else if (phase->parsed()) run_phase(pa);
    else if (gap->parsed()) run_gap(ga);
    else if (cutoff->parsed()) {
      if (cu.kind == "loglog" && cutoff->count("--eps") == 0) {
        throw precondition_error("USAGE_ERROR", "loglog cutoff needs --eps");
      }
      if (cu.kind == "psi-harmonic" && (cutoff->count("--alpha") == 0 || cutoff->count("--delta") == 0)) {
        throw precondition_error("USAGE_ERROR", "psi-harmonic cutoff needs --alpha and --delta");
      }
      run_cutoff(cu);
    } else if (norm->parsed()) run_norm(na);
    else if (conj->parsed()) run_conjugate(co);
    else if (flux->parsed()) run_flux(fa);
    else if (fields->parsed()) run_fields(fi);
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::Precondition: return report_error(e.code(), "precondition", e.what(), 2);
      case ErrorKind::Numerical: return report_error(e.code(), "numerical", e.what(), 3);
      case ErrorKind::Io: return report_error(e.code(), "io", e.what(), 4);
    }
  } catch (const std::exception& e) {
    return report_error("INTERNAL_ERROR", "numerical", e.what(), 3);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
