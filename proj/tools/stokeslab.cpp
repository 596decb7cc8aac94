// stokeslab command line: formal solutions, Borel-Laplace sums, Stokes data,
// trajectories, probes and the bundled case studies.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "stokeslab/stokeslab.hpp"

namespace fs = std::filesystem;
using namespace stokeslab;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

struct RunConfig {
  std::string command;
  std::string target;  ///< system file or case-study name
  std::optional<int> order;
  double tol = 1e-10;
  std::optional<double> theta;
  std::optional<double> grid_min;
  std::optional<double> grid_max;
  std::optional<int> grid_points;
  std::string out = "stokeslab_out";
  int threads = 0;
  std::uint64_t seed = 1;
  std::string config;
  // command specific
  std::string continuation = "auto";
  std::string mode = "sat";
  std::string spec;
  bool closed_form = false;
};

struct Output {
  json report = json::object();
  std::ostringstream summary;
  std::map<std::string, std::string> files;
};

void apply_config(RunConfig& rc) {
  if (rc.config.empty()) return;
  const json j = read_json_file(rc.config);
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  static const std::set<std::string> known{"order",   "tol",  "theta", "grid_min",     "grid_max", "grid_points",
                                           "out",     "threads", "seed", "continuation", "mode",     "spec",
                                           "closed_form"};
  try {
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) throw ValidationError("unknown config key '" + key + "'");
      if (key == "order") rc.order = value.get<int>();
      if (key == "tol") rc.tol = value.get<double>();
      if (key == "theta") rc.theta = value.get<double>();
      if (key == "grid_min") rc.grid_min = value.get<double>();
      if (key == "grid_max") rc.grid_max = value.get<double>();
      if (key == "grid_points") rc.grid_points = value.get<int>();
      if (key == "out") rc.out = value.get<std::string>();
      if (key == "threads") rc.threads = value.get<int>();
      if (key == "seed") rc.seed = value.get<std::uint64_t>();
      if (key == "continuation") rc.continuation = value.get<std::string>();
      if (key == "mode") rc.mode = value.get<std::string>();
      if (key == "spec") rc.spec = value.get<std::string>();
      if (key == "closed_form") rc.closed_form = value.get<bool>();
    }
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("bad config value: ") + ex.what());
  }
}

void validate(const RunConfig& rc) {
  if (rc.order && (*rc.order < 1 || *rc.order > 4000)) throw ValidationError("--order must be in [1, 4000]");
  if (!(rc.tol > 0.0 && rc.tol <= 1e-2)) throw ValidationError("--tol must be in (0, 1e-2]");
  if (rc.grid_min && !(*rc.grid_min > 0.0)) throw ValidationError("--grid-min must be positive");
  if (rc.grid_min && rc.grid_max && !(*rc.grid_max > *rc.grid_min)) {
    throw ValidationError("--grid-max must exceed --grid-min");
  }
  if (rc.grid_points && *rc.grid_points < 2) throw ValidationError("--grid-points must be >= 2");
  if (rc.threads < 0) throw ValidationError("--threads must be >= 0");
}

fs::path resolve_system(const std::string& arg) {
  if (arg.empty()) throw ValidationError("missing system file");
  if (fs::exists(arg)) return arg;
  std::string name = fs::path(arg).filename().string();
  std::vector<fs::path> tries{fs::path(STOKESLAB_DATA_DIR) / name, fs::path(STOKESLAB_DATA_DIR) / (name + ".json")};
  std::replace(name.begin(), name.end(), '-', '_');
  tries.push_back(fs::path(STOKESLAB_DATA_DIR) / name);
  tries.push_back(fs::path(STOKESLAB_DATA_DIR) / (name + ".json"));
  for (const auto& t : tries) {
    if (fs::exists(t)) return t;
  }
  throw ValidationError("system file not found: " + arg);
}

std::string system_name(const fs::path& p) { return p.stem().string(); }

std::string exact_string(const ExactComplex& c) {
  std::ostringstream os;
  if (c.imag() == 0) {
    os << c.real();
  } else {
    os << c;
  }
  return os.str();
}

json options_json(const RunConfig& rc) {
  json j = {{"tol", rc.tol}, {"seed", rc.seed}};
  if (rc.order) j["order"] = *rc.order;
  if (rc.theta) j["theta"] = *rc.theta;
  return j;
}

StokesOptions stokes_options(const RunConfig& rc) {
  StokesOptions so;
  if (rc.grid_min) so.rho_min = *rc.grid_min;
  if (rc.grid_max) so.rho_max = *rc.grid_max;
  if (rc.grid_points) so.points = *rc.grid_points;
  so.threads = rc.threads;
  return so;
}

Resummation make_resummation(const OdeSystem<cplx>& sys, const fs::path& path, const RunConfig& rc, int order) {
  ResumOptions ro;
  ro.order = order;
  ro.continuation.mode = parse_continuation(rc.continuation);
  std::optional<std::vector<BorelHandle>> handles;
  if (rc.closed_form) {
    handles = closed_form_borel(system_name(path));
    if (!handles) throw ValidationError("no closed-form Borel transform for " + system_name(path));
  }
  return Resummation(sys, ro, handles);
}

// ---------------------------------------------------------------------------

void cmd_solve(const RunConfig& rc, const fs::path& path, Output& out) {
  const auto sys = load_system(path);
  const int order = rc.order.value_or(25);
  const auto h = formal_solution(sys.convert<ExactComplex>(), order);
  json exact = json::array();
  for (int j = 0; j < h.dim(); ++j) {
    json comp = json::array();
    for (int n = 0; n <= order; ++n) comp.push_back(exact_string(h[j][n]));
    exact.push_back(comp);
  }
  out.report["coefficients"] = series_vec_to_json(convert_series<cplx>(h));
  out.report["exact"] = exact;
  out.summary << "formal solution of " << path.filename().string() << " (p = " << sys.p() << ", r = " << sys.r()
              << ") through order " << order << "\n";
  for (int j = 0; j < h.dim(); ++j) {
    out.summary << "h_" << j + 1 << ":";
    for (int n = 1; n <= order; ++n) out.summary << (n > 1 ? ", " : " ") << exact_string(h[j][n]);
    out.summary << "\n";
  }
  out.files["coefficients.csv"] = [&] {
    std::ostringstream os;
    os << "n,component,re,im,exact\n";
    for (int n = 0; n <= order; ++n) {
      for (int j = 0; j < h.dim(); ++j) {
        const cplx v = to_cplx(h[j][n]);
        os << n << ',' << j + 1 << ',' << fmt17(v.real()) << ',' << fmt17(v.imag()) << ",\"" << exact_string(h[j][n])
           << "\"\n";
      }
    }
    return os.str();
  }();
}

void cmd_gevrey(const RunConfig& rc, const fs::path& path, Output& out) {
  const auto sys = load_system(path);
  const int order = rc.order.value_or(200);
  const auto h = formal_solution(sys, order);
  json comps = json::array();
  out.summary << "Gevrey estimates from " << order << " coefficients\n";
  for (int j = 0; j < h.dim(); ++j) {
    const auto g = gevrey_estimate(h[j]);
    comps.push_back(gevrey_to_json(g));
    out.summary << "h_" << j + 1 << ": kappa = " << fmt17(g.kappa) << ", log A = " << fmt17(g.log_a)
                << ", rms = " << fmt17(g.rms_residual) << "\n";
  }
  out.report["gevrey"] = comps;
}

void cmd_borel(const RunConfig& rc, const fs::path& path, Output& out) {
  const auto sys = load_system(path);
  const int order = rc.order.value_or(kDefaultOrder);
  const auto h = formal_solution(sys, order);
  const auto borel = borel_transform(h, sys.p());
  json comps = json::array();
  std::ostringstream csv;
  csv << "m,component,re,im\n";
  out.summary << "Borel transform of order " << sys.p() << "\n";
  for (int j = 0; j < static_cast<int>(borel.size()); ++j) {
    const auto& b = borel[static_cast<std::size_t>(j)];
    json c = {{"coefficients", series_to_json(b.coeffs)}};
    const auto handle = make_continuation(b, {parse_continuation(rc.continuation), -1, -1, {}});
    c["continuation"] = handle->kind();
    if (const auto* pade_fn = dynamic_cast<const PadeBorel*>(handle.get())) {
      c["pade"] = approximant_to_json(pade_fn->approximant());
    }
    json sing = json::array();
    for (const cplx& s : handle->singularities()) sing.push_back(complex_to_json(s));
    c["singularities"] = sing;
    comps.push_back(c);
    out.summary << "B_" << j + 1 << ": " << handle->kind() << ", singularities:";
    for (const cplx& s : handle->singularities()) out.summary << " (" << fmt17(s.real()) << ", " << fmt17(s.imag()) << ")";
    out.summary << "\n";
    for (int m = 0; m <= b.coeffs.order(); ++m) {
      csv << m << ',' << j + 1 << ',' << fmt17(b.coeffs[m].real()) << ',' << fmt17(b.coeffs[m].imag()) << '\n';
    }
  }
  out.report["borel"] = comps;
  out.files["borel.csv"] = csv.str();
}

void cmd_resum(const RunConfig& rc, const fs::path& path, Output& out) {
  const auto sys = load_system(path);
  const int order = rc.order.value_or(kDefaultOrder);
  const Resummation rs = make_resummation(sys, path, rc, order);
  const double theta = rc.theta.value_or(0.0);
  const double lo = rc.grid_min.value_or(0.04);
  const double hi = rc.grid_max.value_or(0.25);
  const int points = rc.grid_points.value_or(12);
  const auto& table = rs.directions();
  std::optional<int> on_direction;
  for (int d = 0; d < table.size(); ++d) {
    if (angular_distance(theta, table.theta(d)) < 1e-12) on_direction = d;
  }
  std::optional<SectorSum> sector;
  if (!on_direction && table.size() > 0) {
    for (int l = 0; l < table.size(); ++l) {
      if (rs.sector_sum(l).contains(theta)) sector = rs.sector_sum(l);
    }
  }
  std::ostringstream csv;
  csv << "rho,side,component,re,im,est_error\n";
  json samples = json::array();
  auto emit = [&](double rho, const std::string& side, const std::vector<LaplaceValue>& v) {
    json vals = json::array();
    for (std::size_t j = 0; j < v.size(); ++j) {
      vals.push_back({{"value", complex_to_json(v[j].value)}, {"est_error", v[j].est_error}});
      csv << fmt17(rho) << ',' << side << ',' << j + 1 << ',' << fmt17(v[j].value.real()) << ','
          << fmt17(v[j].value.imag()) << ',' << fmt17(v[j].est_error) << '\n';
    }
    samples.push_back({{"rho", rho}, {"side", side}, {"values", vals}});
  };
  for (int i = 0; i < points; ++i) {
    const double rho = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
    const cplx z = std::polar(rho, theta);
    if (on_direction) {
      const auto lat = rs.lateral_sums(*on_direction, z);
      emit(rho, "minus", lat.minus);
      emit(rho, "plus", lat.plus);
    } else if (sector) {
      emit(rho, "sector " + std::to_string(sector->index()), sector->evaluate(z));
    } else {
      emit(rho, "ray", rs.along(theta, z));
    }
  }
  out.report["theta"] = theta;
  out.report["mode"] = on_direction ? "lateral" : sector ? "sector" : "ray";
  json kinds = json::array();
  for (int j = 0; j < rs.r(); ++j) kinds.push_back(rs.borel(j).kind());
  out.report["continuation"] = kinds;
  out.report["samples"] = samples;
  out.files["resum.csv"] = csv.str();
  out.summary << "Borel-Laplace sums along arg z = " << fmt17(theta) << " ("
              << (on_direction ? "lateral sums across a singular direction" : sector ? "sector sum" : "single ray")
              << "), " << points << " points in [" << fmt17(lo) << ", " << fmt17(hi) << "]\n";
}

void write_stokes(const Resummation& rs, const std::vector<StokesReport>& reports, Output& out) {
  json rj = json::array();
  for (const auto& r : reports) {
    rj.push_back(stokes_report_to_json(r));
    out.summary << "direction theta = " << fmt17(r.theta) << " (lambda = " << fmt17(r.lambda.real()) << " + "
                << fmt17(r.lambda.imag()) << "i): ";
    if (r.genuine) {
      out.summary << "a = " << fmt17(r.fit->a) << ", p = " << fmt17(r.fit->p_hat) << ", |gamma| = "
                  << fmt17(std::abs(r.gamma)) << "\n";
    } else {
      out.summary << "no genuine jump (" << r.note << ")\n";
    }
  }
  out.report["stokes"] = rj;
  json dirs = json::array();
  for (int d = 0; d < rs.directions().size(); ++d) dirs.push_back(rs.directions().theta(d));
  out.report["singular_directions"] = dirs;
  out.files["stokes.csv"] = [&] {
    std::ostringstream os;
    write_stokes_csv(os, reports);
    return os.str();
  }();
  for (const auto& r : reports) {
    std::ostringstream os;
    write_jump_csv(os, r.samples);
    out.files["jumps_" + std::to_string(r.l) + ".csv"] = os.str();
  }
}

void cmd_stokes(const RunConfig& rc, const fs::path& path, Output& out, bool sd_only) {
  const auto sys = load_system(path);
  const int order = rc.order.value_or(kDefaultOrder);
  const Resummation rs = make_resummation(sys, path, rc, order);
  const auto reports = build_all_reports(rs, linear_part(sys), stokes_options(rc));
  if (!sd_only) write_stokes(rs, reports, out);
  const auto sd = check_SD(reports, rs.directions());
  out.report["sd"] = sd_to_json(sd);
  if (!sd_only) out.report["conjugate_pairs"] = [&] {
      json j = json::array();
      for (const auto& p : conjugate_pairing(reports)) {
        j.push_back({{"first", p.first}, {"second", p.second}, {"mismatch", p.mismatch}});
      }
      return j;
    }();
  out.summary << "SD: " << (sd.holds ? "true" : "false") << "\n";
}

void cmd_trajectory(const RunConfig& rc, const fs::path& path, Output& out) {
  const auto sys = load_system(path);
  const int order = rc.order.value_or(30);
  const double hi = rc.grid_max.value_or(0.3);
  const double lo = rc.grid_min.value_or(0.02);
  const auto h = formal_solution(sys, order);
  IntegratorOptions io;
  io.tol = rc.tol;
  if (rc.grid_points) io.points_per_decade = *rc.grid_points;
  const auto traj = integrate(sys, hi, partial_sum_seed(h, hi), lo, io);
  DynamicsDiagnostics dd;
  dd.trajectory = trajectory_stats_to_json(traj);
  const double r_hi = std::min(hi, 0.1);
  const double r_lo = std::max(lo, 0.4 * r_hi);
  if (r_hi > r_lo) dd.remainder = remainder_check(traj, h, std::min(8, order), r_lo, r_hi);
  FlowCheckOptions fo;
  fo.x_lo = std::max(fo.x_lo, lo);
  fo.x_hi = std::min(fo.x_hi, hi);
  fo.threads = rc.threads;
  if (fo.x_hi > fo.x_lo) dd.flow = flow_identity_check(sys, traj, fo, io);
  out.report["dynamics"] = diagnostics_to_json(dd);
  out.files["trajectory.csv"] = [&] {
    std::ostringstream os;
    write_trajectory_csv(os, traj);
    return os.str();
  }();
  out.summary << "integrated from x = " << fmt17(hi) << " to " << fmt17(traj.x_min()) << " in " << traj.steps
              << " steps (" << traj.rejected << " rejected)\n";
  if (dd.flow) out.summary << "flow identity max error: " << fmt17(dd.flow->max_error) << "\n";
  for (std::size_t n = 0; n < dd.remainder.size(); ++n) {
    out.summary << "C_" << n << " = " << fmt17(dd.remainder[n]) << "\n";
  }
}

void cmd_probe(const RunConfig& rc, const fs::path& path, Output& out) {
  const auto sys = load_system(path);
  const ProbeMode mode = parse_probe_mode(rc.mode);
  SimpleFunctionSpec<cplx> spec;
  if (!rc.spec.empty()) {
    spec = spec_from_json(read_json_file(rc.spec));
  } else if (mode == ProbeMode::SAT) {
    std::mt19937_64 rng(rc.seed);
    spec = random_sat_spec<ExactComplex>(rng, sys.r(), sys.p()).convert<cplx>();
  } else {
    throw ValidationError("the SQA probe needs --spec");
  }
  spec = validate_spec(spec, sys.p(), mode);
  out.report["spec"] = spec_to_json(spec);
  if (mode == ProbeMode::SAT) {
    const int order = rc.order.value_or(kProbeOrder);
    const auto res = sat_probe(spec.convert<ExactComplex>(), sys.convert<ExactComplex>(), order);
    out.report["sat"] = sat_result_to_json(res);
    out.summary << "composed series " << (res.vanishes ? "vanishes" : "does not vanish") << " through order "
                << order;
    if (!res.vanishes) out.summary << " (first nonzero order " << res.first_nonzero_order << ")";
    out.summary << "\n";
    return;
  }
  const int order = rc.order.value_or(30);
  const double hi = rc.grid_max.value_or(0.3);
  const double lo = rc.grid_min.value_or(0.02);
  const auto h = formal_solution(sys, order);
  IntegratorOptions io;
  io.tol = rc.tol;
  const auto traj = integrate(sys, hi, partial_sum_seed(h, hi), lo, io);
  const auto res = sqa_probe(spec, sys, traj, h, probe_grid(spec, traj));
  out.report["sqa"] = sqa_result_to_json(res);
  out.files["probe.csv"] = [&] {
    std::ostringstream os;
    os << "x,phi_re,phi_im,noise,cancellation\n";
    for (const auto& s : res.samples) {
      os << fmt17(s.x) << ',' << fmt17(s.phi.real()) << ',' << fmt17(s.phi.imag()) << ',' << fmt17(s.noise) << ','
         << fmt17(s.cancellation) << '\n';
    }
    return os.str();
  }();
  out.summary << "numeric probe on " << res.samples.size() << " points, " << res.resolved
              << " resolved, zero count " << res.zero_count << "\n";
  if (res.fit) out.summary << "exponential order fit: a = " << fmt17(res.fit->a) << ", k = " << fmt17(res.fit->k) << "\n";
}

void cmd_casestudy(const RunConfig& rc, Output& out) {
  CaseOptions co;
  if (rc.order) co.order = *rc.order;
  co.tol = rc.tol;
  co.threads = rc.threads;
  co.seed = rc.seed;
  const CaseReport rep = run_casestudy(rc.target, co);
  out.report = rep.to_json();
  out.summary << rep.summary();
  out.files = rep.files;
}

void write_outputs(const RunConfig& rc, const Output& out) {
  const fs::path dir(rc.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir.string() + ": " + ec.message());
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw ValidationError("cannot write " + (dir / name).string());
    f << body;
  };
  write("report.json", dump_fixed(out.report) + "\n");
  write("summary.txt", out.summary.str());
  for (const auto& [name, body] : out.files) write(name, body);
}

int run(int argc, char** argv) {
  CLI::App app{"stokeslab: formal solutions, Borel-Laplace summation and Stokes data at irregular singular points"};
  app.require_subcommand(1);
  RunConfig rc;

  auto common = [&rc](CLI::App* sub) {
    sub->add_option("--order", rc.order, "series order (default depends on the command)");
    sub->add_option("--tol", rc.tol, "integrator tolerance")->capture_default_str();
    sub->add_option("--theta", rc.theta, "direction arg z for resum");
    sub->add_option("--grid-min", rc.grid_min, "smallest |z| or x of the sample grid");
    sub->add_option("--grid-max", rc.grid_max, "largest |z| or x of the sample grid");
    sub->add_option("--grid-points", rc.grid_points, "grid points (points per decade for trajectory)");
    sub->add_option("--out", rc.out, "output directory")->capture_default_str();
    sub->add_option("--threads", rc.threads, "worker threads, 0 = all cores")->capture_default_str();
    sub->add_option("--seed", rc.seed, "random seed")->capture_default_str();
    sub->add_option("--config", rc.config, "JSON config; its keys override flags");
  };
  auto with_system = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("system", rc.target, "system JSON file or bundled name")->required();
    common(sub);
    return sub;
  };

  with_system("solve", "exact formal power series solution");
  with_system("gevrey", "Gevrey order estimate of the formal solution");
  auto* borel = with_system("borel", "Borel transform and its continuation");
  auto* resum = with_system("resum", "Borel-Laplace sums along a direction");
  auto* stokes = with_system("stokes", "Stokes jumps, decay fits and multipliers");
  auto* sd = with_system("sd-check", "check that every eigenvalue carries a nonzero Stokes multiplier");
  with_system("trajectory", "integrate the real solution and check the flow identity");
  auto* probe = with_system("probe", "formal (SAT) or numeric (SQA) simple-function probe");
  for (auto* sub : {borel, resum, stokes, sd}) {
    sub->add_option("--continuation", rc.continuation, "auto, pade or taylor")->capture_default_str();
  }
  for (auto* sub : {resum, stokes, sd}) {
    sub->add_flag("--closed-form", rc.closed_form, "use the known closed-form Borel transform");
  }
  probe->add_option("--mode", rc.mode, "sat or sqa")->capture_default_str();
  probe->add_option("--spec", rc.spec, "probe spec JSON (random SAT spec from --seed when omitted)");
  auto* cs = app.add_subcommand("casestudy", "run a bundled case study");
  cs->add_option("name", rc.target, "case study")->required()->check(CLI::IsMember(casestudy_names()));
  common(cs);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }
  rc.command = app.get_subcommands().front()->get_name();

  try {
    apply_config(rc);
    validate(rc);
    if (rc.threads == 0) rc.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    Output out;
    if (rc.command == "casestudy") {
      cmd_casestudy(rc, out);
    } else {
      const fs::path path = resolve_system(rc.target);
      out.report["system"] = system_name(path);
      if (rc.command == "solve") cmd_solve(rc, path, out);
      if (rc.command == "gevrey") cmd_gevrey(rc, path, out);
      if (rc.command == "borel") cmd_borel(rc, path, out);
      if (rc.command == "resum") cmd_resum(rc, path, out);
      if (rc.command == "stokes") cmd_stokes(rc, path, out, false);
      if (rc.command == "sd-check") cmd_stokes(rc, path, out, true);
      if (rc.command == "trajectory") cmd_trajectory(rc, path, out);
      if (rc.command == "probe") cmd_probe(rc, path, out);
    }
    out.report["command"] = rc.command;
    out.report["options"] = options_json(rc);
    write_outputs(rc, out);
    std::cout << out.summary.str();
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
