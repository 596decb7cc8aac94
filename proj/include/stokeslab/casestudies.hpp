#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stokeslab/dynamics.hpp"
#include "stokeslab/io.hpp"
#include "stokeslab/odesys.hpp"
#include "stokeslab/probes.hpp"
#include "stokeslab/resum.hpp"
#include "stokeslab/stokes.hpp"

#ifndef STOKESLAB_DATA_DIR
#define STOKESLAB_DATA_DIR "data/systems"
#endif

namespace stokeslab {

inline std::filesystem::path bundled_system_path(const std::string& name) {
  std::string file = name;
  for (auto& c : file) {
    if (c == '-') c = '_';
  }
  return std::filesystem::path(STOKESLAB_DATA_DIR) / (file + ".json");
}

inline OdeSystem<cplx> load_bundled(const std::string& name) { return load_system(bundled_system_path(name)); }

struct CaseOptions {
  int order = kDefaultOrder;  ///< formal order for resummation
  double tol = 1e-10;         ///< integrator tolerance
  int threads = 1;
  std::uint64_t seed = 1;
};

struct CaseCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct CaseReport {
  std::string name;
  json report = json::object();
  std::vector<CaseCheck> checks;
  std::map<std::string, std::string> files;  ///< file name -> contents

  void check(std::string what, bool pass, std::string detail) {
    checks.push_back({std::move(what), pass, std::move(detail)});
  }

  bool all_pass() const {
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return true;
  }

  std::string summary() const {
    std::ostringstream os;
    os << "case study: " << name << "\n";
    for (const auto& c : checks) os << (c.pass ? "  [pass] " : "  [FAIL] ") << c.name << ": " << c.detail << "\n";
    return os.str();
  }

  json to_json() const {
    json j = report;
    j["case"] = name;
    json cj = json::array();
    for (const auto& c : checks) cj.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    j["checks"] = cj;
    return j;
  }
};

inline const std::vector<std::string>& casestudy_names() {
  static const std::vector<std::string> names{"euler", "euler2d", "euler-pair", "odd-pump", "linking",
                                              "counterexample"};
  return names;
}

namespace detail {

inline std::string sci(double v, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << std::scientific << v;
  return os.str();
}

template <typename F>
std::string to_csv(F&& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

inline void write_coefficients_csv(std::ostream& os, const SeriesVec<cplx>& h) {
  os << "n,component,re,im\n";
  for (int n = 0; n <= h.order(); ++n) {
    for (int j = 0; j < h.dim(); ++j) {
      os << n << ',' << j + 1 << ',' << fmt17(h[j][n].real()) << ',' << fmt17(h[j][n].imag()) << '\n';
    }
  }
}

inline bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

struct PairRun {
  PairTrajectory pair;
  std::vector<cplx> rotation;  ///< d_1 + i d_2
  std::vector<double> first;   ///< d_1
  double turns = 0.0;
  int zeros = 0;
};

inline PairRun run_rotating_pair(const OdeSystem<cplx>& rot, double x0, const State& h0, const State& d0, double x_min,
                                 const CaseOptions& opt) {
  IntegratorOptions io;
  io.tol = opt.tol;
  io.points_per_decade = required_points_per_decade(1.0, 1, x_min);
  PairRun out{integrate_pair(rot, x0, h0, d0, x_min, io), {}, {}, 0.0, 0};
  for (const auto& d : out.pair.difference) {
    out.rotation.push_back(cplx(d[0].real(), d[1].real()));
    out.first.push_back(d[0].real());
  }
  out.turns = winding(out.rotation, out.pair.base.grid, {1.0, 1, 16});
  out.zeros = zero_count(out.first);
  return out;
}

inline const double kLinkingTurns = (1.0 / 0.02 - 1.0 / 0.3) / kTwoPi;

}  // namespace detail

// ---------------------------------------------------------------------------

inline CaseReport casestudy_euler(const CaseOptions& opt = {}) {
  CaseReport rep;
  rep.name = "euler";
  const auto sys = load_bundled("euler");
  const auto exact = formal_solution(sys.convert<ExactComplex>(), 25);
  bool golden = true;
  BigInt fact = 1;
  for (int n = 1; n <= 25; ++n) {
    if (n > 1) fact *= n - 1;
    golden = golden && exact[0][n] == ExactComplex(Rational(fact));
  }
  rep.check("coefficients (n-1)!", golden, "exact for n <= 25");

  const auto h = formal_solution(sys, 200);
  const auto g = gevrey_estimate(h[0]);
  rep.check("Gevrey order", detail::within(g.kappa, 0.9, 1.1), "kappa = " + detail::sci(g.kappa));

  const auto b = borel_transform(h.truncated(40), 1).front();
  bool ones = true;
  for (int m = 0; m <= b.coeffs.order(); ++m) ones = ones && std::abs(b.coeffs[m] - 1.0) < 1e-14;
  rep.check("Borel coefficients", ones, "all equal to 1");
  const auto ra = pade(b, 8, 8);
  double pole_err = 1.0;
  for (const auto& p : ra.poles) pole_err = std::min(pole_err, std::abs(p.location - 1.0));
  rep.check("Pade pole", pole_err < 1e-8, "|t* - 1| = " + detail::sci(pole_err));

  ResumOptions ro;
  ro.order = opt.order;
  Resummation rs(sys, ro);
  const auto samples = stokes_jump(rs, 0, {0.05, 0.1, 0.2}, opt.threads);
  double rel = 0.0;
  for (const auto& s : samples) {
    const double expected = kTwoPi * std::exp(-1.0 / s.z.real());
    rel = std::max(rel, std::abs(s.magnitude() - expected) / expected);
  }
  const double at01 = samples[1].magnitude();
  rep.check("jump magnitude", rel < 1e-6, "max relative error vs 2 pi e^{-1/x} = " + detail::sci(rel));
  rep.check("jump at 0.1", std::abs(at01 - 2.85255e-4) < 5e-9, "|Delta(0.1)| = " + detail::sci(at01));

  StokesOptions so;
  so.threads = opt.threads;
  const auto reports = build_all_reports(rs, linear_part(sys), so);
  const auto sd = check_SD(reports, rs.directions());
  rep.check("SD", sd.holds, sd.holds ? "holds" : "fails");

  rep.report["coefficients"] = series_vec_to_json(convert_series<cplx>(exact.truncated(10)));
  rep.report["gevrey"] = gevrey_to_json(g);
  rep.report["pade"] = approximant_to_json(ra);
  json jumps = json::array();
  for (const auto& s : samples) jumps.push_back({{"x", s.z.real()}, {"abs_delta", s.magnitude()}});
  rep.report["jumps"] = jumps;
  json rj = json::array();
  for (const auto& r : reports) rj.push_back(stokes_report_to_json(r));
  rep.report["stokes"] = rj;
  rep.report["sd"] = sd_to_json(sd);
  rep.files["coefficients.csv"] = detail::to_csv([&](std::ostream& os) { detail::write_coefficients_csv(os, h.truncated(25)); });
  rep.files["stokes.csv"] = detail::to_csv([&](std::ostream& os) { write_stokes_csv(os, reports); });
  rep.files["jumps.csv"] = detail::to_csv([&](std::ostream& os) { write_jump_csv(os, reports.front().samples); });
  return rep;
}

inline CaseReport casestudy_euler2d(const CaseOptions& opt = {}) {
  CaseReport rep;
  rep.name = "euler2d";
  const auto sys = load_bundled("euler2d");
  const auto exact = formal_solution(sys.convert<ExactComplex>(), 20);
  // (n-1)! (1 - i)^{-n} = (n-1)! ((1 + i) / 2)^n
  bool golden = true;
  ExactComplex power(1);
  const ExactComplex half_one_plus_i(Rational(1, 2), Rational(1, 2));
  BigInt fact = 1;
  for (int n = 1; n <= 20; ++n) {
    power *= half_one_plus_i;
    if (n > 1) fact *= n - 1;
    const ExactComplex v = ExactComplex(Rational(fact)) * power;
    golden = golden && exact[0][n] == ExactComplex(v.real()) && exact[1][n] == ExactComplex(v.imag());
  }
  rep.check("coefficients (n-1)!(1-i)^{-n}", golden, "exact for n <= 20");

  ResumOptions ro;
  ro.order = opt.order;
  Resummation rs(sys, ro);
  const auto& table = rs.directions();
  bool dirs = table.size() == 2 && std::abs(table.theta(0) - kPi / 4) < 1e-12 &&
              std::abs(table.theta(1) - 7 * kPi / 4) < 1e-12;
  rep.check("singular directions", dirs,
            "theta = " + (table.size() > 0 ? fmt17(table.theta(0)) : "-") + ", " +
                (table.size() > 1 ? fmt17(table.theta(1)) : "-"));

  StokesOptions so;
  so.threads = opt.threads;
  const auto reports = build_all_reports(rs, linear_part(sys), so);
  double worst_rate = 0.0;
  for (const auto& r : reports) {
    const double a = r.fit ? r.fit->a : 0.0;
    worst_rate = std::max(worst_rate, std::abs(a - std::sqrt(2.0)) / std::sqrt(2.0));
  }
  rep.check("decay rates", worst_rate < 0.05, "max |a - sqrt 2| / sqrt 2 = " + detail::sci(worst_rate));
  const auto pairs = conjugate_pairing(reports);
  const double mismatch = pairs.empty() ? 1.0 : pairs.front().mismatch;
  rep.check("conjugate multipliers", !pairs.empty() && mismatch < 0.05, "mismatch = " + detail::sci(mismatch));
  const auto sd = check_SD(reports, table);
  rep.check("SD", sd.holds, sd.holds ? "holds" : "fails");

  const auto h = formal_solution(sys, 30);
  IntegratorOptions io;
  io.tol = opt.tol;
  const auto traj = integrate(sys, 0.3, partial_sum_seed(h, 0.3), 0.02, io);
  FlowCheckOptions fo;
  fo.threads = opt.threads;
  const auto flow = flow_identity_check(sys, traj, fo, io);
  rep.check("flow identity", flow.max_error < 1e-7, "max error = " + detail::sci(flow.max_error));

  json rj = json::array();
  for (const auto& r : reports) rj.push_back(stokes_report_to_json(r));
  rep.report["stokes"] = rj;
  rep.report["sd"] = sd_to_json(sd);
  DynamicsDiagnostics dd;
  dd.trajectory = trajectory_stats_to_json(traj);
  dd.flow = flow;
  rep.report["dynamics"] = diagnostics_to_json(dd);
  rep.files["stokes.csv"] = detail::to_csv([&](std::ostream& os) { write_stokes_csv(os, reports); });
  rep.files["trajectory.csv"] = detail::to_csv([&](std::ostream& os) { write_trajectory_csv(os, traj); });
  return rep;
}

inline CaseReport casestudy_euler_pair(const CaseOptions& opt = {}) {
  CaseReport rep;
  rep.name = "euler-pair";
  const auto sys = load_bundled("euler-pair");
  const auto da = check_distinct_arguments(eigenvalues(linear_part(sys)));
  rep.check("distinct arguments fail", !da.holds, da.reason);

  // f = z_11 - z_22 with P = (x, x/2): H_1(x) - H_2(x/2)
  SimpleFunctionSpec<cplx> spec;
  spec.r = 2;
  spec.polynomials = {TruncatedSeries<cplx>(std::vector<cplx>{0.0, 1.0}),
                      TruncatedSeries<cplx>(std::vector<cplx>{0.0, 0.5})};
  spec.f = MPoly<cplx>::variable(5, 1) + MPoly<cplx>::variable(5, 4, cplx(-1.0, 0.0));
  spec = validate_spec(spec, sys.p(), ProbeMode::SAT);
  const auto sat = sat_probe(spec.convert<ExactComplex>(), sys.convert<ExactComplex>(), 40);
  rep.check("formal composition vanishes", sat.vanishes, "through order 40");

  // H = (E + e^{-1/x}, E(2x)) with E the Borel sum of the Euler series
  const auto euler = load_bundled("euler");
  Resummation rs(euler);
  auto borel = [&rs](double x) { return rs.lateral_sums(0, x).minus[0].value.real(); };
  const State seed{borel(0.3) + std::exp(-1.0 / 0.3), borel(0.6)};
  IntegratorOptions io;
  io.tol = opt.tol;
  const auto traj = integrate(sys, 0.3, seed, 0.02, io);
  const auto h = formal_solution(sys, 30);
  std::vector<double> xs;
  for (double x : probe_grid(spec, traj)) {
    if (x >= 0.06) xs.push_back(x);
  }
  SqaOptions sq;
  sq.flat_threshold = 1.0;
  const auto sqa = sqa_probe(spec, sys, traj, h, xs, sq);
  const bool fit_ok = sqa.fit && sqa.fit->k == 1.0 && std::abs(sqa.fit->a - 1.0) < 0.05;
  rep.check("numeric probe is exponentially small", fit_ok,
            sqa.fit ? "a = " + detail::sci(sqa.fit->a) + ", k = " + detail::sci(sqa.fit->k) : sqa.note);

  rep.report["distinct_arguments"] = {{"holds", da.holds}, {"reason", da.reason}};
  rep.report["spec"] = spec_to_json(spec);
  rep.report["sat"] = sat_result_to_json(sat);
  rep.report["sqa"] = sqa_result_to_json(sqa);
  rep.files["trajectory.csv"] = detail::to_csv([&](std::ostream& os) { write_trajectory_csv(os, traj); });
  return rep;
}

inline CaseReport casestudy_odd_pump(const CaseOptions& opt = {}) {
  CaseReport rep;
  rep.name = "odd-pump";
  const auto sys = load_bundled("odd-pump");
  const auto exact = formal_solution(sys.convert<ExactComplex>(), 41);
  bool golden = true;
  BigInt fact = 1;
  for (int m = 0; m <= 12; ++m) {
    if (m > 0) fact *= m;
    golden = golden && exact[0][2 * m + 1] == ExactComplex(Rational(fact * (BigInt(1) << m)));
    golden = golden && exact[0][2 * m] == ExactComplex(0);
  }
  rep.check("coefficients 2^n n!", golden, "odd coefficients exact for n <= 12, even zero");

  const auto b = borel_transform(exact, 2).front();
  bool closed = true;
  for (int m = 0; m < b.coeffs.order(); ++m) {
    const ExactComplex expected = m % 2 == 0 ? ExactComplex(Rational(BigInt(1) << (m / 2))) : ExactComplex(0);
    closed = closed && b.coeffs[m] == expected;
  }
  rep.check("Borel transform 1/(1-2t^2)", closed, "exact through order " + std::to_string(b.coeffs.order() - 1));

  const auto h = formal_solution(sys, 200);
  const auto g = gevrey_estimate(h[0]);
  rep.check("Gevrey order", detail::within(g.kappa, 0.4, 0.6), "kappa = " + detail::sci(g.kappa));
  const auto ra = pade(borel_transform(h.truncated(40), 2).front(), 4, 4);
  double err = 0.0;
  const double target = 1.0 / std::sqrt(2.0);
  for (double s : {target, -target}) {
    double best = 1.0;
    for (const auto& p : ra.poles) best = std::min(best, std::abs(p.location - s));
    err = std::max(err, best);
  }
  rep.check("Pade poles", err < 1e-8, "max distance to +-1/sqrt 2 = " + detail::sci(err));

  ResumOptions ro;
  ro.order = opt.order;
  Resummation rs(sys, ro);
  StokesOptions so;
  so.threads = opt.threads;
  const auto reports = build_all_reports(rs, linear_part(sys), so);
  bool rates = reports.size() == 2;
  std::string detail;
  for (const auto& r : reports) {
    rates = rates && r.genuine && r.fit && r.fit->p_hat == 2.0 && std::abs(r.fit->a - 0.5) < 0.025;
    if (r.fit) detail += "theta " + fmt17(r.theta) + ": a = " + detail::sci(r.fit->a) + ", p = " + fmt17(r.fit->p_hat) + "; ";
  }
  rep.check("rank-two decay", rates, detail);

  rep.report["gevrey"] = gevrey_to_json(g);
  rep.report["pade"] = approximant_to_json(ra);
  json rj = json::array();
  for (const auto& r : reports) rj.push_back(stokes_report_to_json(r));
  rep.report["stokes"] = rj;
  rep.files["stokes.csv"] = detail::to_csv([&](std::ostream& os) { write_stokes_csv(os, reports); });
  return rep;
}

inline CaseReport casestudy_linking(const CaseOptions& opt = {}) {
  CaseReport rep;
  rep.name = "linking";
  const auto sys = load_bundled("euler2d");
  const auto h = formal_solution(sys, 30);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> u(-1e-3, 1e-3);
  State d0{u(rng), u(rng)};
  if (d0[0] == 0.0 && d0[1] == 0.0) d0[0] = 1e-3;
  const auto run = detail::run_rotating_pair(sys, 0.3, partial_sum_seed(h, 0.3), d0, 0.02, opt);
  const double dev = std::abs(run.turns - detail::kLinkingTurns) / detail::kLinkingTurns;
  rep.check("winding", run.turns >= 5.0 && dev < 0.2,
            "turns = " + detail::sci(run.turns) + " (linear model " + detail::sci(detail::kLinkingTurns) + ")");
  rep.check("sign changes of (H - G)_1", run.zeros >= 10, std::to_string(run.zeros));

  json trunc = json::array();
  bool monotone = true;
  double previous = run.turns;
  for (double x_min : {0.03, 0.05, 0.1}) {
    std::vector<cplx> part;
    for (std::size_t i = 0; i < run.rotation.size(); ++i) {
      if (run.pair.base.grid[i] >= x_min) part.push_back(run.rotation[i]);
    }
    const double t = winding(part);
    monotone = monotone && t < previous;
    previous = t;
    trunc.push_back({{"x_min", x_min}, {"turns", t}});
  }
  rep.check("winding decreases with x_min", monotone, "truncated at 0.03, 0.05, 0.1");

  DynamicsDiagnostics dd;
  dd.trajectory = trajectory_stats_to_json(run.pair.base);
  dd.winding = run.turns;
  dd.zero_count = run.zeros;
  rep.report["dynamics"] = diagnostics_to_json(dd);
  rep.report["seed_offset"] = {complex_to_json(d0[0]), complex_to_json(d0[1])};
  rep.report["truncated_windings"] = trunc;
  rep.files["pair.csv"] = detail::to_csv([&](std::ostream& os) { write_pair_csv(os, run.pair); });
  return rep;
}

inline CaseReport casestudy_counterexample(const CaseOptions& opt = {}) {
  CaseReport rep;
  rep.name = "counterexample";
  const auto sys = load_bundled("counterexample");
  const auto rot = load_bundled("euler2d");
  const auto exact = formal_solution(sys.convert<ExactComplex>(), 20);
  const auto base = formal_solution(rot.convert<ExactComplex>(), 20);
  bool scaled = true;
  for (int n = 0; n <= 20; ++n) {
    const ExactComplex s(Rational(BigInt(1) << n));
    for (int j = 0; j < 2; ++j) {
      scaled = scaled && exact[j][n] == base[j][n] && exact[2 + j][n] == s * base[j][n];
    }
  }
  rep.check("expansion (H(x), H(2x))", scaled, "exact for n <= 20");

  // H* = (H, W) with W(x) = G(2x); G is a second solution of the rotating pair
  const auto h = formal_solution(sys, 30);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> u(-1e-3, 1e-3);
  State offset{0.0, 0.0, u(rng), u(rng)};
  IntegratorOptions io;
  io.tol = opt.tol;
  const auto traj = integrate(sys, 0.3, partial_sum_seed(h, 0.3, -1, offset), 0.01, io);

  // G(0.3) = W(0.15); follow G - H from there with the difference integrator
  const State w = evaluate_at(sys, traj, 0.15, io);
  const State h0{traj.values[0][0], traj.values[0][1]};
  const State d0{w[2] - h0[0], w[3] - h0[1]};
  const auto run = detail::run_rotating_pair(rot, 0.3, h0, d0, 0.02, opt);

  // cross-check G against the doubled trajectory where both are resolved
  double consistency = 0.0;
  for (std::size_t i = 0; i < run.pair.base.grid.size(); i += 16) {
    const double x = run.pair.base.grid[i];
    if (x < 0.1) break;
    const State g = run.pair.other(i);
    const State wx = evaluate_at(sys, traj, x / 2, io);
    consistency = std::max({consistency, std::abs(g[0] - wx[2]), std::abs(g[1] - wx[3])});
  }
  rep.check("G(x) = W(x/2)", consistency < 1e-7, "max deviation on [0.1, 0.3] = " + detail::sci(consistency));
  rep.check("crossings of v1 - v2 = 0", run.zeros >= 10, "zero_count = " + std::to_string(run.zeros));

  // the same crossing probe evaluated directly on the doubled trajectory; its
  // resolution is limited by the subtraction H_1(x) - W_1(x/2)
  SimpleFunctionSpec<cplx> spec;
  spec.r = 4;
  spec.polynomials = {TruncatedSeries<cplx>(std::vector<cplx>{0.0, 1.0}),
                      TruncatedSeries<cplx>(std::vector<cplx>{0.0, 0.5})};
  spec.f = MPoly<cplx>::variable(9, 1) + MPoly<cplx>::variable(9, 1 + 2 * 2 + 1, cplx(-1.0, 0.0));
  spec = validate_spec(spec, sys.p(), ProbeMode::SQA);
  const auto sqa = sqa_probe(spec, sys, traj, h, probe_grid(spec, traj));

  DynamicsDiagnostics dd;
  dd.trajectory = trajectory_stats_to_json(traj);
  dd.winding = run.turns;
  dd.zero_count = run.zeros;
  rep.report["dynamics"] = diagnostics_to_json(dd);
  rep.report["direct_probe"] = {{"zero_count", sqa.zero_count}, {"resolved_samples", sqa.resolved},
                                {"samples", sqa.samples.size()}};
  rep.files["trajectory.csv"] = detail::to_csv([&](std::ostream& os) { write_trajectory_csv(os, traj); });
  rep.files["pair.csv"] = detail::to_csv([&](std::ostream& os) { write_pair_csv(os, run.pair); });
  return rep;
}

inline CaseReport run_casestudy(const std::string& name, const CaseOptions& opt = {}) {
  if (name == "euler") return casestudy_euler(opt);
  if (name == "euler2d") return casestudy_euler2d(opt);
  if (name == "euler-pair") return casestudy_euler_pair(opt);
  if (name == "odd-pump") return casestudy_odd_pump(opt);
  if (name == "linking") return casestudy_linking(opt);
  if (name == "counterexample") return casestudy_counterexample(opt);
  std::string known;
  for (const auto& n : casestudy_names()) known += (known.empty() ? "" : ", ") + n;
  throw ValidationError("unknown case study '" + name + "' (known: " + known + ")");
}

}  // namespace stokeslab
