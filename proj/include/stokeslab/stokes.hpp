#pragma once

// Stokes phenomenon measurements: jumps between consecutive sector sums,
// exponential decay-rate fits, multiplier estimates and the check that every
// eigenvalue has a direction with a nonzero multiplier.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "stokeslab/errors.hpp"
#include "stokeslab/fitting.hpp"
#include "stokeslab/io.hpp"
#include "stokeslab/linalg.hpp"
#include "stokeslab/odesys.hpp"
#include "stokeslab/parallel.hpp"
#include "stokeslab/resum.hpp"

namespace stokeslab {

struct StokesOptions {
  double rho_min = 0.04;
  double rho_max = 0.25;
  int points = 12;
  double noise_factor = 100.0;  ///< a sample is resolved when |delta| > noise_factor * noise
  double max_fit_rms = 0.25;    ///< accepted decay fits have rms residual below this (log units)
  double sd_threshold = 1e-6;   ///< relative multiplier threshold for (SD)
  double max_dispersion = 0.5;
  std::vector<double> order_candidates = default_order_candidates();
  int threads = 1;
};

struct JumpSample {
  cplx z;
  std::vector<cplx> delta;    ///< H_{l+1}(z) - H_l(z)
  std::vector<double> noise;  ///< per-component rounding and quadrature estimate

  double magnitude() const {
    double s = 0.0;
    for (const auto& d : delta) s += std::norm(d);
    return std::sqrt(s);
  }
  double noise_magnitude() const {
    double s = 0.0;
    for (double n : noise) s += n * n;
    return std::sqrt(s);
  }
};

/// Singular direction crossed by the jump between sectors l and l+1.
inline int crossed_direction(const Resummation& rs, int l) {
  const int n = rs.directions().size();
  return (((l + 1) % n) + n) % n;
}

/// z = rho e^{i theta_{l+1}} on a geometric rho grid.
inline std::vector<cplx> bisector_grid(const Resummation& rs, int l, const StokesOptions& opt = {}) {
  if (opt.points < 2 || !(opt.rho_min > 0.0) || !(opt.rho_max > opt.rho_min)) {
    throw ValidationError("Stokes grid needs >= 2 points and 0 < rho_min < rho_max");
  }
  const double theta = rs.directions().theta(crossed_direction(rs, l));
  std::vector<cplx> out;
  for (int i = 0; i < opt.points; ++i) {
    const double rho = opt.rho_min * std::pow(opt.rho_max / opt.rho_min, static_cast<double>(i) / (opt.points - 1));
    out.push_back(std::polar(rho, theta));
  }
  return out;
}

/// Delta_l(z) = H_{l+1}(z) - H_l(z) at each grid point.
inline std::vector<JumpSample> stokes_jump(const Resummation& rs, int l, const std::vector<cplx>& z_grid,
                                           int threads = 1) {
  const int d = crossed_direction(rs, l);
  const double theta = rs.directions().theta(d);
  const double reach = kPi / (2.0 * rs.p()) - rs.lateral_offset(d);
  for (const cplx& z : z_grid) {
    if (z == cplx(0.0, 0.0) || angular_distance(std::arg(z), theta) >= reach) {
      throw OutOfSector("z = (" + fmt17(z.real()) + ", " + fmt17(z.imag()) +
                        ") is outside the overlap around theta = " + fmt17(theta));
    }
  }
  std::vector<JumpSample> out(z_grid.size());
  parallel_for(z_grid.size(), threads, [&](std::size_t i) {
    JumpValue j = rs.jump(d, z_grid[i]);
    out[i] = {z_grid[i], std::move(j.value), std::move(j.noise)};
  });
  return out;
}

struct DecayFit {
  double a = 0.0;       ///< rate in |z|^{-p_hat}
  double p_hat = 0.0;
  double c = 0.0;       ///< log prefactor
  double alpha = 0.0;   ///< power of |z| from the residual slope (raw)
  double rms_residual = 0.0;
  int used = 0;
};

/// Fit log|Delta| ~ c - a |z|^{-p_hat} + alpha log|z| over resolved samples;
/// alpha is read back as the slope of log|Delta| + a |z|^{-p_hat} against log|z|.
inline DecayFit decay_rate_fit(const std::vector<JumpSample>& samples, const StokesOptions& opt = {}) {
  std::vector<double> rho;
  std::vector<double> mag;
  for (const auto& s : samples) {
    const double m = s.magnitude();
    if (m > opt.noise_factor * s.noise_magnitude() && m > 0.0) {
      rho.push_back(std::abs(s.z));
      mag.push_back(m);
    }
  }
  // joint fit with the log rho term: fitting a without it lets rho^alpha leak into a
  ExponentialOrderFit e = exp_order_fit(rho, mag, opt.order_candidates, true);
  DecayFit fit;
  fit.a = e.a;
  fit.p_hat = e.k;
  fit.c = e.c;
  fit.rms_residual = e.rms_residual;
  fit.used = static_cast<int>(rho.size());
  std::vector<double> log_rho;
  std::vector<double> resid;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    log_rho.push_back(std::log(rho[i]));
    resid.push_back(std::log(mag[i]) + e.a * std::pow(rho[i], -e.k));
  }
  fit.alpha = fitted_slope(log_rho, resid);
  return fit;
}

struct MultiplierEstimate {
  cplx gamma;
  double dispersion = 0.0;  ///< relative standard deviation over samples
};

/// gamma = mean of coordinate mu of V^{-1} Delta(z) divided by
/// e^{-lambda/(p z^p)} z^alpha. `basis` holds the eigenvectors as columns.
inline MultiplierEstimate multiplier_estimate(const std::vector<JumpSample>& samples, cplx lambda, int p,
                                              double alpha, const Matrix<cplx>& basis, int mu,
                                              const StokesOptions& opt = {}) {
  LuSolver<cplx> lu(basis, 1e-12);
  if (lu.singular()) throw NumericError("eigenvector basis is singular");
  std::vector<cplx> values;
  for (const auto& s : samples) {
    if (!(s.magnitude() > opt.noise_factor * s.noise_magnitude())) continue;
    const auto coords = lu.solve(s.delta);
    const cplx model = std::exp(-lambda / (static_cast<double>(p) * std::pow(s.z, p))) * std::pow(s.z, alpha);
    values.push_back(coords[static_cast<std::size_t>(mu)] / model);
  }
  if (values.empty()) throw InconsistentSamples("no resolved samples for the multiplier estimate");
  cplx mean(0.0, 0.0);
  for (const auto& v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (const auto& v : values) var += std::norm(v - mean);
  MultiplierEstimate est;
  est.gamma = mean;
  est.dispersion = std::abs(mean) > 0.0 ? std::sqrt(var / values.size()) / std::abs(mean) : 0.0;
  if (est.dispersion > opt.max_dispersion) {
    throw InconsistentSamples("multiplier dispersion " + fmt17(est.dispersion) + " exceeds " +
                              fmt17(opt.max_dispersion));
  }
  return est;
}

/// Eigenvectors of A_0 as columns, in the order of the direction table.
inline Matrix<cplx> eigenbasis(const Matrix<cplx>& a0, const std::vector<cplx>& eigenvalues) {
  const int r = a0.rows();
  Matrix<cplx> v(r, r);
  for (int j = 0; j < r; ++j) {
    const auto col = eigenvector(a0, eigenvalues[static_cast<std::size_t>(j)]);
    for (int i = 0; i < r; ++i) v(i, j) = col[static_cast<std::size_t>(i)];
  }
  return v;
}

struct StokesReport {
  int l = 0;                  ///< jump between sectors l and l+1
  int direction = 0;          ///< index of theta_{l+1} in the table
  double theta = 0.0;
  int eigen_index = 0;
  cplx lambda;
  int sheet = 0;
  std::vector<JumpSample> samples;
  int resolved = 0;           ///< samples above the noise floor
  bool genuine = false;       ///< a decay fit was accepted
  std::optional<DecayFit> fit;
  double expected_rate = 0.0; ///< |lambda| / p
  cplx gamma;                 ///< zero when no genuine jump was detected
  double dispersion = 0.0;
  double threshold = 0.0;     ///< (SD) threshold for |gamma|
  std::string note;
};

inline StokesReport build_report(const Resummation& rs, const Matrix<cplx>& a0, int l, const StokesOptions& opt = {}) {
  StokesReport rep;
  const auto& table = rs.directions();
  rep.l = ((l % table.size()) + table.size()) % table.size();
  rep.direction = crossed_direction(rs, rep.l);
  rep.theta = table.theta(rep.direction);
  rep.eigen_index = table.entry(rep.direction).eigen_index;
  rep.sheet = table.entry(rep.direction).sheet;
  rep.lambda = table.eigenvalues[static_cast<std::size_t>(rep.eigen_index)];
  rep.expected_rate = std::abs(rep.lambda) / rs.p();
  rep.samples = stokes_jump(rs, rep.l, bisector_grid(rs, rep.l, opt), opt.threads);

  for (const auto& s : rep.samples) {
    if (s.magnitude() > opt.noise_factor * s.noise_magnitude()) ++rep.resolved;
  }
  try {
    DecayFit fit = decay_rate_fit(rep.samples, opt);
    rep.fit = fit;
    rep.genuine = fit.a > 0.0 && fit.rms_residual <= opt.max_fit_rms;
    if (!rep.genuine) rep.note = "decay fit rejected (a = " + fmt17(fit.a) + ", rms = " + fmt17(fit.rms_residual) + ")";
  } catch (const FitDiverged& ex) {
    rep.note = std::string("no resolved jump: ") + ex.what();
  }
  if (rep.genuine) {
    MultiplierEstimate m =
        multiplier_estimate(rep.samples, rep.lambda, rs.p(), rep.fit->alpha, eigenbasis(a0, table.eigenvalues),
                            rep.eigen_index, opt);
    rep.gamma = m.gamma;
    rep.dispersion = m.dispersion;
    double scale = 0.0;
    for (const auto& s : rep.samples) {
      scale = std::max(scale, s.magnitude() * std::exp(rep.fit->a * std::pow(std::abs(s.z), -rep.fit->p_hat)));
    }
    rep.threshold = opt.sd_threshold * scale;
  }
  return rep;
}

/// One report per singular direction.
inline std::vector<StokesReport> build_all_reports(const Resummation& rs, const Matrix<cplx>& a0,
                                                   const StokesOptions& opt = {}) {
  std::vector<StokesReport> out;
  for (int l = 0; l < rs.directions().size(); ++l) out.push_back(build_report(rs, a0, l, opt));
  return out;
}

struct SdEvidence {
  int eigen_index = 0;
  cplx lambda;
  int witness_l = -1;  ///< -1 when no direction has a nonzero multiplier
  double best_gamma = 0.0;
};

struct SdResult {
  bool holds = false;
  std::vector<SdEvidence> evidence;
};

/// (SD): every eigenvalue has an associated direction with |gamma| above
/// the report's threshold.
inline SdResult check_SD(const std::vector<StokesReport>& reports, const SingularDirectionTable& table) {
  std::vector<bool> seen(static_cast<std::size_t>(table.size()), false);
  for (const auto& r : reports) {
    if (r.direction >= 0 && r.direction < table.size()) seen[static_cast<std::size_t>(r.direction)] = true;
  }
  for (int d = 0; d < table.size(); ++d) {
    if (!seen[static_cast<std::size_t>(d)]) {
      throw MissingDirection("no Stokes report for direction " + std::to_string(d) + " (theta = " +
                             fmt17(table.theta(d)) + ")");
    }
  }
  SdResult res;
  res.holds = true;
  for (std::size_t mu = 0; mu < table.eigenvalues.size(); ++mu) {
    SdEvidence ev;
    ev.eigen_index = static_cast<int>(mu);
    ev.lambda = table.eigenvalues[mu];
    for (const auto& r : reports) {
      if (r.eigen_index != static_cast<int>(mu)) continue;
      const double g = std::abs(r.gamma);
      ev.best_gamma = std::max(ev.best_gamma, g);
      if (r.genuine && g > r.threshold && g > 0.0 && ev.witness_l < 0) ev.witness_l = r.l;
    }
    if (ev.witness_l < 0) res.holds = false;
    res.evidence.push_back(ev);
  }
  return res;
}

struct ConjugatePair {
  int first = 0;   ///< direction indices
  int second = 0;
  cplx gamma_first;
  cplx gamma_second;
  double mismatch = 0.0;  ///< |gamma_first - conj(-gamma_second)| / |gamma_first|
};

/// Pairs directions theta and 2pi - theta of a real system. With the plus
/// side always at the larger argument, reflection z -> conj(z) reverses the
/// orientation, so the mirrored multiplier is compared as conj(-gamma).
inline std::vector<ConjugatePair> conjugate_pairing(const std::vector<StokesReport>& reports) {
  std::vector<ConjugatePair> out;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    for (std::size_t j = i; j < reports.size(); ++j) {
      if (angular_distance(reports[i].theta, -reports[j].theta) > 1e-9) continue;
      ConjugatePair pair;
      pair.first = reports[i].direction;
      pair.second = reports[j].direction;
      pair.gamma_first = reports[i].gamma;
      pair.gamma_second = reports[j].gamma;
      const double denom = std::abs(pair.gamma_first);
      pair.mismatch = denom > 0.0 ? std::abs(pair.gamma_first - std::conj(-pair.gamma_second)) / denom : 0.0;
      out.push_back(pair);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline json stokes_report_to_json(const StokesReport& r) {
  json samples = json::array();
  for (const auto& s : r.samples) {
    json delta = json::array();
    for (const auto& d : s.delta) delta.push_back(complex_to_json(d));
    samples.push_back({{"z", complex_to_json(s.z)}, {"delta", delta}, {"noise", s.noise}});
  }
  json j = {{"l", r.l},
            {"direction", {{"index", r.direction}, {"theta", r.theta}, {"eigen_index", r.eigen_index},
                           {"sheet", r.sheet}, {"lambda", complex_to_json(r.lambda)}}},
            {"samples", samples},
            {"resolved_samples", r.resolved},
            {"genuine", r.genuine},
            {"expected_rate", r.expected_rate},
            {"gamma", complex_to_json(r.gamma)},
            {"dispersion", r.dispersion},
            {"threshold", r.threshold},
            {"note", r.note}};
  if (r.fit) {
    j["fit"] = {{"a", r.fit->a},
                {"p_hat", r.fit->p_hat},
                {"c", r.fit->c},
                {"alpha", r.fit->alpha},
                {"alpha_rounded", std::round(2.0 * r.fit->alpha) / 2.0},
                {"rms_residual", r.fit->rms_residual},
                {"used", r.fit->used}};
  } else {
    j["fit"] = nullptr;
  }
  return j;
}

inline json sd_to_json(const SdResult& sd) {
  json ev = json::array();
  for (const auto& e : sd.evidence) {
    ev.push_back({{"eigen_index", e.eigen_index},
                  {"lambda", complex_to_json(e.lambda)},
                  {"witness_l", e.witness_l},
                  {"best_abs_gamma", e.best_gamma}});
  }
  return {{"holds", sd.holds}, {"evidence", ev}};
}

inline void write_stokes_csv(std::ostream& os, const std::vector<StokesReport>& reports) {
  os << "l,theta,eigen_index,genuine,a_hat,p_hat,alpha_hat,gamma_re,gamma_im,dispersion\n";
  for (const auto& r : reports) {
    os << r.l << ',' << fmt17(r.theta) << ',' << r.eigen_index << ',' << (r.genuine ? 1 : 0) << ','
       << (r.fit ? fmt17(r.fit->a) : "") << ',' << (r.fit ? fmt17(r.fit->p_hat) : "") << ','
       << (r.fit ? fmt17(r.fit->alpha) : "") << ',' << fmt17(r.gamma.real()) << ',' << fmt17(r.gamma.imag()) << ','
       << fmt17(r.dispersion) << '\n';
  }
}

inline void write_jump_csv(std::ostream& os, const std::vector<JumpSample>& samples) {
  os << "z_re,z_im,component,delta_re,delta_im,noise\n";
  for (const auto& s : samples) {
    for (std::size_t c = 0; c < s.delta.size(); ++c) {
      os << fmt17(s.z.real()) << ',' << fmt17(s.z.imag()) << ',' << c << ',' << fmt17(s.delta[c].real()) << ','
         << fmt17(s.delta[c].imag()) << ',' << fmt17(s.noise[c]) << '\n';
    }
  }
}

}  // namespace stokeslab
