#pragma once

// JSON and CSV surfaces: series as [[re, im], ...], system definitions,
// probe specs and small formatting helpers shared by the CLI.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stokeslab/errors.hpp"
#include "stokeslab/mpoly.hpp"
#include "stokeslab/odesys.hpp"
#include "stokeslab/scalar.hpp"
#include "stokeslab/series.hpp"

namespace stokeslab {

using json = nlohmann::json;

inline json complex_to_json(cplx c) { return json::array({c.real(), c.imag()}); }

inline cplx complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ValidationError("complex number must be [re, im], got " + j.dump());
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
json series_to_json(const TruncatedSeries<T>& s) {
  json out = json::array();
  for (const auto& c : s.coeffs()) out.push_back(complex_to_json(to_cplx(c)));
  return out;
}

inline TruncatedSeries<cplx> series_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ValidationError("series must be a non-empty array of [re, im] pairs");
  std::vector<cplx> coeffs;
  coeffs.reserve(j.size());
  for (const auto& c : j) coeffs.push_back(complex_from_json(c));
  return TruncatedSeries<cplx>(std::move(coeffs));
}

template <typename T>
json series_vec_to_json(const SeriesVec<T>& v) {
  json out = json::array();
  for (const auto& c : v) out.push_back(series_to_json(c));
  return out;
}

// ---------------------------------------------------------------------------
// System definitions:
//   {"p": int, "r": int,
//    "terms": [{"x_exp": int, "y_exps": [int...], "coeff": [re, im],
//               "component": int}...]}
// "component" (0-based equation index) may be omitted when r == 1.

inline OdeSystem<cplx> system_from_json(const json& j) {
  try {
    const int p = j.at("p").get<int>();
    const int r = j.at("r").get<int>();
    if (r < 1) throw InvalidSystem("r must be >= 1");
    std::vector<MPoly<cplx>> rhs(static_cast<std::size_t>(r), MPoly<cplx>(r + 1));
    for (const auto& t : j.at("terms")) {
      const int comp = t.contains("component") ? t.at("component").get<int>() : 0;
      if (comp < 0 || comp >= r) throw InvalidSystem("term component out of range");
      if (!t.contains("component") && r != 1) throw InvalidSystem("terms need a \"component\" field when r > 1");
      Exponents e;
      e.push_back(t.at("x_exp").get<int>());
      const auto ys = t.at("y_exps").get<std::vector<int>>();
      if (static_cast<int>(ys.size()) != r) throw InvalidSystem("y_exps must have r entries");
      e.insert(e.end(), ys.begin(), ys.end());
      rhs[static_cast<std::size_t>(comp)].add_term(std::move(e), complex_from_json(t.at("coeff")));
    }
    return OdeSystem<cplx>(p, r, std::move(rhs));
  } catch (const json::exception& ex) {
    throw InvalidSystem(std::string("malformed system JSON: ") + ex.what());
  }
}

template <typename T>
json system_to_json(const OdeSystem<T>& sys) {
  json terms = json::array();
  for (int i = 0; i < sys.r(); ++i) {
    for (const auto& [e, c] : sys.rhs(i).terms()) {
      terms.push_back({{"x_exp", e[0]},
                       {"y_exps", std::vector<int>(e.begin() + 1, e.end())},
                       {"coeff", complex_to_json(to_cplx(c))},
                       {"component", i}});
    }
  }
  return {{"p", sys.p()}, {"r", sys.r()}, {"terms", terms}};
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw ValidationError("invalid JSON in " + path.string() + ": " + ex.what());
  }
}

inline OdeSystem<cplx> load_system(const std::filesystem::path& path) {
  return system_from_json(read_json_file(path));
}

/// %.17g, the fixed format for every floating value written to reports.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Rewrite every floating-point number in a JSON document as a %.17g
/// literal so reports are byte-identical across runs and platforms.
inline std::string dump_fixed(const json& j, int indent = 2) {
  std::ostringstream os;
  std::function<void(const json&, int)> emit = [&](const json& v, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
    if (v.is_number_float()) {
      double d = v.get<double>();
      if (std::isfinite(d)) {
        os << fmt17(d);
      } else {
        os << "null";
      }
    } else if (v.is_object()) {
      if (v.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad << json(it.key()).dump() << ": ";
        emit(it.value(), depth + 1);
      }
      os << '\n' << close_pad << '}';
    } else if (v.is_array()) {
      if (v.empty()) {
        os << "[]";
        return;
      }
      os << '[';
      bool first = true;
      for (const auto& e : v) {
        if (!first) os << ", ";
        first = false;
        emit(e, depth + 1);
      }
      os << ']';
    } else {
      os << v.dump();
    }
  };
  emit(j, 0);
  os << '\n';
  return os.str();
}

}  // namespace stokeslab
