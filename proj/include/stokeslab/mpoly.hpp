#pragma once

// Sparse multivariate polynomials with an optional truncation predicate. Used
// for the right-hand sides of ODE systems, the formal flow B(z, x, w) and the
// probe functions f(x, z_11, ..., z_rn).

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stokeslab/errors.hpp"
#include "stokeslab/scalar.hpp"
#include "stokeslab/series.hpp"

namespace stokeslab {

using Exponents = std::vector<int>;

/// Returns true for monomials that should be kept.
using Truncation = std::function<bool(const Exponents&)>;

template <typename T>
class MPoly {
 public:
  MPoly() = default;
  explicit MPoly(int nvars) : nvars_(nvars) {
    if (nvars < 0) throw ValidationError("negative variable count");
  }

  static MPoly constant(int nvars, const T& c) {
    MPoly p(nvars);
    p.add_term(Exponents(static_cast<std::size_t>(nvars), 0), c);
    return p;
  }

  static MPoly variable(int nvars, int index, const T& c = T(1)) {
    MPoly p(nvars);
    Exponents e(static_cast<std::size_t>(nvars), 0);
    e.at(static_cast<std::size_t>(index)) = 1;
    p.add_term(std::move(e), c);
    return p;
  }

  int nvars() const { return nvars_; }
  const std::map<Exponents, T>& terms() const { return terms_; }
  bool is_zero_poly() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  void add_term(Exponents e, const T& c) {
    if (static_cast<int>(e.size()) != nvars_) {
      throw ValidationError("monomial has " + std::to_string(e.size()) + " exponents, expected " +
                            std::to_string(nvars_));
    }
    for (int v : e) {
      if (v < 0) throw ValidationError("negative exponent in monomial");
    }
    if (is_zero(c)) return;
    auto [it, inserted] = terms_.try_emplace(std::move(e), c);
    if (!inserted) {
      it->second += c;
      if (is_zero(it->second)) terms_.erase(it);
    }
  }

  T coeff(const Exponents& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? T(0) : it->second;
  }

  int total_degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, std::accumulate(e.begin(), e.end(), 0));
    return d;
  }

  MPoly truncated(const Truncation& keep) const {
    if (!keep) return *this;
    MPoly r(nvars_);
    for (const auto& [e, c] : terms_) {
      if (keep(e)) r.terms_.emplace(e, c);
    }
    return r;
  }

  MPoly operator-() const {
    MPoly r(nvars_);
    for (const auto& [e, c] : terms_) r.terms_.emplace(e, -c);
    return r;
  }

  friend MPoly operator+(const MPoly& a, const MPoly& b) {
    check_same(a, b);
    MPoly r = a;
    for (const auto& [e, c] : b.terms_) r.add_term(e, c);
    return r;
  }
  friend MPoly operator-(const MPoly& a, const MPoly& b) { return a + (-b); }
  friend MPoly operator*(const T& s, const MPoly& a) {
    MPoly r(a.nvars_);
    if (is_zero(s)) return r;
    for (const auto& [e, c] : a.terms_) r.terms_.emplace(e, s * c);
    return r;
  }
  friend MPoly operator*(const MPoly& a, const MPoly& b) { return multiply(a, b, Truncation{}); }

  MPoly& operator+=(const MPoly& o) { return *this = *this + o; }

  /// Product keeping only monomials accepted by `keep`. The predicate must be
  /// monotone (if a monomial is dropped so is every multiple of it).
  static MPoly multiply(const MPoly& a, const MPoly& b, const Truncation& keep) {
    check_same(a, b);
    MPoly r(a.nvars_);
    Exponents e(static_cast<std::size_t>(a.nvars_));
    for (const auto& [ea, ca] : a.terms_) {
      for (const auto& [eb, cb] : b.terms_) {
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
        if (keep && !keep(e)) continue;
        r.add_term(e, ca * cb);
      }
    }
    return r;
  }

  static MPoly power(const MPoly& a, int k, const Truncation& keep) {
    MPoly result = constant(a.nvars_, T(1)).truncated(keep);
    for (int i = 0; i < k; ++i) result = multiply(result, a, keep);
    return result;
  }

  /// Point evaluation with complex arguments.
  cplx evaluate(std::span<const cplx> point) const {
    if (static_cast<int>(point.size()) != nvars_) throw ValidationError("evaluation point has wrong dimension");
    cplx acc(0.0, 0.0);
    for (const auto& [e, c] : terms_) {
      cplx m = to_cplx(c);
      for (int i = 0; i < nvars_; ++i) {
        for (int k = 0; k < e[static_cast<std::size_t>(i)]; ++k) m *= point[static_cast<std::size_t>(i)];
      }
      acc += m;
    }
    return acc;
  }

  /// Replace every variable by a univariate series; result has order `order`.
  TruncatedSeries<T> evaluate(std::span<const TruncatedSeries<T>> args, int order) const {
    if (static_cast<int>(args.size()) != nvars_) throw ValidationError("substitution has wrong dimension");
    PowerCache<TruncatedSeries<T>> cache(args.size());
    TruncatedSeries<T> acc(order);
    for (const auto& [e, c] : terms_) {
      TruncatedSeries<T> m = TruncatedSeries<T>::constant(c, order);
      for (std::size_t i = 0; i < e.size(); ++i) {
        if (e[i] == 0) continue;
        m = m * cache.get(i, e[i], [&] { return args[i].truncated(order); },
                          [&](const auto& x, const auto& y) { return x * y; });
      }
      acc += m;
    }
    return acc;
  }

  /// Replace every variable by a polynomial in another variable set.
  MPoly substitute(std::span<const MPoly> images, const Truncation& keep) const {
    if (static_cast<int>(images.size()) != nvars_) throw ValidationError("substitution has wrong dimension");
    const int out_vars = images.empty() ? 0 : images.front().nvars();
    PowerCache<MPoly> cache(images.size());
    MPoly acc(out_vars);
    for (const auto& [e, c] : terms_) {
      MPoly m = constant(out_vars, c).truncated(keep);
      for (std::size_t i = 0; i < e.size() && !m.is_zero_poly(); ++i) {
        if (e[i] == 0) continue;
        m = multiply(m, cache.get(i, e[i], [&] { return images[i].truncated(keep); },
                                  [&](const auto& x, const auto& y) { return multiply(x, y, keep); }),
                     keep);
      }
      acc += m;
    }
    return acc;
  }

  template <typename To>
  MPoly<To> convert() const {
    MPoly<To> r(nvars_);
    for (const auto& [e, c] : terms_) {
      if constexpr (std::is_same_v<To, T>) {
        r.add_term(e, c);
      } else {
        r.add_term(e, from_cplx<To>(to_cplx(c)));
      }
    }
    return r;
  }

  friend bool operator==(const MPoly& a, const MPoly& b) { return a.nvars_ == b.nvars_ && a.terms_ == b.terms_; }

 private:
  template <typename V>
  struct PowerCache {
    explicit PowerCache(std::size_t n) : powers(n) {}
    template <typename Base, typename Mul>
    const V& get(std::size_t var, int k, Base&& base, Mul&& mul) {
      auto& list = powers[var];
      if (list.empty()) list.push_back(base());
      while (static_cast<int>(list.size()) < k) list.push_back(mul(list.back(), list.front()));
      return list[static_cast<std::size_t>(k - 1)];
    }
    std::vector<std::vector<V>> powers;
  };

  static void check_same(const MPoly& a, const MPoly& b) {
    if (a.nvars_ != b.nvars_) throw ValidationError("polynomials over different variable sets");
  }

  int nvars_ = 0;
  std::map<Exponents, T> terms_;
};

/// Keep monomials whose exponent of variable i is at most caps[i] (negative
/// cap = unbounded).
inline Truncation per_variable_caps(std::vector<int> caps) {
  return [caps = std::move(caps)](const Exponents& e) {
    for (std::size_t i = 0; i < e.size() && i < caps.size(); ++i) {
      if (caps[i] >= 0 && e[i] > caps[i]) return false;
    }
    return true;
  };
}

/// Keep monomials whose total degree over variables [first, last) is at most
/// `max_degree`, combined with an inner predicate.
inline Truncation group_degree_cap(int first, int last, int max_degree, Truncation inner = {}) {
  return [=](const Exponents& e) {
    int d = 0;
    for (int i = first; i < last; ++i) d += e[static_cast<std::size_t>(i)];
    if (d > max_degree) return false;
    return inner ? inner(e) : true;
  };
}

}  // namespace stokeslab
