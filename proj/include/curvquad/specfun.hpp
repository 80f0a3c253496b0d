// specfun.hpp
//
// Special functions for the analytic cavity solution: Legendre polynomials,
// spherical Bessel/Neumann/Hankel functions with derivatives, and zonal
// (m = 0) spherical harmonics in the orthonormal convention.
//
// j_n decays and y_n grows factorially in n at fixed argument, far past the
// double range for the orders the cavity series needs, so the table keeps a
// split mantissa/exponent representation internally; physically meaningful
// combinations are always j-times-y products of comparable magnitude.
#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace curvquad {

inline double legendre_p(int n, double x) {
  if (n < 0) throw std::domain_error("legendre_p: negative order");
  if (n == 0) return 1.0;
  double p0 = 1.0, p1 = x;
  for (int j = 2; j <= n; ++j) {
    const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

// int_0^1 P_n(x) dx = (P_{n-1}(0) - P_{n+1}(0)) / (2n+1); the zonal moment of
// a hemisphere step profile.
inline double legendre_p01_integral(int n) {
  if (n < 0) throw std::domain_error("legendre_p01_integral: negative order");
  if (n == 0) return 1.0;
  return (legendre_p(n - 1, 0.0) - legendre_p(n + 1, 0.0)) / (2 * n + 1);
}

// Y_n^0(theta) = sqrt((2n+1)/4pi) P_n(cos theta).
inline double sph_harmonic_n0(int n, double theta) {
  return std::sqrt((2 * n + 1) / (4.0 * M_PI)) * legendre_p(n, std::cos(theta));
}

// A real number m * 2^e with |m| kept near [0.5, 1) by renormalization.
struct ScaledReal {
  double m = 0.0;
  long e = 0;

  static ScaledReal from(double v) {
    ScaledReal s;
    if (v == 0.0 || !std::isfinite(v)) {
      s.m = v;
      return s;
    }
    int ex;
    s.m = std::frexp(v, &ex);
    s.e = ex;
    return s;
  }
  ScaledReal normalized() const {
    if (m == 0.0 || !std::isfinite(m)) return {m, 0};
    int ex;
    ScaledReal s;
    s.m = std::frexp(m, &ex);
    s.e = e + ex;
    return s;
  }
  double to_double() const {
    if (m == 0.0 || !std::isfinite(m)) return m;
    if (e > 2000) return m > 0 ? HUGE_VAL : -HUGE_VAL;
    if (e < -2000) return 0.0;
    return std::ldexp(m, static_cast<int>(e));
  }
  friend ScaledReal operator*(const ScaledReal& a, const ScaledReal& b) {
    return ScaledReal{a.m * b.m, a.e + b.e}.normalized();
  }
  friend ScaledReal operator*(double a, const ScaledReal& b) {
    return ScaledReal{a * b.m, b.e}.normalized();
  }
  friend ScaledReal operator-(const ScaledReal& a, const ScaledReal& b) {
    if (a.m == 0.0) return ScaledReal{-b.m, b.e};
    if (b.m == 0.0) return a;
    const long e = std::max(a.e, b.e);
    const double am = (a.e - e) < -100 ? 0.0 : std::ldexp(a.m, static_cast<int>(a.e - e));
    const double bm = (b.e - e) < -100 ? 0.0 : std::ldexp(b.m, static_cast<int>(b.e - e));
    return ScaledReal{am - bm, e}.normalized();
  }
};

// j_n, y_n and derivatives for orders 0..n_max at fixed x > 0. j_n by Miller
// downward recurrence normalized at j_0 = sin(x)/x, y_n by upward recurrence,
// derivatives from f'_n = f_{n-1} - (n+1)/x f_n (f'_0 = -f_1).
class SphericalBesselTable {
 public:
  SphericalBesselTable(int n_max, double x) : n_max_(n_max), x_(x) {
    if (!(x > 0)) throw std::domain_error("sph_bessel: x must be positive");
    if (n_max < 0 || n_max > 200) throw std::domain_error("sph_bessel: n_max out of range");
    build();
  }

  int n_max() const { return n_max_; }
  double x() const { return x_; }

  double j(int n) const { return js_[check(n)].to_double(); }
  double y(int n) const { return ys_[check(n)].to_double(); }
  double jp(int n) const { return jps_[check(n)].to_double(); }
  double yp(int n) const { return yps_[check(n)].to_double(); }
  std::complex<double> h1(int n) const { return {j(n), y(n)}; }
  std::complex<double> h1p(int n) const { return {jp(n), yp(n)}; }

  const ScaledReal& j_scaled(int n) const { return js_[check(n)]; }
  const ScaledReal& y_scaled(int n) const { return ys_[check(n)]; }
  const ScaledReal& jp_scaled(int n) const { return jps_[check(n)]; }
  const ScaledReal& yp_scaled(int n) const { return yps_[check(n)]; }

 private:
  int check(int n) const {
    if (n < 0 || n > n_max_) throw std::domain_error("sph_bessel: order out of range");
    return n;
  }

  void build() {
    const int n = n_max_;
    js_.resize(n + 1);
    ys_.resize(n + 1);
    jps_.resize(n + 1);
    yps_.resize(n + 1);

    // downward Miller recurrence with rescaling; raw[k] = g_k * 2^{S_k}
    const int start = n + std::max(20, static_cast<int>(std::ceil(x_)));
    std::vector<double> raw(n + 1, 0.0);
    std::vector<long> shift(n + 1, 0);
    double fkp1 = 0.0, fk = 1e-280;
    long S = 0;
    for (int k = start; k >= 0; --k) {
      if (k <= n) {
        raw[k] = fk;
        shift[k] = S;
      }
      const double fkm1 = ((2.0 * k + 1.0) / x_) * fk - fkp1;
      fkp1 = fk;
      fk = fkm1;
      if (std::abs(fk) > 1e280) {
        const double c = 0x1p-600;
        fk *= c;
        fkp1 *= c;
        S -= 600;
      }
    }
    // j_k = raw[k] * 2^{-S_k} * j_a / (raw[a] * 2^{-S_a}); the anchor a is
    // whichever of j_0, j_1 is farther from a zero of the closed form
    const double j0 = std::sin(x_) / x_;
    const double j1 = std::sin(x_) / (x_ * x_) - std::cos(x_) / x_;
    const int a = (n >= 1 && std::abs(j1) > std::abs(j0)) ? 1 : 0;
    const double ja = (a == 0) ? j0 : j1;
    const ScaledReal norm =
        ScaledReal::from(ja) * ScaledReal{1.0 / raw[a], shift[a]}.normalized();
    for (int k = 0; k <= n; ++k)
      js_[k] = ScaledReal{raw[k], -shift[k]}.normalized() * norm;
    js_[0] = ScaledReal::from(j0);
    if (n >= 1) js_[1] = ScaledReal::from(j1);

    // upward recurrence for y with rescaling
    ScaledReal ym1 = ScaledReal::from(-std::cos(x_) / x_);  // y_0
    ys_[0] = ym1;
    if (n >= 1) {
      ScaledReal yc = ScaledReal::from(-std::cos(x_) / (x_ * x_) - std::sin(x_) / x_);
      ys_[1] = yc;
      for (int k = 2; k <= n; ++k) {
        const ScaledReal yn = ((2.0 * k - 1.0) / x_) * yc - ym1;
        ym1 = yc;
        yc = yn;
        ys_[k] = yc;
      }
    }

    jps_[0] = (n >= 1) ? ScaledReal{-js_[1].m, js_[1].e} : ScaledReal::from(std::cos(x_) / x_ - std::sin(x_) / (x_ * x_));
    yps_[0] = (n >= 1) ? ScaledReal{-ys_[1].m, ys_[1].e}
                       : ScaledReal::from(std::sin(x_) / x_ + std::cos(x_) / (x_ * x_));
    for (int k = 1; k <= n; ++k) {
      jps_[k] = js_[k - 1] - ((k + 1.0) / x_) * js_[k];
      yps_[k] = ys_[k - 1] - ((k + 1.0) / x_) * ys_[k];
    }
  }

  int n_max_;
  double x_;
  std::vector<ScaledReal> js_, ys_, jps_, yps_;
};

inline SphericalBesselTable sph_bessel(int n_max, double x) {
  return SphericalBesselTable(n_max, x);
}

}  // namespace curvquad
