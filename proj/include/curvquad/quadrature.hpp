// quadrature.hpp
//
// Quadrature rules used throughout: 1D Gauss-Legendre, Duffy-collapsed rules
// on the reference triangle, polar rules on a flat surrogate triangle (with
// an optional sinh radial transform for near-singular integrands), and a
// globally adaptive Gauss-7/Kronrod-15 integrator with a nested 2D variant.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <queue>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "geometry.hpp"

namespace curvquad {

struct Rule1D {
  std::vector<double> nodes;    // in (-1, 1)
  std::vector<double> weights;  // sum to 2
};

// Gauss-Legendre rule by Newton iteration on P_n from Chebyshev initial
// guesses; exact for polynomials of degree 2n-1.
inline Rule1D gauss_legendre(int n) {
  if (n < 1 || n > 128) throw std::domain_error("gauss_legendre: n out of range");
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    int polish = 2;  // extra Newton steps after reaching roundoff
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15 && --polish < 0) break;
    }
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  // enforce exact symmetry about 0
  for (int i = 0; i < n / 2; ++i) {
    const double xs = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    rule.nodes[i] = -xs;
    rule.nodes[n - 1 - i] = xs;
    const double ws = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
    rule.weights[i] = rule.weights[n - 1 - i] = ws;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

// Same rule shifted to [0,1] (weights sum to 1).
inline Rule1D gauss_legendre01(int n) {
  Rule1D r = gauss_legendre(n);
  for (auto& x : r.nodes) x = 0.5 * (x + 1.0);
  for (auto& w : r.weights) w *= 0.5;
  return r;
}

struct Rule2D {
  std::vector<Vec2> nodes;      // inside the open reference triangle
  std::vector<double> weights;  // sum to 1/2
  int degree = 0;               // declared polynomial exactness
};

// Tensor Gauss-Legendre on the unit square collapsed onto the triangle by
// the Duffy map (u,v) = (x, y(1-x)), Jacobian (1-x). An order-n rule has
// n^2 nodes and integrates bivariate polynomials of total degree 2n-2.
inline Rule2D triangle_rule(int order) {
  if (order < 1) throw std::domain_error("triangle_rule: order must be >= 1");
  const Rule1D g = gauss_legendre01(order);
  Rule2D rule;
  rule.degree = 2 * order - 2;
  rule.nodes.reserve(order * order);
  rule.weights.reserve(order * order);
  for (int i = 0; i < order; ++i) {
    for (int j = 0; j < order; ++j) {
      const double x = g.nodes[i], y = g.nodes[j];
      rule.nodes.emplace_back(x, y * (1.0 - x));
      rule.weights.push_back(g.weights[i] * g.weights[j] * (1.0 - x));
    }
  }
  return rule;
}

struct PolarRule {
  Vec2 origin;                  // polar origin in reference coordinates
  int wedge_count = 0;          // non-degenerate wedges kept (<= 3)
  std::vector<Vec2> nodes;      // reference coordinates
  std::vector<double> weights;  // integrate du dv; sum to 1/2
};

// Polar rule on the flat surrogate triangle through `verts`. The origin is
// the affine image of origin_ref; the surrogate splits into at most three
// wedges (origin + edge), each integrated with Gauss-Legendre in theta and
// in R with the radial Jacobian folded into the weights. Wedges whose Rmax
// varies strongly across their angular span are subdivided in theta. When
// near_scale > 0 the radial variable is substituted R = near_scale*sinh(t),
// which resolves integrand layers of width ~near_scale at the origin.
inline PolarRule polar_rule(const std::array<Vec3, 3>& verts, const Vec2& origin_ref,
                            int order, double near_scale = 0.0) {
  if (!in_reference_triangle(origin_ref.x(), origin_ref.y()))
    throw std::domain_error("polar_rule: origin outside reference triangle");
  if (order < 1) throw std::domain_error("polar_rule: order must be >= 1");
  const Vec3 E1 = verts[1] - verts[0], E2 = verts[2] - verts[0];
  const Vec3 cr = E1.cross(E2);
  const double area2 = cr.norm();  // 2*area of the surrogate
  if (!(area2 > 0)) throw std::domain_error("polar_rule: degenerate surrogate");
  const Vec3 ex = E1.normalized();
  const Vec3 ez = cr / area2;
  const Vec3 ey = ez.cross(ex);
  const Vec3 O3 = verts[0] + origin_ref.x() * E1 + origin_ref.y() * E2;
  std::array<Vec2, 3> c;  // corner coordinates in the surrogate plane
  for (int i = 0; i < 3; ++i)
    c[i] = Vec2((verts[i] - O3).dot(ex), (verts[i] - O3).dot(ey));
  Eigen::Matrix2d M;  // metric for mapping plane points back to (u,v)
  M << E1.squaredNorm(), E1.dot(E2), E1.dot(E2), E2.squaredNorm();
  const Eigen::Matrix2d Minv = M.inverse();

  const Rule1D g = gauss_legendre01(order);
  PolarRule rule;
  rule.origin = origin_ref;

  for (int a = 0; a < 3; ++a) {
    const Vec2 A = c[a], B = c[(a + 1) % 3];
    const double cross2 = A.x() * B.y() - A.y() * B.x();
    if (0.5 * std::abs(cross2) < 1e-14 * area2) continue;  // degenerate wedge
    ++rule.wedge_count;
    const double tha = std::atan2(A.y(), A.x());
    double dth = std::atan2(B.y(), B.x()) - tha;
    while (dth <= -M_PI) dth += 2.0 * M_PI;
    while (dth > M_PI) dth -= 2.0 * M_PI;

    auto rmax_at = [&](double th) {
      const Vec2 d(std::cos(th), std::sin(th));
      const Vec2 e = B - A;
      const double denom = d.x() * e.y() - d.y() * e.x();
      return (A.x() * e.y() - A.y() * e.x()) / denom;
    };

    // split the angular span until Rmax is tame on each piece
    std::vector<std::pair<double, double>> spans{{0.0, 1.0}};
    for (int pass = 0; pass < 6; ++pass) {
      std::vector<std::pair<double, double>> next;
      bool changed = false;
      for (auto [s0, s1] : spans) {
        const double r0 = rmax_at(tha + dth * s0), r1 = rmax_at(tha + dth * s1);
        const double ratio =
            std::max(r0, r1) / std::max(1e-300, std::min(r0, r1));
        if ((ratio > 3.0 || std::abs(dth) * (s1 - s0) > 0.8 * M_PI) && (s1 - s0) > 1e-3) {
          next.emplace_back(s0, 0.5 * (s0 + s1));
          next.emplace_back(0.5 * (s0 + s1), s1);
          changed = true;
        } else {
          next.emplace_back(s0, s1);
        }
      }
      spans = std::move(next);
      if (!changed) break;
    }

    for (auto [s0, s1] : spans) {
      const double th0 = tha + dth * s0, span = dth * (s1 - s0);
      for (int ti = 0; ti < order; ++ti) {
        const double th = th0 + span * g.nodes[ti];
        const double wth = std::abs(span) * g.weights[ti];
        const Vec2 d(std::cos(th), std::sin(th));
        const double rmax = rmax_at(th);
        auto push_node = [&](double R, double wR) {
          const Vec3 P = O3 + R * d.x() * ex + R * d.y() * ey;
          const Vec2 rhs((P - verts[0]).dot(E1), (P - verts[0]).dot(E2));
          const Vec2 uv = Minv * rhs;
          rule.nodes.push_back(uv);
          rule.weights.push_back(R * wth * wR / area2);
        };
        if (near_scale > 0.0 && near_scale < 0.1 * rmax) {
          const double T = std::asinh(rmax / near_scale);
          for (int ri = 0; ri < order; ++ri) {
            const double t = T * g.nodes[ri];
            push_node(near_scale * std::sinh(t),
                      near_scale * std::cosh(t) * T * g.weights[ri]);
          }
        } else {
          for (int ri = 0; ri < order; ++ri)
            push_node(rmax * g.nodes[ri], rmax * g.weights[ri]);
        }
      }
    }
  }
  return rule;
}

template <class T>
struct AdaptiveResult {
  T value{};
  double error = 0.0;  // estimated absolute error
  bool converged = false;
};

namespace detail {

template <class T>
double mag(const T& v) {
  using std::abs;
  return abs(v);
}

// Gauss-7 / Kronrod-15 node and weight constants (positive half; symmetric).
// Values match the published 15-digit tables; the test suite verifies the
// degree-13 / degree-22 exactness and interlacing properties.
struct GK15 {
  static constexpr std::array<double, 8> xgk = {
      0.991455371120813, 0.949107912342759, 0.864864423359769,
      0.741531185599394, 0.586087235467691, 0.405845151377397,
      0.207784955007898, 0.000000000000000};
  static constexpr std::array<double, 8> wgk = {
      0.022935322010529, 0.063092092629979, 0.104790010322250,
      0.140653259715525, 0.169004726639267, 0.190350578064785,
      0.204432940075298, 0.209482141084728};
  static constexpr std::array<double, 4> wg = {
      0.129484966168870, 0.279705391489277, 0.381830050505119,
      0.417959183673469};
};

template <class F, class T>
void gk15_panel(F&& f, double a, double b, T& kronrod, double& err) {
  const double hl = 0.5 * (b - a), c = 0.5 * (a + b);
  std::array<T, 15> fv;
  for (int i = 0; i < 7; ++i) {
    fv[i] = f(c - hl * GK15::xgk[i]);
    fv[14 - i] = f(c + hl * GK15::xgk[i]);
  }
  fv[7] = f(c);
  T resk = GK15::wgk[7] * fv[7];
  double resabs = GK15::wgk[7] * mag(fv[7]);
  for (int i = 0; i < 7; ++i) {
    resk += GK15::wgk[i] * (fv[i] + fv[14 - i]);
    resabs += GK15::wgk[i] * (mag(fv[i]) + mag(fv[14 - i]));
  }
  // Gauss-7 uses the odd-index Kronrod nodes
  T resg = GK15::wg[3] * fv[7];
  for (int i = 0; i < 3; ++i) resg += GK15::wg[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
  kronrod = resk * hl;
  const double eps = std::numeric_limits<double>::epsilon();
  err = std::max(mag(resk - resg), 50.0 * eps * resabs) * std::abs(hl);
}

}  // namespace detail

// Globally adaptive G7/K15 integration of f over [a,b]: bisect the interval
// with the largest Kronrod error estimate until the total estimate drops
// below max(abs_tol, rel_tol*|I|) or the subdivision budget is exhausted.
template <class F, class T = std::invoke_result_t<F, double>>
AdaptiveResult<T> adaptive_gk(F&& f, double a, double b, double abs_tol,
                              double rel_tol = 0.0, int max_subdiv = 5000,
                              long long* eval_budget = nullptr) {
  struct Panel {
    double a, b, err;
    T val;
    bool operator<(const Panel& o) const { return err < o.err; }
  };
  auto make_panel = [&](double lo, double hi) {
    Panel p;
    p.a = lo;
    p.b = hi;
    detail::gk15_panel(f, lo, hi, p.val, p.err);
    if (eval_budget) *eval_budget -= 15;
    return p;
  };
  std::priority_queue<Panel> q;
  q.push(make_panel(a, b));
  T total = q.top().val;
  double total_err = q.top().err;
  auto done = [&] { return total_err <= std::max(abs_tol, rel_tol * detail::mag(total)); };
  int splits = 0;
  while (!done()) {
    if (splits >= max_subdiv || (eval_budget && *eval_budget <= 0)) break;
    const Panel worst = q.top();
    if (!(worst.b - worst.a > 256.0 * std::numeric_limits<double>::min())) break;
    q.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Panel left = make_panel(worst.a, mid), right = make_panel(mid, worst.b);
    total += left.val + right.val - worst.val;
    total_err += left.err + right.err - worst.err;
    q.push(left);
    q.push(right);
    ++splits;
  }
  return {total, total_err, done()};
}

// Nested adaptive integration over the reference triangle: outer in u,
// inner in v over [0, 1-u]. tol is relative to the integral of |f|; a
// coarse Duffy rule provides that scale. The evaluation budget bounds the
// total inner work.
template <class F, class T = std::invoke_result_t<F, double, double>>
AdaptiveResult<T> reference_integral_2d(F&& f, double tol,
                                        long long max_evals = 100'000'000) {
  if (!(tol >= 1e-13)) throw std::domain_error("reference_integral_2d: tol too small");
  const Rule2D coarse = triangle_rule(15);
  double scale = 0.0;
  for (size_t i = 0; i < coarse.nodes.size(); ++i)
    scale += coarse.weights[i] * detail::mag(f(coarse.nodes[i].x(), coarse.nodes[i].y()));
  scale = std::max(scale, 1e-300);
  const double abs_outer = 0.5 * tol * scale;
  const double abs_inner = 0.2 * abs_outer;
  long long budget = max_evals;
  bool inner_ok = true;
  auto outer_f = [&](double u) -> T {
    auto res = adaptive_gk([&](double v) { return f(u, v); }, 0.0, 1.0 - u,
                           abs_inner, 1e-13, 4000, &budget);
    inner_ok = inner_ok && (res.converged || res.error <= 10.0 * abs_inner);
    return res.value;
  };
  auto res = adaptive_gk(outer_f, 0.0, 1.0, abs_outer, 0.0, 4000, &budget);
  res.converged = res.converged && inner_ok;
  return res;
}

}  // namespace curvquad
