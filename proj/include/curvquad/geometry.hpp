// geometry.hpp
//
// Curved triangular boundary elements over the reference triangle
// {0 <= u, 0 <= v, u+v <= 1} and their pointwise differential geometry:
// samples with exact first/second derivatives, local frames relative to an
// evaluation point, fundamental forms, normal curvatures, closest-point
// projection, normal-bundle range scans, parametrization flip and midpoint
// subdivision.
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace curvquad {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

inline bool in_reference_triangle(double u, double v, double tol = 1e-12) {
  return u >= -tol && v >= -tol && u + v <= 1.0 + tol;
}

// Euclidean projection of (u,v) onto the closed reference triangle.
inline Vec2 clamp_to_reference_triangle(double u, double v) {
  if (u >= 0.0 && v >= 0.0 && u + v <= 1.0) return {u, v};
  u = std::max(u, 0.0);
  v = std::max(v, 0.0);
  if (u + v > 1.0) {
    const double t = 0.5 * (u + v - 1.0);
    u -= t;
    v -= t;
    if (u < 0.0) { u = 0.0; v = 1.0; }
    if (v < 0.0) { v = 0.0; u = 1.0; }
  }
  return {u, v};
}

// Position and derivatives of the parametrization at one (u,v).
struct GeometrySample {
  Vec3 r;                    // r_q(u,v)
  Vec3 r_u, r_v;             // first partials
  Vec3 r_uu, r_uv, r_vv;     // second partials
  Vec3 normal;               // (r_u x r_v)/J
  double jac;                // J = |r_u x r_v|
};

// Geometry of an evaluation point p relative to a surface sample q: the
// in-tangent-plane offset rho_vec = r_q - p + h n_q, its polar decomposition
// and the right-handed triad {rho_hat, rho_tilde, n}.
struct LocalFrame {
  Vec3 q;
  Vec3 n;
  double r;        // |q - p|
  double h;        // n . (p - q)
  double rho;
  Vec3 rho_vec;
  Vec3 rho_hat;
  Vec3 rho_tilde;  // n x rho_hat
};

struct FundamentalForms {
  double E, F, G;  // first form
  double e, f, g;  // second form
};

struct ClosestPointResult {
  double u = 0.0, v = 0.0;
  double dist = 0.0;
  bool converged = false;
  bool on_boundary = false;
};

struct HhatRange {
  double min = 1.0, max = -1.0;  // range of h/r over the element
  bool singular = false;         // a sampled point had r ~ 0
};

// A curved triangular patch. Three families are supported:
//   Flat       -- the affine triangle through three vertices,
//   Graph      -- (u, v, f(u,v)) with f a bivariate polynomial,
//   Spherical  -- central projection of a flat triangle onto a sphere,
//                 r_q = s * w/|w|, w = v1 + u(v2-v1) + v(v3-v1).
// Every element carries an affine domain reparametrization so that flips and
// Graph subdivisions stay inside the family with exact derivatives.
class Element {
 public:
  enum class Kind { Flat, Graph, Spherical };

  static Element flat(const Vec3& v1, const Vec3& v2, const Vec3& v3) {
    Element e;
    e.kind_ = Kind::Flat;
    e.p1_ = v1;
    e.e1_ = v2 - v1;
    e.e2_ = v3 - v1;
    return e;
  }

  // z = sum_{i,j} coeff(i,j) u^i v^j over the reference triangle.
  static Element graph(const Eigen::MatrixXd& coeff) {
    Element e;
    e.kind_ = Kind::Graph;
    e.coeff_ = coeff;
    return e;
  }

  // The benchmark patch z = sigma*((u-1/4)^2 + (v-1/4)^2).
  static Element paraboloid(double sigma) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(3, 3);
    c(0, 0) = sigma * 0.125;  // sigma*(1/16 + 1/16)
    c(1, 0) = -0.5 * sigma;
    c(0, 1) = -0.5 * sigma;
    c(2, 0) = sigma;
    c(0, 2) = sigma;
    return graph(c);
  }

  static Element spherical(double radius, const Vec3& v1, const Vec3& v2,
                           const Vec3& v3) {
    Element e;
    e.kind_ = Kind::Spherical;
    e.radius_ = radius;
    e.p1_ = v1;
    e.e1_ = v2 - v1;
    e.e2_ = v3 - v1;
    return e;
  }

  Kind kind() const { return kind_; }
  bool orientation_flipped() const { return flipped_; }
  double sphere_radius() const { return radius_; }

  GeometrySample sample(double u, double v) const {
    if (!in_reference_triangle(u, v))
      throw std::domain_error("Element::sample: (u,v) outside reference triangle");
    const Vec2 uv = dom_lin_ * Vec2(u, v) + dom_off_;
    GeometrySample base = sample_base(uv.x(), uv.y());
    GeometrySample s;
    const double a = dom_lin_(0, 0), b = dom_lin_(0, 1);
    const double c = dom_lin_(1, 0), d = dom_lin_(1, 1);
    s.r = base.r;
    s.r_u = a * base.r_u + c * base.r_v;
    s.r_v = b * base.r_u + d * base.r_v;
    s.r_uu = a * a * base.r_uu + 2 * a * c * base.r_uv + c * c * base.r_vv;
    s.r_uv = a * b * base.r_uu + (a * d + b * c) * base.r_uv + c * d * base.r_vv;
    s.r_vv = b * b * base.r_uu + 2 * b * d * base.r_uv + d * d * base.r_vv;
    const Vec3 cr = s.r_u.cross(s.r_v);
    s.jac = cr.norm();
    if (!(s.jac > 0.0))
      throw std::runtime_error("Element::sample: degenerate parametrization");
    s.normal = cr / s.jac;
    return s;
  }

  // Images of the reference-triangle corners under the current parametrization.
  std::array<Vec3, 3> vertices() const {
    return {sample_point(0.0, 0.0), sample_point(1.0, 0.0), sample_point(0.0, 1.0)};
  }

  // Maximum inter-vertex distance.
  double diameter() const {
    const auto v = vertices();
    return std::max({(v[0] - v[1]).norm(), (v[1] - v[2]).norm(), (v[2] - v[0]).norm()});
  }

  // r'_q(u,v) = r_q(v,u); reverses the normal.
  Element flipped() const {
    Element e = *this;
    Eigen::Matrix2d swap;
    swap << 0, 1, 1, 0;
    e.dom_lin_ = dom_lin_ * swap;
    e.flipped_ = !flipped_;
    return e;
  }

  // Midpoint 1-to-4 subdivision of the (u,v) domain. Children inherit
  // orientation; Flat and Spherical children are rebuilt in-family from the
  // child corner images, Graph children compose the affine domain map.
  std::array<Element, 4> subdivided() const {
    // child corner triples, counterclockwise in the current domain
    static const std::array<std::array<Vec2, 3>, 4> corners = {{
        {{{0.0, 0.0}, {0.5, 0.0}, {0.0, 0.5}}},
        {{{0.5, 0.0}, {1.0, 0.0}, {0.5, 0.5}}},
        {{{0.0, 0.5}, {0.5, 0.5}, {0.0, 1.0}}},
        {{{0.5, 0.5}, {0.0, 0.5}, {0.5, 0.0}}},
    }};
    std::array<Element, 4> out;
    for (int i = 0; i < 4; ++i) {
      const auto& tri = corners[i];
      if (kind_ == Kind::Graph) {
        Element child = *this;
        Eigen::Matrix2d lin;
        lin.col(0) = tri[1] - tri[0];
        lin.col(1) = tri[2] - tri[0];
        child.dom_off_ = dom_off_ + dom_lin_ * tri[0];
        child.dom_lin_ = dom_lin_ * lin;
        out[i] = child;
      } else {
        const Vec3 a = sample_point(tri[0].x(), tri[0].y());
        const Vec3 b = sample_point(tri[1].x(), tri[1].y());
        const Vec3 c = sample_point(tri[2].x(), tri[2].y());
        out[i] = (kind_ == Kind::Flat) ? flat(a, b, c) : spherical(radius_, a, b, c);
        out[i].flipped_ = flipped_;
      }
    }
    return out;
  }

 private:
  Vec3 sample_point(double u, double v) const {
    const Vec2 uv = dom_lin_ * Vec2(u, v) + dom_off_;
    return sample_base(uv.x(), uv.y()).r;
  }

  GeometrySample sample_base(double U, double V) const {
    GeometrySample s;
    s.r_uv.setZero();
    switch (kind_) {
      case Kind::Flat: {
        s.r = p1_ + U * e1_ + V * e2_;
        s.r_u = e1_;
        s.r_v = e2_;
        s.r_uu.setZero();
        s.r_uv.setZero();
        s.r_vv.setZero();
        break;
      }
      case Kind::Graph: {
        double f = 0, fu = 0, fv = 0, fuu = 0, fuv = 0, fvv = 0;
        for (int i = 0; i < coeff_.rows(); ++i) {
          for (int j = 0; j < coeff_.cols(); ++j) {
            const double c = coeff_(i, j);
            if (c == 0.0) continue;
            const double pu = ipow(U, i), pv = ipow(V, j);
            f += c * pu * pv;
            if (i >= 1) fu += c * i * ipow(U, i - 1) * pv;
            if (j >= 1) fv += c * j * pu * ipow(V, j - 1);
            if (i >= 2) fuu += c * i * (i - 1) * ipow(U, i - 2) * pv;
            if (i >= 1 && j >= 1) fuv += c * i * j * ipow(U, i - 1) * ipow(V, j - 1);
            if (j >= 2) fvv += c * j * (j - 1) * pu * ipow(V, j - 2);
          }
        }
        s.r = Vec3(U, V, f);
        s.r_u = Vec3(1, 0, fu);
        s.r_v = Vec3(0, 1, fv);
        s.r_uu = Vec3(0, 0, fuu);
        s.r_uv = Vec3(0, 0, fuv);
        s.r_vv = Vec3(0, 0, fvv);
        break;
      }
      case Kind::Spherical: {
        const Vec3 w = p1_ + U * e1_ + V * e2_;
        const double n = w.norm();
        const Vec3 wh = w / n;
        const double a1 = wh.dot(e1_), a2 = wh.dot(e2_);
        const double sn = radius_ / n, sn2 = radius_ / (n * n);
        s.r = radius_ * wh;
        s.r_u = sn * (e1_ - a1 * wh);
        s.r_v = sn * (e2_ - a2 * wh);
        s.r_uu = sn2 * (-2.0 * a1 * e1_ + (3.0 * a1 * a1 - e1_.squaredNorm()) * wh);
        s.r_uv = sn2 * (-a2 * e1_ - a1 * e2_ + (3.0 * a1 * a2 - e1_.dot(e2_)) * wh);
        s.r_vv = sn2 * (-2.0 * a2 * e2_ + (3.0 * a2 * a2 - e2_.squaredNorm()) * wh);
        break;
      }
    }
    return s;
  }

  static double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
  }

  Kind kind_ = Kind::Flat;
  Vec3 p1_ = Vec3::Zero(), e1_ = Vec3::UnitX(), e2_ = Vec3::UnitY();
  Eigen::MatrixXd coeff_;
  double radius_ = 1.0;
  Eigen::Matrix2d dom_lin_ = Eigen::Matrix2d::Identity();
  Vec2 dom_off_ = Vec2::Zero();
  bool flipped_ = false;
};

// Frame of an evaluation point p at a surface sample. When rho falls below
// rho_tiny the azimuthal direction is arbitrary; the tangent projection of
// r_u is used and downstream formulas take their rho -> 0 limits.
inline LocalFrame local_frame(const GeometrySample& s, const Vec3& p,
                              double rho_tiny = 0.0) {
  LocalFrame fr;
  fr.q = s.r;
  fr.n = s.normal;
  fr.r = (s.r - p).norm();
  fr.h = s.normal.dot(p - s.r);
  fr.rho_vec = s.r - p + fr.h * s.normal;
  fr.rho = fr.rho_vec.norm();
  if (fr.rho > std::max(rho_tiny, 1e-300)) {
    fr.rho_hat = fr.rho_vec / fr.rho;
  } else {
    Vec3 t = s.r_u - s.normal.dot(s.r_u) * s.normal;
    fr.rho_hat = t.normalized();
  }
  fr.rho_tilde = s.normal.cross(fr.rho_hat);
  return fr;
}

inline FundamentalForms fundamental_forms(const GeometrySample& s) {
  FundamentalForms ff;
  ff.E = s.r_u.dot(s.r_u);
  ff.F = s.r_u.dot(s.r_v);
  ff.G = s.r_v.dot(s.r_v);
  ff.e = s.r_uu.dot(s.normal);
  ff.f = s.r_uv.dot(s.normal);
  ff.g = s.r_vv.dot(s.normal);
  return ff;
}

// Normal curvature II(t,t)/I(t,t) for a tangent direction t, via the angle
// form: with pu = r_u.(n x t_hat), pv = r_v.(n x t_hat),
//   kappa_N = (e pv^2 + g pu^2 - 2 f pu pv) / (EG - F^2).
// Directions with a normal component above 1e-10 (relative) are rejected;
// smaller ones are projected onto the tangent plane.
inline double normal_curvature(const GeometrySample& s, const Vec3& t) {
  const double tn = t.norm();
  if (!(tn > 0.0)) throw std::domain_error("normal_curvature: zero direction");
  if (std::abs(t.dot(s.normal)) / tn > 1e-10)
    throw std::domain_error("normal_curvature: direction not tangent");
  Vec3 th = (t - t.dot(s.normal) * s.normal).normalized();
  const Vec3 tt = s.normal.cross(th);
  const double pu = s.r_u.dot(tt), pv = s.r_v.dot(tt);
  const FundamentalForms ff = fundamental_forms(s);
  return (ff.e * pv * pv + ff.g * pu * pu - 2.0 * ff.f * pu * pv) /
         (ff.E * ff.G - ff.F * ff.F);
}

// Derivatives of the unit normal, n_u = (C_u - n (n.C_u))/J with C = r_u x r_v.
inline std::pair<Vec3, Vec3> normal_derivatives(const GeometrySample& s) {
  const Vec3 cu = s.r_uu.cross(s.r_v) + s.r_u.cross(s.r_uv);
  const Vec3 cv = s.r_uv.cross(s.r_v) + s.r_u.cross(s.r_vv);
  const Vec3 nu = (cu - s.normal.dot(cu) * s.normal) / s.jac;
  const Vec3 nv = (cv - s.normal.dot(cv) * s.normal) / s.jac;
  return {nu, nv};
}

namespace detail {

// dist^2 gradient and Hessian in (u,v).
inline void dist2_derivs(const Element& elem, const Vec3& p, double u, double v,
                         double& f, Vec2& g, Eigen::Matrix2d& H) {
  const GeometrySample s = elem.sample(u, v);
  const Vec3 d = s.r - p;
  f = d.squaredNorm();
  g = 2.0 * Vec2(d.dot(s.r_u), d.dot(s.r_v));
  H(0, 0) = 2.0 * (s.r_u.dot(s.r_u) + d.dot(s.r_uu));
  H(0, 1) = H(1, 0) = 2.0 * (s.r_u.dot(s.r_v) + d.dot(s.r_uv));
  H(1, 1) = 2.0 * (s.r_v.dot(s.r_v) + d.dot(s.r_vv));
}

// Gradient component masked by the active constraints of the triangle.
inline Vec2 projected_gradient(double u, double v, const Vec2& g) {
  Vec2 pg = g;
  const double tol = 1e-13;
  if (u <= tol && pg.x() > 0) pg.x() = 0;
  if (v <= tol && pg.y() > 0) pg.y() = 0;
  if (u + v >= 1.0 - tol) {
    // remove the outward component along (1,1)/sqrt(2)
    const double a = 0.5 * (pg.x() + pg.y());
    if (a < 0) { pg.x() -= a; pg.y() -= a; }
  }
  return pg;
}

}  // namespace detail

// Minimize |r_q(u,v) - p|^2 over the closed reference triangle: best of a
// 7x7 grid, then projected Newton with an Armijo-backtracked projected
// gradient fallback. Stationarity is the projected-gradient norm, so edge
// and vertex minimizers converge as well.
inline ClosestPointResult closest_point(const Element& elem, const Vec3& p,
                                        double tol = 1e-12) {
  if (!(tol > 0)) throw std::domain_error("closest_point: tol must be positive");
  double bu = 0, bv = 0, bf = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 6; ++i) {
    for (int j = 0; j <= 6 - i; ++j) {
      const double u = i / 6.0, v = j / 6.0;
      const double f = (elem.sample(u, v).r - p).squaredNorm();
      if (f < bf) { bf = f; bu = u; bv = v; }
    }
  }
  double u = bu, v = bv, f;
  Vec2 g;
  Eigen::Matrix2d H;
  bool converged = false;
  auto f_at = [&](const Vec2& c) { return (elem.sample(c.x(), c.y()).r - p).squaredNorm(); };
  for (int it = 0; it < 200; ++it) {
    detail::dist2_derivs(elem, p, u, v, f, g, H);
    const Vec2 pg = detail::projected_gradient(u, v, g);
    if (pg.norm() < tol) { converged = true; break; }
    bool moved = false;
    // Newton candidate when the Hessian is positive definite
    if (H(0, 0) > 0 && H.determinant() > 0) {
      const Vec2 step = -H.inverse() * g;
      for (double t : {1.0, 0.5, 0.25}) {
        const Vec2 cand = clamp_to_reference_triangle(u + t * step.x(), v + t * step.y());
        if (f_at(cand) < f) {
          u = cand.x();
          v = cand.y();
          moved = true;
          break;
        }
      }
    }
    if (!moved) {
      // projected gradient with Armijo backtracking
      const double t0 = 4.0 / std::max(std::abs(H(0, 0)) + std::abs(H(1, 1)), 1e-30);
      double t = t0;
      for (int bt = 0; bt < 60; ++bt, t *= 0.5) {
        const Vec2 cand = clamp_to_reference_triangle(u - t * pg.x(), v - t * pg.y());
        const Vec2 d = cand - Vec2(u, v);
        if (d.squaredNorm() == 0.0) break;
        if (f_at(cand) <= f + 1e-4 * g.dot(d)) {
          u = cand.x();
          v = cand.y();
          moved = true;
          break;
        }
      }
    }
    if (!moved) {
      converged = detail::projected_gradient(u, v, g).norm() < tol;
      break;
    }
  }
  if (!converged) {
    detail::dist2_derivs(elem, p, u, v, f, g, H);
    converged = detail::projected_gradient(u, v, g).norm() < tol;
  }
  ClosestPointResult res;
  res.u = u;
  res.v = v;
  res.dist = (elem.sample(u, v).r - p).norm();
  res.converged = converged;
  const double btol = 1e-12;
  res.on_boundary = u <= btol || v <= btol || u + v >= 1.0 - btol;
  return res;
}

namespace detail {

// h/r and its (u,v) gradient; needs the Weingarten derivatives of n.
inline double h_hat(const Element& elem, const Vec3& p, double u, double v,
                    Vec2* grad = nullptr) {
  const GeometrySample s = elem.sample(u, v);
  const Vec3 d = p - s.r;
  const double r = d.norm();
  const double h = s.normal.dot(d);
  if (grad) {
    const auto [nu, nv] = normal_derivatives(s);
    const double hu = nu.dot(d) - s.normal.dot(s.r_u);
    const double hv = nv.dot(d) - s.normal.dot(s.r_v);
    const double ru = -d.dot(s.r_u) / r;
    const double rv = -d.dot(s.r_v) / r;
    (*grad)[0] = (hu - (h / r) * ru) / r;
    (*grad)[1] = (hv - (h / r) * rv) / r;
  }
  return h / r;
}

// Local refinement of an extremum of h/r from a grid seed: Newton on the
// gradient with a finite-difference Jacobian, projected into the triangle.
inline double refine_h_hat_extremum(const Element& elem, const Vec3& p,
                                    double u, double v, double sign) {
  double best = sign * h_hat(elem, p, u, v);
  const double fd = 1e-6;
  for (int it = 0; it < 10; ++it) {
    Vec2 g;
    h_hat(elem, p, u, v, &g);
    g *= sign;
    Eigen::Matrix2d Jg;
    for (int c = 0; c < 2; ++c) {
      Vec2 up(u, v), dn(u, v);
      up[c] += fd;
      dn[c] -= fd;
      const Vec2 cu = clamp_to_reference_triangle(up.x(), up.y());
      const Vec2 cd = clamp_to_reference_triangle(dn.x(), dn.y());
      Vec2 gp, gm;
      h_hat(elem, p, cu.x(), cu.y(), &gp);
      h_hat(elem, p, cd.x(), cd.y(), &gm);
      Jg.col(c) = sign * (gp - gm) / (cu - cd).norm();
    }
    Vec2 step;
    if (std::abs(Jg.determinant()) > 1e-30) {
      step = -Jg.inverse() * g;
    } else {
      step = g * 0.01;  // uphill on sign*h_hat
    }
    double scale = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 20; ++bt) {
      const Vec2 cand = clamp_to_reference_triangle(u + scale * step.x(), v + scale * step.y());
      const double val = sign * h_hat(elem, p, cand.x(), cand.y());
      if (val > best) {
        best = val;
        u = cand.x();
        v = cand.y();
        moved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!moved) break;
  }
  return sign * best;
}

}  // namespace detail

// Range of h/r over the element, from an n_grid-per-edge barycentric scan
// with local refinement at the extrema. Requires r > 0 on the grid; a hit
// reports the singular flag instead.
inline HhatRange h_hat_range(const Element& elem, const Vec3& p, int n_grid = 32) {
  if (n_grid < 1) throw std::domain_error("h_hat_range: n_grid must be >= 1");
  HhatRange out;
  const double r_floor = 1e-13 * elem.diameter();
  double umin = 0, vmin = 0, umax = 0, vmax = 0;
  for (int i = 0; i <= n_grid; ++i) {
    for (int j = 0; j <= n_grid - i; ++j) {
      const double u = double(i) / n_grid, v = double(j) / n_grid;
      const GeometrySample s = elem.sample(u, v);
      const Vec3 d = p - s.r;
      const double r = d.norm();
      if (r < r_floor) {
        out.singular = true;
        return out;
      }
      const double hh = s.normal.dot(d) / r;
      if (hh < out.min) { out.min = hh; umin = u; vmin = v; }
      if (hh > out.max) { out.max = hh; umax = u; vmax = v; }
    }
  }
  out.min = detail::refine_h_hat_extremum(elem, p, umin, vmin, -1.0);
  out.max = detail::refine_h_hat_extremum(elem, p, umax, vmax, +1.0);
  out.min = std::max(out.min, -1.0);
  out.max = std::min(out.max, 1.0);
  return out;
}

}  // namespace curvquad
