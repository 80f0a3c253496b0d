// layerpot.hpp
//
// Evaluation of single- and double-layer potentials with constant density
// over one curved element, by the two-term decomposition
//     P(p) = contour integral of f . dl  +  (1/4pi) int_S (C kt + D kh) dS,
// with routing that keeps the evaluation point off the h = -r pole: flip the
// parametrization when p lies toward the inward normal bundle, subdivide when
// it lies in the intersection of both bundles, and subtract the excluded
// singularity constant 1/2 for the on-element double layer. Baseline direct
// quadratures and an adaptive reference evaluator live here as well.
#pragma once

#include "geometry.hpp"
#include "kernels.hpp"
#include "quadrature.hpp"

namespace curvquad {

enum class CurvatureMethod { Plain2D, Polar };

struct EvalConfig {
  int order_contour = 20;
  int order_curvature = 20;
  CurvatureMethod curvature_method = CurvatureMethod::Polar;
  double bundle_tol = 1e-3;     // band around h/r = -1, +1 for the subdivision test
  double singular_tol = 1e-10;  // closest distance below singular_tol*diameter is on-element
  int max_subdivision_depth = 8;
  int hrange_grid = 32;

  void validate() const {
    if (order_contour < 2 || order_curvature < 2)
      throw std::domain_error("EvalConfig: orders must be >= 2");
    if (!(bundle_tol > 0 && bundle_tol < 0.1) || !(singular_tol > 0 && singular_tol < 0.1))
      throw std::domain_error("EvalConfig: tolerances must lie in (0, 0.1)");
    if (max_subdivision_depth < 0 || max_subdivision_depth > 8)
      throw std::domain_error("EvalConfig: max_subdivision_depth must be in [0, 8]");
    if (hrange_grid < 4) throw std::domain_error("EvalConfig: hrange_grid must be >= 4");
  }
};

struct EvalPath {
  bool flipped = false;
  int subdivided = 0;  // number of subdivision events over the whole recursion
  bool singular = false;
};

struct EvalDiagnostics {
  double h_hat_min = 0.0;  // not computed on the singular path
  double h_hat_max = 0.0;
  Vec2 closest_uv = Vec2::Zero();
  bool closest_converged = true;
};

struct EvalResult {
  Complex value{};
  EvalPath path;
  EvalDiagnostics diag;
};

struct TooCurvedError : std::runtime_error {
  EvalDiagnostics diag;
  explicit TooCurvedError(const EvalDiagnostics& d)
      : std::runtime_error("evaluate: subdivision depth exhausted (element too curved "
                           "for this evaluation point)"),
        diag(d) {}
};

// Contour integral of the decomposition field over the element boundary,
// edge by edge with n-point Gauss-Legendre. The reference-triangle edges are
// traversed (0,0)->(1,0)->(0,1)->(0,0), counter-clockwise about n_q.
inline Complex stokes_term(const Element& elem, const Kernel& kernel, Layer layer,
                           const Vec3& p, int n) {
  const Rule1D g = gauss_legendre01(n);
  const double scale = elem.diameter();
  const double rho_tiny = 1e-12 * scale;
  Complex total{};
  for (int edge = 0; edge < 3; ++edge) {
    for (int i = 0; i < n; ++i) {
      const double t = g.nodes[i];
      double u, v;
      switch (edge) {
        case 0: u = t; v = 0.0; break;
        case 1: u = 1.0 - t; v = t; break;
        default: u = 0.0; v = 1.0 - t; break;
      }
      const GeometrySample s = elem.sample(u, v);
      const LocalFrame fr = local_frame(s, p, rho_tiny);
      const DecompositionFields df = decomposition_fields(kernel, layer, fr, scale);
      Vec3 dl;
      switch (edge) {
        case 0: dl = s.r_u; break;
        case 1: dl = -s.r_u + s.r_v; break;
        default: dl = -s.r_v; break;
      }
      total += g.weights[i] * dl.cast<Complex>().dot(df.f);
    }
  }
  return total;
}

namespace detail {

// Distance (relative to the diameter) beyond which the curvature integrand
// has no layer to regularize and the plain 2D rule is both cheaper and more
// accurate than an eccentric polar rule.
inline constexpr double kPolarFarSwitch = 0.25;

inline Complex curvature_sum(const Element& elem, const Kernel& kernel, Layer layer,
                             const Vec3& p, const std::vector<Vec2>& nodes,
                             const std::vector<double>& weights) {
  const double scale = elem.diameter();
  const double rho_tiny = 1e-12 * scale;
  Complex total{};
  for (size_t i = 0; i < nodes.size(); ++i) {
    const Vec2 c = clamp_to_reference_triangle(nodes[i].x(), nodes[i].y());
    const GeometrySample s = elem.sample(c.x(), c.y());
    const LocalFrame fr = local_frame(s, p, rho_tiny);
    const DecompositionFields df = decomposition_fields(kernel, layer, fr, scale);
    const double kt = normal_curvature(s, fr.rho_tilde);
    const double kh = normal_curvature(s, fr.rho_hat);
    total += weights[i] * (df.C * kt + df.D * kh) * (s.jac / kFourPi);
  }
  return total;
}

inline Complex curvature_term_at(const Element& elem, const Kernel& kernel, Layer layer,
                                 const Vec3& p, const EvalConfig& cfg,
                                 const Vec2& origin, double dist) {
  if (cfg.curvature_method == CurvatureMethod::Plain2D ||
      dist >= kPolarFarSwitch * elem.diameter()) {
    const Rule2D rule = triangle_rule(cfg.order_curvature);
    return curvature_sum(elem, kernel, layer, p, rule.nodes, rule.weights);
  }
  const PolarRule rule = polar_rule(elem.vertices(), origin, cfg.order_curvature, dist);
  return curvature_sum(elem, kernel, layer, p, rule.nodes, rule.weights);
}

}  // namespace detail

// Curvature term (1/4pi) int_S (C kappa_N(rho_tilde) + D kappa_N(rho_hat)) dS.
// The Polar method centers the rule at the closest point and anchors the sinh
// radial transform at the closest distance; far evaluation points fall back
// to the plain rule, where the integrand is smooth.
inline Complex curvature_term(const Element& elem, const Kernel& kernel, Layer layer,
                              const Vec3& p, const EvalConfig& cfg) {
  cfg.validate();
  if (cfg.curvature_method == CurvatureMethod::Plain2D) {
    const Rule2D rule = triangle_rule(cfg.order_curvature);
    return detail::curvature_sum(elem, kernel, layer, p, rule.nodes, rule.weights);
  }
  const ClosestPointResult cp = closest_point(elem, p, 1e-12);
  return detail::curvature_term_at(elem, kernel, layer, p, cfg, Vec2(cp.u, cp.v), cp.dist);
}

namespace detail {

inline EvalResult evaluate_impl(const Element& elem, const Kernel& kernel, Layer layer,
                                const Vec3& p, const EvalConfig& cfg, int depth) {
  EvalResult res;
  const double d = elem.diameter();
  const ClosestPointResult cp = closest_point(elem, p, 1e-12);
  res.diag.closest_uv = Vec2(cp.u, cp.v);
  res.diag.closest_converged = cp.converged;

  // On-element evaluation: both terms with the frame origin at the
  // on-element point; excluding the singularity from Stokes' theorem
  // subtracts the constant 1/2 from the double layer (principal value).
  auto singular_branch = [&]() {
    res.path.singular = true;
    EvalConfig scfg = cfg;
    scfg.curvature_method = CurvatureMethod::Polar;
    Complex value = stokes_term(elem, kernel, layer, p, cfg.order_contour) +
                    curvature_term_at(elem, kernel, layer, p, scfg,
                                      Vec2(cp.u, cp.v), 0.0);
    if (layer == Layer::Double) value -= 0.5;
    res.value = value;
    return res;
  };

  if (cp.dist < cfg.singular_tol * d) return singular_branch();

  const HhatRange hr = h_hat_range(elem, p, cfg.hrange_grid);
  if (hr.singular) {
    // The scan hit r ~ 0 even though the closest-point search classified the
    // point as off-element; the grid point is authoritative.
    if (cp.dist < 1e-6 * d) return singular_branch();
    throw std::runtime_error("evaluate: inconsistent singular-point detection");
  }
  res.diag.h_hat_min = hr.min;
  res.diag.h_hat_max = hr.max;

  if (hr.min <= -1.0 + cfg.bundle_tol && hr.max >= 1.0 - cfg.bundle_tol) {
    if (depth >= cfg.max_subdivision_depth) throw TooCurvedError(res.diag);
    res.path.subdivided = 1;
    for (const Element& child : elem.subdivided()) {
      const EvalResult r = evaluate_impl(child, kernel, layer, p, cfg, depth + 1);
      res.value += r.value;
      res.path.subdivided += r.path.subdivided;
      res.path.flipped = res.path.flipped || r.path.flipped;
      res.path.singular = res.path.singular || r.path.singular;
    }
    return res;
  }

  const Element* work = &elem;
  Element flipped_elem;
  Vec2 origin(cp.u, cp.v);
  if (std::abs(hr.min + 1.0) < std::abs(hr.max - 1.0)) {
    flipped_elem = elem.flipped();
    work = &flipped_elem;
    origin = Vec2(cp.v, cp.u);
    res.path.flipped = true;
  }
  Complex value = stokes_term(*work, kernel, layer, p, cfg.order_contour) +
                  curvature_term_at(*work, kernel, layer, p, cfg, origin, cp.dist);
  if (layer == Layer::Double && res.path.flipped) value = -value;
  res.value = value;
  return res;
}

}  // namespace detail

// Full evaluation with normal-bundle routing:
//   1. scan the range of h/r over the element;
//   2. if it reaches both -1 and +1 (within bundle_tol), subdivide and recurse;
//   3. if it is closer to -1 than to +1, flip the parametrization;
//   4. value = Stokes term + curvature term;
//   5. negate the double layer if flipped;
// with a separate singular branch when p lies on the element.
inline EvalResult evaluate(const Element& elem, const Kernel& kernel, Layer layer,
                           const Vec3& p, const EvalConfig& cfg = {}) {
  cfg.validate();
  return detail::evaluate_impl(elem, kernel, layer, p, cfg, 0);
}

namespace detail {

inline Complex kernel_integrand(const Element& elem, const Kernel& kernel, Layer layer,
                                const Vec3& p, double u, double v) {
  const GeometrySample s = elem.sample(u, v);
  const Complex val = (layer == Layer::Single) ? green(kernel, p, s.r)
                                               : green_dn(kernel, p, s.r, s.normal);
  return val * s.jac;
}

}  // namespace detail

// Direct 2D Gauss-Legendre (Duffy) quadrature of the kernel; the GL2D baseline.
inline Complex evaluate_gl2d(const Element& elem, const Kernel& kernel, Layer layer,
                             const Vec3& p, int order) {
  const Rule2D rule = triangle_rule(order);
  Complex total{};
  for (size_t i = 0; i < rule.nodes.size(); ++i)
    total += rule.weights[i] *
             detail::kernel_integrand(elem, kernel, layer, p, rule.nodes[i].x(), rule.nodes[i].y());
  return total;
}

// Direct quadrature through the plain polar transform centered at the
// closest point; the GL2D(Polar) baseline.
inline Complex evaluate_gl2d_polar(const Element& elem, const Kernel& kernel, Layer layer,
                                   const Vec3& p, int order) {
  const ClosestPointResult cp = closest_point(elem, p, 1e-12);
  const PolarRule rule = polar_rule(elem.vertices(), Vec2(cp.u, cp.v), order);
  Complex total{};
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    const Vec2 c = clamp_to_reference_triangle(rule.nodes[i].x(), rule.nodes[i].y());
    total += rule.weights[i] * detail::kernel_integrand(elem, kernel, layer, p, c.x(), c.y());
  }
  return total;
}

struct ReferenceResult {
  Complex value{};
  double error = 0.0;
  bool converged = false;
};

// Adaptive Gauss-Kronrod reference value of the layer potential; requires
// p strictly off the element.
inline ReferenceResult evaluate_reference(const Element& elem, const Kernel& kernel,
                                          Layer layer, const Vec3& p, double tol = 1e-12) {
  auto res = reference_integral_2d(
      [&](double u, double v) { return detail::kernel_integrand(elem, kernel, layer, p, u, v); },
      tol);
  return {res.value, res.error, res.converged};
}

}  // namespace curvquad
