// kernels.hpp
//
// Laplace and Helmholtz Green functions, their normal derivatives, and the
// two-term decomposition machinery: the contour fields f, the curvature
// weights C, D, and the pseudo potential fields m with n x m = f. The
// decomposition satisfies, pointwise on the element,
//     G      = div_s(m)  + (C  kappa_N(rho_tilde) + D  kappa_N(rho_hat))/4pi,
//     dG/dn  = div_s(m') + (C' kappa_N(rho_tilde) + D' kappa_N(rho_hat))/4pi,
// which decomposition_residual verifies by central finite differences.
//
// All fields are evaluated through the cancellation-free pair
//     delta = r - h = rho^2/(r+h),   splus = r + h = rho^2/(r-h)
// (whichever side avoids subtraction) and the phase factor
// phi(x) = (e^{ix}-1)/(ix), so the h -> r (rho -> 0) regime loses no digits.
#pragma once

#include <complex>

#include "geometry.hpp"

namespace curvquad {

using Complex = std::complex<double>;
using CVec3 = Eigen::Vector3cd;

inline constexpr double kFourPi = 4.0 * M_PI;

struct Kernel {
  enum class Type { Laplace, Helmholtz };
  Type type = Type::Laplace;
  double k = 0.0;

  static Kernel laplace() { return {Type::Laplace, 0.0}; }
  static Kernel helmholtz(double k) {
    if (!(k > 0) || !std::isfinite(k))
      throw std::domain_error("Kernel::helmholtz: wavenumber must be finite and positive");
    return {Type::Helmholtz, k};
  }
  bool is_helmholtz() const { return type == Type::Helmholtz; }
};

enum class Layer { Single, Double };

struct SingularEvaluationError : std::runtime_error {
  SingularEvaluationError() : std::runtime_error("kernel evaluated at r = 0") {}
};

// The evaluation point sits on (or numerically at) the h = -r pole, i.e. the
// inward normal bundle; Algorithm 1 routing should have flipped or subdivided.
struct InwardBundleError : std::runtime_error {
  InwardBundleError()
      : std::runtime_error("decomposition fields evaluated on the inward normal bundle (h ~ -r)") {}
};

inline Complex green(const Kernel& kernel, const Vec3& p, const Vec3& q) {
  const double r = (q - p).norm();
  if (!(r > 0)) throw SingularEvaluationError();
  if (!kernel.is_helmholtz()) return Complex(1.0 / (kFourPi * r), 0.0);
  return std::polar(1.0, kernel.k * r) / (kFourPi * r);
}

inline Complex green_dn(const Kernel& kernel, const Vec3& p, const Vec3& q,
                        const Vec3& n_q) {
  const double r = (q - p).norm();
  if (!(r > 0)) throw SingularEvaluationError();
  const double h = n_q.dot(p - q);
  if (!kernel.is_helmholtz()) return Complex(h / (kFourPi * r * r * r), 0.0);
  const double kr = kernel.k * r;
  return h * std::polar(1.0, kr) * Complex(1.0, -kr) / (kFourPi * r * r * r);
}

struct DecompositionFields {
  CVec3 f;     // contour field, parallel to rho_tilde
  Complex C;   // weight of kappa_N(rho_tilde)
  Complex D;   // weight of kappa_N(rho_hat)
};

struct PseudoField {
  CVec3 m;  // parallel to rho_hat; n_q x m = f
};

namespace detail {

inline constexpr double kEpsPole = 1e-8;
inline constexpr double kRhoSwitchFactor = 1e-4;

struct StableFrameParts {
  double splus;  // r + h
  double delta;  // r - h
  double q;      // rho/(r+h) = (r-h)/rho
};

inline StableFrameParts stable_parts(const LocalFrame& fr) {
  if (!(fr.r > 0)) throw SingularEvaluationError();
  StableFrameParts s;
  if (fr.h >= 0) {
    s.splus = fr.r + fr.h;
    s.delta = fr.rho * fr.rho / s.splus;
  } else {
    s.delta = fr.r - fr.h;
    s.splus = fr.rho * fr.rho / s.delta;
  }
  if (!(s.splus > kEpsPole * fr.r)) throw InwardBundleError();
  s.q = fr.rho / s.splus;
  return s;
}

// phi(x) = (e^{ix} - 1)/(ix) for real x, and its truncated series. Both are
// accurate to machine precision in the band around the rho_switch threshold,
// which the tests check explicitly.
inline Complex phi_exact(double x) {
  if (x == 0.0) return Complex(1.0, 0.0);
  const double s2 = std::sin(0.5 * x);
  return Complex(std::sin(x) / x, 2.0 * s2 * s2 / x);
}

inline Complex phi_series(double x) {
  const Complex ix(0.0, x);
  return 1.0 + ix * (0.5 + ix * (1.0 / 6.0 + ix * (1.0 / 24.0 + ix / 120.0)));
}

}  // namespace detail

// Curvature weights and contour field of the decomposition. `scale` is the
// element diameter (or any comparable length); below rho_switch =
// 1e-4*max(|h|, scale) the phase factor switches to its series limit.
inline DecompositionFields decomposition_fields(const Kernel& kernel, Layer layer,
                                                const LocalFrame& fr,
                                                double scale = 0.0) {
  const auto s = detail::stable_parts(fr);
  const double C_L = fr.h / s.splus;
  const double D_L = fr.r / s.splus;
  DecompositionFields out;
  if (!kernel.is_helmholtz()) {
    if (layer == Layer::Single) {
      out.f = (s.q / kFourPi) * fr.rho_tilde.cast<Complex>();
      out.C = C_L;
      out.D = D_L;
    } else {
      out.f = (s.q / (kFourPi * fr.r)) * fr.rho_tilde.cast<Complex>();
      out.C = C_L / fr.r;
      out.D = D_L / fr.r;
    }
    return out;
  }
  const double k = kernel.k;
  const Complex w = std::polar(1.0, k * fr.h);
  const double rho_switch = detail::kRhoSwitchFactor * std::max(std::abs(fr.h), scale);
  const Complex phi = (fr.rho < rho_switch) ? detail::phi_series(k * s.delta)
                                            : detail::phi_exact(k * s.delta);
  if (layer == Layer::Single) {
    out.C = C_L * w * phi;
    out.D = w - out.C;
    out.f = (w * phi * (s.q / kFourPi)) * fr.rho_tilde.cast<Complex>();
  } else {
    const Complex ik(0.0, k);
    const Complex a = 1.0 - ik * fr.h * phi;  // (r e^{ikh} - h e^{ikr}) = w delta a
    out.C = fr.h * w * a / (fr.r * s.splus);
    out.D = w * ((1.0 + ik * fr.r * phi) / s.splus - ik);
    out.f = (w * a * s.q / (kFourPi * fr.r)) * fr.rho_tilde.cast<Complex>();
  }
  return out;
}

// Textbook forms of the same fields, with no cancellation control. Used by
// the tests to cross-check the stable path at moderate rho.
inline DecompositionFields decomposition_fields_direct(const Kernel& kernel, Layer layer,
                                                       const LocalFrame& fr) {
  (void)detail::stable_parts(fr);  // same pole/r=0 guards
  const double r = fr.r, h = fr.h, rho = fr.rho;
  DecompositionFields out;
  if (!kernel.is_helmholtz()) {
    const double fmag = rho / (kFourPi * (r + h));
    if (layer == Layer::Single) {
      out.f = fmag * fr.rho_tilde.cast<Complex>();
      out.C = h / (r + h);
      out.D = r / (r + h);
    } else {
      out.f = (fmag / r) * fr.rho_tilde.cast<Complex>();
      out.C = h / (r * (r + h));
      out.D = 1.0 / (r + h);
    }
    return out;
  }
  const Complex ik(0.0, kernel.k);
  const Complex eikr = std::exp(ik * r), eikh = std::exp(ik * h);
  if (layer == Layer::Single) {
    out.f = ((eikr - eikh) / (kFourPi * ik * rho)) * fr.rho_tilde.cast<Complex>();
    out.C = h * (eikr - eikh) / (ik * rho * rho);
    out.D = eikh - out.C;
  } else {
    out.f = ((r * eikh - h * eikr) / (kFourPi * r * rho)) * fr.rho_tilde.cast<Complex>();
    out.C = h * (r * eikh - h * eikr) / (r * rho * rho);
    out.D = (r * eikr - h * eikh) / (rho * rho) - ik * eikh;
  }
  return out;
}

// Pseudo potential field m with n_q x m = f. Carries the same magnitude as
// the contour field, directed along rho_hat.
inline PseudoField pseudo_field(const Kernel& kernel, Layer layer,
                                const LocalFrame& fr, double scale = 0.0) {
  const DecompositionFields df = decomposition_fields(kernel, layer, fr, scale);
  // f = fmag * rho_tilde by construction; dot() conjugates its (real) left side
  const Complex fmag = fr.rho_tilde.cast<Complex>().dot(df.f);
  PseudoField out;
  out.m = fmag * fr.rho_hat.cast<Complex>();
  return out;
}

// Residual of the decomposition identity at one surface point: the surface
// divergence of m is assembled from central (u,v) finite differences mapped
// through the frozen tangent frame,
//   J div_s(m) = -(-rv_perp rho_hat + rv_par rho_tilde) . d_u m
//                +(-ru_perp rho_hat + ru_par rho_tilde) . d_v m,
// the curvature part is added, and the Green function (or its normal
// derivative) is subtracted. Returns the absolute residual, O(delta^2) when
// the fields are correct.
inline double decomposition_residual(const Element& elem, const Kernel& kernel,
                                     Layer layer, double u, double v, const Vec3& p,
                                     double delta = 1e-5) {
  if (!in_reference_triangle(u - delta, v - delta) ||
      !in_reference_triangle(u + delta, v + delta))
    throw std::domain_error("decomposition_residual: finite-difference stencil leaves the triangle");
  const GeometrySample s0 = elem.sample(u, v);
  const LocalFrame fr0 = local_frame(s0, p);
  auto m_at = [&](double uu, double vv) {
    const GeometrySample s = elem.sample(uu, vv);
    return pseudo_field(kernel, layer, local_frame(s, p)).m;
  };
  const CVec3 du = (m_at(u + delta, v) - m_at(u - delta, v)) / (2.0 * delta);
  const CVec3 dv = (m_at(u, v + delta) - m_at(u, v - delta)) / (2.0 * delta);
  const double ru_par = s0.r_u.dot(fr0.rho_hat), ru_perp = s0.r_u.dot(fr0.rho_tilde);
  const double rv_par = s0.r_v.dot(fr0.rho_hat), rv_perp = s0.r_v.dot(fr0.rho_tilde);
  const CVec3 wu = (-rv_perp * fr0.rho_hat + rv_par * fr0.rho_tilde).cast<Complex>();
  const CVec3 wv = (-ru_perp * fr0.rho_hat + ru_par * fr0.rho_tilde).cast<Complex>();
  const Complex div_s = (-wu.dot(du) + wv.dot(dv)) / s0.jac;

  const DecompositionFields df = decomposition_fields(kernel, layer, fr0);
  const double kt = normal_curvature(s0, fr0.rho_tilde);
  const double kh = normal_curvature(s0, fr0.rho_hat);
  const Complex curvature = (df.C * kt + df.D * kh) / kFourPi;
  const Complex target = (layer == Layer::Single) ? green(kernel, p, s0.r)
                                                  : green_dn(kernel, p, s0.r, s0.normal);
  return std::abs(div_s + curvature - target);
}

}  // namespace curvquad
