// bem.hpp
//
// The spherical-cavity benchmark: a rigid sphere of radius a sits inside a
// rigid spherical room of radius b, the upper hemisphere of the inner sphere
// vibrates with normal velocity v0, time convention e^{-i omega t}. The
// collocation BEM system (1/2 I + K) p = V g over icosphere meshes of both
// spheres is assembled from the layer-potential evaluators and compared to
// the analytic zonal series.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iomanip>
#include <map>
#include <ostream>
#include <span>
#include <vector>

#include "layerpot.hpp"
#include "specfun.hpp"

namespace curvquad {

enum class MeshVariant { Curved, Flat };

// Icosahedron refined by edge-midpoint subdivision with projection to the
// sphere. Curved elements parametrize the spherical triangles exactly via
// central projection; flat elements keep the chord triangles (vertices on
// the sphere). Normals point outward.
inline std::vector<Element> icosphere(int subdivisions, double radius,
                                      MeshVariant variant) {
  if (subdivisions < 0) throw std::domain_error("icosphere: subdivisions must be >= 0");
  if (!(radius > 0)) throw std::domain_error("icosphere: radius must be positive");
  const double t = 0.5 * (1.0 + std::sqrt(5.0));
  std::vector<Vec3> v = {
      {-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1},
  };
  for (auto& p : v) p = radius * p.normalized();
  std::vector<std::array<int, 3>> f = {
      {0, 11, 5}, {0, 5, 1},   {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4},  {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},   {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11},  {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
  };
  std::vector<std::array<Vec3, 3>> tris;
  tris.reserve(f.size());
  for (const auto& face : f) {
    std::array<Vec3, 3> tri = {v[face[0]], v[face[1]], v[face[2]]};
    // enforce outward orientation
    const Vec3 n = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
    if (n.dot(tri[0] + tri[1] + tri[2]) < 0) std::swap(tri[1], tri[2]);
    tris.push_back(tri);
  }
  for (int s = 0; s < subdivisions; ++s) {
    std::vector<std::array<Vec3, 3>> next;
    next.reserve(4 * tris.size());
    for (const auto& tri : tris) {
      const Vec3 m01 = radius * (tri[0] + tri[1]).normalized();
      const Vec3 m12 = radius * (tri[1] + tri[2]).normalized();
      const Vec3 m20 = radius * (tri[2] + tri[0]).normalized();
      next.push_back({tri[0], m01, m20});
      next.push_back({m01, tri[1], m12});
      next.push_back({m20, m12, tri[2]});
      next.push_back({m01, m12, m20});
    }
    tris = std::move(next);
  }
  std::vector<Element> out;
  out.reserve(tris.size());
  for (const auto& tri : tris) {
    out.push_back(variant == MeshVariant::Curved
                      ? Element::spherical(radius, tri[0], tri[1], tri[2])
                      : Element::flat(tri[0], tri[1], tri[2]));
  }
  return out;
}

struct CavityProblem {
  double a = 0.5;   // inner radius
  double b = 1.0;   // outer radius
  double k = 2.0;   // wavenumber
  double v0 = 1.0;  // piston velocity
  double c_s = 1.0; // speed of sound
  double q = 1.0;   // medium density
  int n_max = 120;  // series truncation

  void validate() const {
    if (!(0 < a && a < b)) throw std::domain_error("CavityProblem: requires 0 < a < b");
    if (!(k > 0)) throw std::domain_error("CavityProblem: requires k > 0");
    if (n_max < 0 || n_max > 200) throw std::domain_error("CavityProblem: n_max out of range");
  }
};

namespace detail {

// Radial factors of the zonal series. With the rigid-wall condition at r=b
// folded in, the radial part of mode n is the purely real ratio
//   t_n(r) = [j_n(kr) y'_n(kb) - j'_n(kb) y_n(kr)] /
//            [j'_n(ka) y'_n(kb) - j'_n(kb) y'_n(ka)],
// evaluated through the scaled representation since j and y individually
// leave the double range far below the truncation order.
struct CavityRadial {
  const CavityProblem prob;
  SphericalBesselTable tab_a, tab_b;

  explicit CavityRadial(const CavityProblem& p)
      : prob(p), tab_a(p.n_max, p.k * p.a), tab_b(p.n_max, p.k * p.b) {}

  double denom(int n) const {
    return (tab_a.jp_scaled(n) * tab_b.yp_scaled(n) -
            tab_b.jp_scaled(n) * tab_a.yp_scaled(n))
        .to_double();
  }
  double t_from(int n, const SphericalBesselTable& tab_r) const {
    const double num = (tab_r.j_scaled(n) * tab_b.yp_scaled(n) -
                        tab_b.jp_scaled(n) * tab_r.y_scaled(n))
                           .to_double();
    return num / denom(n);
  }
  double tprime_from(int n, const SphericalBesselTable& tab_r) const {
    const double num = (tab_r.jp_scaled(n) * tab_b.yp_scaled(n) -
                        tab_b.jp_scaled(n) * tab_r.yp_scaled(n))
                           .to_double();
    return prob.k * num / denom(n);
  }
  // i v0 c_s q sqrt((2n+1) pi) I_n, the zonal source coefficient
  Complex chi(int n) const {
    return Complex(0.0, prob.v0 * prob.c_s * prob.q) *
           std::sqrt((2 * n + 1) * M_PI) * legendre_p01_integral(n);
  }
};

}  // namespace detail

// Analytic cavity pressure at points in the annulus a <= |r| <= b.
inline std::vector<Complex> analytic_pressure(const CavityProblem& prob,
                                              std::span<const Vec3> points) {
  prob.validate();
  const detail::CavityRadial rad(prob);
  std::vector<Complex> out;
  out.reserve(points.size());
  const double rtol = 1e-9 * prob.b;
  for (const Vec3& p : points) {
    const double r = p.norm();
    if (r < prob.a - rtol || r > prob.b + rtol)
      throw std::domain_error("analytic_pressure: point outside the annulus");
    const double theta = std::acos(std::clamp(p.z() / r, -1.0, 1.0));
    const SphericalBesselTable tab_r(prob.n_max, prob.k * std::clamp(r, prob.a, prob.b));
    Complex sum{};
    for (int n = 0; n <= prob.n_max; ++n)
      sum += rad.chi(n) * rad.t_from(n, tab_r) * sph_harmonic_n0(n, theta);
    out.push_back(sum);
  }
  return out;
}

// Radial derivative of the analytic pressure (for the boundary-condition
// self-checks).
inline std::vector<Complex> analytic_pressure_dr(const CavityProblem& prob,
                                                 std::span<const Vec3> points) {
  prob.validate();
  const detail::CavityRadial rad(prob);
  std::vector<Complex> out;
  out.reserve(points.size());
  for (const Vec3& p : points) {
    const double r = p.norm();
    const double theta = std::acos(std::clamp(p.z() / r, -1.0, 1.0));
    const SphericalBesselTable tab_r(prob.n_max, prob.k * std::clamp(r, prob.a, prob.b));
    Complex sum{};
    for (int n = 0; n <= prob.n_max; ++n)
      sum += rad.chi(n) * rad.tprime_from(n, tab_r) * sph_harmonic_n0(n, theta);
    out.push_back(sum);
  }
  return out;
}

// |alpha_n j_n(kb)| for the truncation guard.
inline double cavity_alpha_jn_kb(const CavityProblem& prob, int n) {
  const detail::CavityRadial rad(prob);
  const SphericalBesselTable tab_b(n, prob.k * prob.b);
  const double jn_hb = (tab_b.j_scaled(n) * rad.tab_b.yp_scaled(n)).to_double();
  return std::abs(rad.chi(n)) * std::abs(jn_hb / rad.denom(n));
}

// Concentric-sphere collocation mesh. With outward_from_domain normals the
// inner sphere's elements are reversed so normals point toward the center;
// the opposite flag keeps both spheres' natural outward orientation, which
// is diagnosably wrong for the interior BIE.
struct Mesh {
  std::vector<Element> elements;
  std::vector<Vec3> collocation;         // r_q(1/3, 1/3)
  std::vector<Vec3> collocation_normal;  // n_q at the collocation point
  std::vector<std::uint8_t> vibrating;   // inner-sphere elements with theta < pi/2
  std::vector<double> edge_length;       // max chord edge per element
  std::vector<double> sphere_radius;     // a or b per element
  bool curved = true;
  bool normals_outward_from_domain = true;

  std::size_t size() const { return elements.size(); }
};

inline Mesh cavity_mesh(const CavityProblem& prob, int subdivisions, MeshVariant variant,
                        bool normals_outward_from_domain = true) {
  prob.validate();
  Mesh mesh;
  mesh.curved = variant == MeshVariant::Curved;
  mesh.normals_outward_from_domain = normals_outward_from_domain;
  auto add_sphere = [&](double radius, bool reversed, bool inner) {
    for (Element& e : icosphere(subdivisions, radius, variant)) {
      const auto verts = e.vertices();
      Element elem = e;
      if (reversed) {
        elem = (variant == MeshVariant::Curved)
                   ? Element::spherical(radius, verts[0], verts[2], verts[1])
                   : Element::flat(verts[0], verts[2], verts[1]);
      }
      const GeometrySample c = elem.sample(1.0 / 3.0, 1.0 / 3.0);
      mesh.elements.push_back(elem);
      mesh.collocation.push_back(c.r);
      mesh.collocation_normal.push_back(c.normal);
      mesh.vibrating.push_back(inner && c.r.z() > 0 ? 1 : 0);
      const auto v = elem.vertices();
      mesh.edge_length.push_back(std::max(
          {(v[0] - v[1]).norm(), (v[1] - v[2]).norm(), (v[2] - v[0]).norm()}));
      mesh.sphere_radius.push_back(radius);
    }
  };
  add_sphere(prob.a, normals_outward_from_domain, true);
  add_sphere(prob.b, !normals_outward_from_domain, false);
  return mesh;
}

enum class NearMethod { Proposed, GL2D };

struct DenseSystem {
  Eigen::MatrixXcd matrix;  // 1/2 I + K
  Eigen::VectorXcd rhs;     // V g
  Eigen::VectorXcd neumann; // g at the collocation points
};

// Collocation assembly of (1/2 I + K) p = V g. Self entries use the singular
// evaluator; entries with |x_i - r_e| < l_e use near_method at the near
// config's order; everything else uses plain GL2D at far_order. The Neumann
// data is g = i k c_s q (v . n) with v = v0 r_hat on the vibrating patch.
inline DenseSystem assemble(const Mesh& mesh, const CavityProblem& prob,
                            const EvalConfig& near_cfg = {},
                            NearMethod near_method = NearMethod::Proposed,
                            int far_order = 6) {
  prob.validate();
  near_cfg.validate();
  const auto n = static_cast<Eigen::Index>(mesh.size());
  if (n == 0) throw std::domain_error("assemble: empty mesh");
  const Kernel kernel = Kernel::helmholtz(prob.k);
  DenseSystem sys;
  sys.matrix.resize(n, n);
  sys.rhs.resize(n);
  sys.neumann.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double vn = mesh.vibrating[j]
                          ? prob.v0 * mesh.collocation[j].normalized().dot(mesh.collocation_normal[j])
                          : 0.0;
    sys.neumann(j) = Complex(0.0, prob.k * prob.c_s * prob.q) * vn;
  }
  Eigen::MatrixXcd vmat(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3& x = mesh.collocation[i];
    for (Eigen::Index j = 0; j < n; ++j) {
      Complex kij, vij;
      try {
        if (i == j) {
          kij = evaluate(mesh.elements[j], kernel, Layer::Double, x, near_cfg).value;
          vij = evaluate(mesh.elements[j], kernel, Layer::Single, x, near_cfg).value;
        } else if ((x - mesh.collocation[j]).norm() < mesh.edge_length[j]) {
          if (near_method == NearMethod::Proposed) {
            kij = evaluate(mesh.elements[j], kernel, Layer::Double, x, near_cfg).value;
            vij = evaluate(mesh.elements[j], kernel, Layer::Single, x, near_cfg).value;
          } else {
            kij = evaluate_gl2d(mesh.elements[j], kernel, Layer::Double, x,
                                near_cfg.order_curvature);
            vij = evaluate_gl2d(mesh.elements[j], kernel, Layer::Single, x,
                                near_cfg.order_curvature);
          }
        } else {
          kij = evaluate_gl2d(mesh.elements[j], kernel, Layer::Double, x, far_order);
          vij = evaluate_gl2d(mesh.elements[j], kernel, Layer::Single, x, far_order);
        }
      } catch (const std::exception& err) {
        throw std::runtime_error("assemble: entry (" + std::to_string(i) + ", " +
                                 std::to_string(j) + "): " + err.what());
      }
      sys.matrix(i, j) = kij + (i == j ? Complex(0.5, 0.0) : Complex(0.0, 0.0));
      vmat(i, j) = vij;
    }
  }
  sys.rhs = vmat * sys.neumann;
  return sys;
}

// Dense LU solve with a residual check.
inline Eigen::VectorXcd solve(const DenseSystem& sys) {
  if (sys.matrix.rows() != sys.matrix.cols() || sys.matrix.rows() != sys.rhs.size())
    throw std::domain_error("solve: system not assembled");
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(sys.matrix);
  const Eigen::VectorXcd x = lu.solve(sys.rhs);
  const double resid = (sys.matrix * x - sys.rhs).norm();
  const double scale = sys.rhs.norm();
  if (scale > 0 && !(resid / scale < 1e-10))
    throw std::runtime_error("solve: residual above 1e-10 (numerically singular system)");
  return x;
}

inline double relative_l2_error(std::span<const Complex> approx,
                                std::span<const Complex> exact) {
  if (approx.size() != exact.size())
    throw std::domain_error("relative_l2_error: length mismatch");
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < approx.size(); ++i) {
    num += std::norm(approx[i] - exact[i]);
    den += std::norm(exact[i]);
  }
  if (!(den > 0)) throw std::domain_error("relative_l2_error: zero exact norm");
  return std::sqrt(num / den);
}

// ASCII mesh export: deduplicated vertex records "v idx x y z" followed by
// face records "f idx v1 v2 v3 kind radius vibrating".
inline void export_mesh(std::ostream& os, const Mesh& mesh) {
  os << "# curvquad cavity mesh\n";
  os << "# v <index> <x> <y> <z>\n";
  os << "# f <index> <v1> <v2> <v3> <curved|flat> <sphere_radius> <vibrating 0|1>\n";
  os << std::setprecision(17);
  std::map<std::array<long long, 3>, int> seen;
  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> faces;
  auto key_of = [](const Vec3& p) {
    return std::array<long long, 3>{static_cast<long long>(std::llround(p.x() * 1e12)),
                                    static_cast<long long>(std::llround(p.y() * 1e12)),
                                    static_cast<long long>(std::llround(p.z() * 1e12))};
  };
  for (const Element& e : mesh.elements) {
    std::array<int, 3> face;
    const auto v = e.vertices();
    for (int c = 0; c < 3; ++c) {
      const auto key = key_of(v[c]);
      auto it = seen.find(key);
      if (it == seen.end()) {
        it = seen.emplace(key, static_cast<int>(verts.size())).first;
        verts.push_back(v[c]);
      }
      face[c] = it->second;
    }
    faces.push_back(face);
  }
  for (size_t i = 0; i < verts.size(); ++i)
    os << "v " << i << ' ' << verts[i].x() << ' ' << verts[i].y() << ' ' << verts[i].z()
       << '\n';
  for (size_t i = 0; i < faces.size(); ++i)
    os << "f " << i << ' ' << faces[i][0] << ' ' << faces[i][1] << ' ' << faces[i][2] << ' '
       << (mesh.curved ? "curved" : "flat") << ' ' << mesh.sphere_radius[i] << ' '
       << int(mesh.vibrating[i]) << '\n';
}

// Solution export: "index,re,im,exact_re,exact_im" per collocation point.
inline void export_solution_csv(std::ostream& os, std::span<const Complex> solution,
                                std::span<const Complex> exact) {
  os << "index,re,im,exact_re,exact_im\n";
  os << std::setprecision(17);
  for (size_t i = 0; i < solution.size(); ++i) {
    os << i << ',' << solution[i].real() << ',' << solution[i].imag() << ','
       << (i < exact.size() ? exact[i].real() : 0.0) << ','
       << (i < exact.size() ? exact[i].imag() : 0.0) << '\n';
  }
}

}  // namespace curvquad
