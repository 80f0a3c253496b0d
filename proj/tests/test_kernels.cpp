#include <catch2/catch_amalgamated.hpp>

#include <curvquad/kernels.hpp>

#include "support/oracles.hpp"

#include <random>

using namespace curvquad;
namespace oracle = curvquad::testing;

namespace {

// Synthesize a geometrically consistent frame (r^2 = rho^2 + h^2, right-handed
// triad) without an element; the field identities are pointwise in the frame.
LocalFrame synth_frame(std::mt19937_64& rng, double log_rho_lo = -6, double log_rho_hi = 0.3,
                       bool allow_negative_h = true) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const Vec3 n = oracle::random_unit(rng);
  Vec3 t = oracle::random_unit(rng);
  t -= t.dot(n) * n;
  t.normalize();
  LocalFrame fr;
  fr.n = n;
  fr.rho_hat = t;
  fr.rho_tilde = n.cross(t);
  fr.rho = std::pow(10.0, log_rho_lo + (log_rho_hi - log_rho_lo) * uni(rng));
  double h = (uni(rng) * 2.0 - 1.0);
  if (!allow_negative_h) h = std::abs(h);
  if (h < 0 && fr.rho < 0.3 * std::abs(h)) h = -h;  // stay away from the pole
  fr.h = h;
  fr.r = std::hypot(fr.rho, fr.h);
  fr.rho_vec = fr.rho * fr.rho_hat;
  fr.q = Vec3::Zero();
  return fr;
}

const Kernel kLap = Kernel::laplace();
const Kernel kHelm = Kernel::helmholtz(2.0);

// Eigen's cross() conjugates complex operands; spell the real cross product out.
CVec3 ccross(const Vec3& a, const CVec3& b) {
  return CVec3(a.y() * b.z() - a.z() * b.y(), a.z() * b.x() - a.x() * b.z(),
               a.x() * b.y() - a.y() * b.x());
}

}  // namespace

TEST_CASE("green examples") {
  CHECK(green(kLap, Vec3(0, 0, 0), Vec3(1, 0, 0)).real() ==
        Catch::Approx(0.079577471545948).margin(1e-14));
  CHECK(green(kLap, Vec3(0, 0, 0), Vec3(1, 0, 0)).imag() == 0.0);

  const Complex gh = green(Kernel::helmholtz(1e-8), Vec3(0, 0, 0), Vec3(0.7, 0, 0));
  const Complex gl = green(kLap, Vec3(0, 0, 0), Vec3(0.7, 0, 0));
  CHECK(std::abs(gh - gl) < 1e-8 * std::abs(gl));

  const Complex g2 = green(kHelm, Vec3(0, 0, 0), Vec3(0.5, 0, 0));
  CHECK(g2.real() == Catch::Approx(std::cos(1.0) / (2 * M_PI)).epsilon(1e-14));
  CHECK(g2.imag() == Catch::Approx(std::sin(1.0) / (2 * M_PI)).epsilon(1e-14));

  CHECK_THROWS_AS(green(kLap, Vec3(1, 2, 3), Vec3(1, 2, 3)), SingularEvaluationError);
  CHECK_THROWS_AS(Kernel::helmholtz(-1.0), std::domain_error);
}

TEST_CASE("green_dn examples") {
  // h = 0: evaluation point in the tangent plane
  CHECK(std::abs(green_dn(kLap, Vec3(1, 0, 0), Vec3(0, 0, 0), Vec3(0, 0, 1))) < 1e-16);
  CHECK(green_dn(kLap, Vec3(0, 0, 1), Vec3(0, 0, 0), Vec3(0, 0, 1)).real() ==
        Catch::Approx(1.0 / (4 * M_PI)).epsilon(1e-14));
  const Complex dh = green_dn(Kernel::helmholtz(1e-8), Vec3(0.3, 0.2, 0.9), Vec3(0, 0, 0),
                              Vec3(0, 0, 1));
  const Complex dl = green_dn(kLap, Vec3(0.3, 0.2, 0.9), Vec3(0, 0, 0), Vec3(0, 0, 1));
  CHECK(std::abs(dh - dl) < 1e-8 * std::abs(dl));
}

TEST_CASE("decomposition_fields: closed-form spot checks") {
  std::mt19937_64 rng(3);
  // Laplace single at h = 0: C = 0, D = 1, f = rho_tilde * rho/(4 pi r)
  LocalFrame fr = synth_frame(rng);
  fr.h = 0.0;
  fr.r = fr.rho;
  const auto df = decomposition_fields(kLap, Layer::Single, fr);
  CHECK(std::abs(df.C) < 1e-15);
  CHECK(std::abs(df.D - 1.0) < 1e-15);
  const CVec3 expect = (fr.rho / (4 * M_PI * fr.r)) * fr.rho_tilde.cast<Complex>();
  CHECK((df.f - expect).norm() < 1e-15);

  // Helmholtz single, k -> 0 matches Laplace
  const Kernel tiny = Kernel::helmholtz(1e-6);
  for (int i = 0; i < 50; ++i) {
    const LocalFrame f2 = synth_frame(rng);
    const auto lap = decomposition_fields(kLap, Layer::Single, f2);
    const auto hel = decomposition_fields(tiny, Layer::Single, f2);
    CHECK(std::abs(hel.C - lap.C) < 1e-5 * (1 + std::abs(lap.C)));
    CHECK(std::abs(hel.D - lap.D) < 1e-5 * (1 + std::abs(lap.D)));
    CHECK((hel.f - lap.f).norm() < 1e-5 * (1 + lap.f.norm()));
  }

  // Helmholtz single, rho -> 0 with h > 0: C, D -> e^{ikh}/2
  LocalFrame f3 = synth_frame(rng);
  f3.h = 0.8;
  f3.rho = 1e-9;
  f3.r = std::hypot(f3.rho, f3.h);
  f3.rho_vec = f3.rho * f3.rho_hat;
  const auto d3 = decomposition_fields(kHelm, Layer::Single, f3, 1.0);
  const Complex lim = std::polar(0.5, kHelm.k * f3.h);
  CHECK(std::abs(d3.C - lim) < 1e-10);
  CHECK(std::abs(d3.D - lim) < 1e-10);
  // cross-check against the textbook formula at rho = 1e-4 h
  LocalFrame f4 = f3;
  f4.rho = 1e-4 * f4.h;
  f4.r = std::hypot(f4.rho, f4.h);
  f4.rho_vec = f4.rho * f4.rho_hat;
  const auto stable = decomposition_fields(kHelm, Layer::Single, f4);
  const auto naive = decomposition_fields_direct(kHelm, Layer::Single, f4);
  CHECK(std::abs(stable.C - naive.C) < 1e-7 * std::abs(stable.C));
  CHECK(std::abs(stable.D - naive.D) < 1e-7 * std::abs(stable.D));
}

TEST_CASE("C+D closed-form identities over 1e5 random frames") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100000; ++i) {
    const LocalFrame fr = synth_frame(rng);
    const int combo = i % 4;
    if (combo == 0) {
      const auto df = decomposition_fields(kLap, Layer::Single, fr);
      CHECK(std::abs(df.C + df.D - 1.0) <= 1e-12);
    } else if (combo == 1) {
      const auto df = decomposition_fields(kLap, Layer::Double, fr);
      CHECK(std::abs(df.C + df.D - 1.0 / fr.r) <= 1e-12 / fr.r);
    } else if (combo == 2) {
      const auto df = decomposition_fields(kHelm, Layer::Single, fr);
      const Complex expect = std::polar(1.0, kHelm.k * fr.h);
      CHECK(std::abs(df.C + df.D - expect) <= 1e-12);
    } else {
      const auto df = decomposition_fields(kHelm, Layer::Double, fr);
      const Complex expect = std::polar(1.0, kHelm.k * fr.r) / fr.r -
                             Complex(0, kHelm.k) * std::polar(1.0, kHelm.k * fr.h);
      CHECK(std::abs(df.C + df.D - expect) <= 1e-12 * (1.0 / fr.r + kHelm.k));
    }
  }
}

TEST_CASE("contour field is parallel to rho_tilde") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const LocalFrame fr = synth_frame(rng);
    const Kernel& kern = (i % 2) ? kHelm : kLap;
    const Layer layer = (i / 2) % 2 ? Layer::Double : Layer::Single;
    const auto df = decomposition_fields(kern, layer, fr);
    const double mag = df.f.norm();
    CHECK(std::abs(fr.rho_hat.cast<Complex>().dot(df.f)) <= 1e-12 * mag + 1e-300);
    CHECK(std::abs(fr.n.cast<Complex>().dot(df.f)) <= 1e-12 * mag + 1e-300);
  }
}

TEST_CASE("pseudo_field: n x m = f for all four combos") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 10000; ++i) {
    const LocalFrame fr = synth_frame(rng);
    const Kernel& kern = (i % 2) ? kHelm : kLap;
    const Layer layer = (i / 2) % 2 ? Layer::Double : Layer::Single;
    const auto df = decomposition_fields(kern, layer, fr);
    const auto pf = pseudo_field(kern, layer, fr);
    const CVec3 cross = ccross(fr.n, pf.m);
    CHECK((cross - df.f).norm() <= 1e-12 * (df.f.norm() + 1e-300));
    // m itself is parallel to rho_hat
    CHECK(std::abs(fr.rho_tilde.cast<Complex>().dot(pf.m)) <= 1e-12 * pf.m.norm() + 1e-300);
  }
}

TEST_CASE("pseudo_field spot checks") {
  std::mt19937_64 rng(11);
  LocalFrame fr = synth_frame(rng);
  fr.h = 0.0;
  fr.r = fr.rho;
  const auto pf = pseudo_field(kLap, Layer::Single, fr);
  const CVec3 expect = (1.0 / (4 * M_PI)) * fr.rho_hat.cast<Complex>();
  CHECK((pf.m - expect).norm() < 1e-14);

  const Kernel tiny = Kernel::helmholtz(1e-6);
  for (int i = 0; i < 50; ++i) {
    const LocalFrame f2 = synth_frame(rng);
    const auto lap = pseudo_field(kLap, Layer::Double, f2);
    const auto hel = pseudo_field(tiny, Layer::Double, f2);
    CHECK((hel.m - lap.m).norm() < 1e-5 * (1 + lap.m.norm()));
  }
}

TEST_CASE("small-rho branch continuity around the switch") {
  std::mt19937_64 rng(13);
  // compare the series and exact phase paths in a band around rho_switch
  for (int i = 0; i < 200; ++i) {
    LocalFrame fr = synth_frame(rng);
    fr.h = 0.5 + 0.5 * std::abs(fr.h);
    std::uniform_real_distribution<double> band(0.3e-4, 3e-4);
    fr.rho = band(rng) * fr.h;
    fr.r = std::hypot(fr.rho, fr.h);
    fr.rho_vec = fr.rho * fr.rho_hat;
    for (Layer layer : {Layer::Single, Layer::Double}) {
      const auto lo = decomposition_fields(kHelm, layer, fr, 1e9);  // forces series
      const auto hi = decomposition_fields(kHelm, layer, fr, 0.0);  // forces exact phase
      CHECK(std::abs(lo.C - hi.C) <= 1e-10 * (std::abs(hi.C) + 1e-300));
      CHECK(std::abs(lo.D - hi.D) <= 1e-10 * (std::abs(hi.D) + 1e-300));
      CHECK((lo.f - hi.f).norm() <= 1e-10 * (hi.f.norm() + 1e-300));
    }
  }
}

TEST_CASE("stable and textbook forms agree at moderate rho") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 2000; ++i) {
    const LocalFrame fr = synth_frame(rng, -2, 0.3);
    const Kernel& kern = (i % 2) ? kHelm : kLap;
    const Layer layer = (i / 2) % 2 ? Layer::Double : Layer::Single;
    const auto a = decomposition_fields(kern, layer, fr);
    const auto b = decomposition_fields_direct(kern, layer, fr);
    const double scale = std::abs(a.C) + std::abs(a.D) + 1e-300;
    CHECK(std::abs(a.C - b.C) <= 1e-9 * scale);
    CHECK(std::abs(a.D - b.D) <= 1e-9 * scale);
    CHECK((a.f - b.f).norm() <= 1e-9 * (a.f.norm() + 1e-300));
  }
}

TEST_CASE("inward-bundle pole raises an error") {
  std::mt19937_64 rng(19);
  LocalFrame fr = synth_frame(rng);
  fr.h = -1.0;
  fr.rho = 1e-8;
  fr.r = std::hypot(fr.rho, fr.h);
  fr.rho_vec = fr.rho * fr.rho_hat;
  CHECK_THROWS_AS(decomposition_fields(kLap, Layer::Single, fr), InwardBundleError);
  CHECK_THROWS_AS(decomposition_fields(kHelm, Layer::Double, fr), InwardBundleError);
}

TEST_CASE("decomposition_residual: flat element") {
  const Element flat = Element::flat(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0));
  const double res = decomposition_residual(flat, kLap, Layer::Single, 0.4, 0.3,
                                            Vec3(0.2, 0.25, 0.6));
  CHECK(res < 1e-9);
}

TEST_CASE("decomposition_residual: element 1, all combos, h/d in [0.1, 2]") {
  const Element e = Element::paraboloid(-0.6);
  const GeometrySample s0 = e.sample(0.2, 0.3);
  const double d = e.diameter();
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> hod(0.1, 2.0);
  for (const Kernel& kern : {kLap, kHelm}) {
    for (Layer layer : {Layer::Single, Layer::Double}) {
      double worst = 0;
      for (int i = 0; i < 25; ++i) {
        const Vec2 uv = oracle::random_interior_uv(rng, 0.1);
        const Vec3 p = s0.r + hod(rng) * d * s0.normal;
        worst = std::max(worst,
                         decomposition_residual(e, kern, layer, uv.x(), uv.y(), p, 1e-5));
      }
      CHECK(worst < 1e-6);
    }
  }
}

TEST_CASE("decomposition_residual scales as O(delta^2)") {
  const Element e = Element::paraboloid(0.6);
  const GeometrySample s0 = e.sample(0.2, 0.3);
  const Vec3 p = s0.r + 0.5 * e.diameter() * s0.normal;
  const double r1 = decomposition_residual(e, kHelm, Layer::Double, 0.35, 0.4, p, 2e-4);
  const double r2 = decomposition_residual(e, kHelm, Layer::Double, 0.35, 0.4, p, 1e-4);
  CHECK(r2 < 0.4 * r1);
  CHECK_THROWS_AS(decomposition_residual(e, kLap, Layer::Single, 0.0, 0.0, p, 1e-5),
                  std::domain_error);
}
