#pragma once
// Two-port network algebra: ABCD (chain) matrices, element builders and
// S-parameter conversion. ABCD is the canonical internal representation;
// S-parameters are computed at the boundaries only.

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace circrx {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

// Centralized tolerances.
namespace tol {
inline constexpr double reciprocity = 1e-9;
inline constexpr double unitarity = 1e-9;
inline constexpr double passivity = 1e-9;
inline constexpr double cascade_assoc = 1e-12;
}  // namespace tol

// Chain matrix of a two-port. b carries ohms, c carries siemens.
struct abcd {
  cplx a{1.0}, b{0.0}, c{0.0}, d{1.0};

  cplx det() const { return a * d - b * c; }

  abcd operator*(const abcd& rhs) const {
    return {a * rhs.a + b * rhs.c, a * rhs.b + b * rhs.d,
            c * rhs.a + d * rhs.c, c * rhs.b + d * rhs.d};
  }
};

inline abcd identity_abcd() { return {}; }

inline abcd series_impedance(cplx z) { return {1.0, z, 0.0, 1.0}; }

inline abcd shunt_admittance(cplx y) { return {1.0, 0.0, y, 1.0}; }

inline abcd cascade(std::span<const abcd> sections) {
  if (sections.empty()) throw std::invalid_argument("no sections");
  abcd m = sections[0];
  for (size_t i = 1; i < sections.size(); ++i) m = m * sections[i];
  return m;
}

inline abcd cascade(std::initializer_list<abcd> sections) {
  return cascade(std::span<const abcd>(sections.begin(), sections.size()));
}

// Ideal lossless line of characteristic impedance zc and electrical length
// theta (radians).
inline abcd tline_abcd(double zc, double theta) {
  if (zc <= 0.0) throw std::invalid_argument("tline_abcd: Zc must be > 0");
  const cplx j(0.0, 1.0);
  return {std::cos(theta), j * zc * std::sin(theta),
          j * std::sin(theta) / zc, std::cos(theta)};
}

// Shunt-C / series-L / shunt-C pi section at frequency f. A quarter-wave
// equivalent at f0 when w0*L = Zc and w0*C = 1/Zc. inductor_q > 0 adds a
// series resistance w*L/Q; q <= 0 means lossless.
inline abcd clc_pi_abcd(double l, double c, double f, double inductor_q = 0.0) {
  if (l <= 0.0 || c <= 0.0 || f <= 0.0)
    throw std::invalid_argument("clc_pi_abcd: L, C, f must be > 0");
  const double w = 2.0 * kPi * f;
  const cplx j(0.0, 1.0);
  cplx zl = j * w * l;
  if (inductor_q > 0.0) zl += w * l / inductor_q;
  const abcd sh = shunt_admittance(j * w * c);
  return sh * series_impedance(zl) * sh;
}

// Non-reciprocal 90-degree phase element: the N-path filter idealization for
// N -> infinity. Forward transmission picks up -90 degrees, reverse +90.
// det(abcd) = -1. sign=-1 matches the circulation sense TX -> ANT -> RX.
inline abcd gyrator_abcd(int sign = -1) {
  const cplx js(0.0, sign >= 0 ? 1.0 : -1.0);
  return {js, 0.0, 0.0, js};
}

struct sparams {
  cplx s11, s12, s21, s22;
  double zref{50.0};
};

inline sparams s_from_abcd(const abcd& m, double zref) {
  const cplx den = m.a + m.b / zref + m.c * zref + m.d;
  if (std::abs(den) < 1e-300) throw std::domain_error("degenerate network");
  sparams s;
  s.zref = zref;
  s.s11 = (m.a + m.b / zref - m.c * zref - m.d) / den;
  s.s21 = 2.0 * m.det() / den;
  s.s12 = 2.0 / den;
  s.s22 = (-m.a + m.b / zref - m.c * zref + m.d) / den;
  return s;
}

// Inverse conversion. Requires s12 != 0.
inline abcd abcd_from_s(const sparams& s) {
  if (std::abs(s.s12) < 1e-300) throw std::domain_error("degenerate network");
  const double z0 = s.zref;
  const cplx f = 2.0 * s.s12;
  abcd m;
  m.a = ((1.0 + s.s11) * (1.0 - s.s22) + s.s12 * s.s21) / f;
  m.b = z0 * ((1.0 + s.s11) * (1.0 + s.s22) - s.s12 * s.s21) / f;
  m.c = ((1.0 - s.s11) * (1.0 - s.s22) - s.s12 * s.s21) / (z0 * f);
  m.d = ((1.0 - s.s11) * (1.0 + s.s22) + s.s12 * s.s21) / f;
  // note: non-reciprocal conversion maps det -> s21/s12 consistently
  return m;
}

// Largest singular value of the 2x2 S-matrix; <= 1 (+tol) for a passive
// network.
inline double max_singular_value(const sparams& s) {
  // Singular values of M from eigenvalues of M^H M (2x2 hermitian).
  const double a = std::norm(s.s11) + std::norm(s.s21);
  const double d = std::norm(s.s12) + std::norm(s.s22);
  const cplx b = std::conj(s.s11) * s.s12 + std::conj(s.s21) * s.s22;
  const double tr = a + d;
  const double disc = std::sqrt(std::max(0.0, (a - d) * (a - d) / 4.0 + std::norm(b)));
  return std::sqrt(std::max(0.0, tr / 2.0 + disc));
}

inline bool is_passive(const sparams& s) {
  return max_singular_value(s) <= 1.0 + tol::passivity;
}

inline double db20(double x) { return 20.0 * std::log10(x); }
inline double db20(cplx x) { return 20.0 * std::log10(std::abs(x)); }
inline double db10(double x) { return 10.0 * std::log10(x); }
inline double deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace circrx
