// Resonant coordinate frames around a rational expansion point.
//
// A doubly resonant point I* has two independent integer wavevectors
// orthogonal to the frequency omega(I*) = (I1*, I2*, 1). The frame collects
// the shortest such pair (k1, k2), the transverse vector m = k1 x k2 reduced
// by its gcd, and the unimodular-up-to-scaling change of angles
// (phi_R1, phi_R2, phi_F) = B phi with rows k1, k2, m, together with the
// exact rational inverse used for the conjugate actions J_R = B^-T J.
// Keeping I* rational makes every resonance test exact integer arithmetic.
#pragma once

#include <array>
#include <cstdio>
#include <string>

#include "nflab/common.hpp"
#include "nflab/series.hpp"

namespace nflab {

// Reduced fraction, denominator always positive.
struct Rational {
    int64_t num = 0;
    int64_t den = 1;

    Rational() = default;
    Rational(int64_t n, int64_t d);
    explicit Rational(int64_t n) : num(n), den(1) {}

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const;

    bool operator==(const Rational&) const = default;
};

Rational operator+(const Rational& a, const Rational& b);
Rational operator-(const Rational& a, const Rational& b);
Rational operator*(const Rational& a, const Rational& b);
Rational operator/(const Rational& a, const Rational& b);

// Accepts "p/q", an integer, or a decimal literal ("2/5", "-3", "0.155").
Rational parse_rational(const std::string& text);

struct ResonantFrame {
    std::array<Rational, 3> i_star;
    std::array<Rational, 3> omega_star;
    std::array<std::array<double, 3>, 3> hessian;  // action Hessian of H0 at I*

    Int3 k1;
    Int3 k2;
    Int3 m;
    int64_t cross_gcd = 1;  // gcd removed from k1 x k2 to obtain m
    int64_t det = 0;        // determinant of the angle map, +-cross_gcd * |m|^2

    std::array<std::array<int64_t, 3>, 3> angle_map;           // rows k1, k2, m
    std::array<std::array<Rational, 3>, 3> angle_map_inverse;  // exact adjugate / det
    Rational m_dot_omega;

    std::array<double, 3> i_star_d() const;
    std::array<double, 3> omega_star_d() const;

    // phi_R = B phi and its inverse.
    std::array<double, 3> to_resonant_angles(const std::array<double, 3>& phi) const;
    std::array<double, 3> from_resonant_angles(const std::array<double, 3>& phi_r) const;

    // J_R = B^-T J and its inverse J = B^T J_R; canonical together with the
    // angle map, so J . dphi = J_R . dphi_R.
    std::array<double, 3> to_resonant_actions(const std::array<double, 3>& J) const;
    std::array<double, 3> from_resonant_actions(const std::array<double, 3>& J_r) const;
};

// Enumerates wavevectors with |k|_1 <= kmax_search that annihilate omega(I*)
// exactly and picks the linearly independent pair minimizing |k1|_1 + |k2|_1,
// with |k1|_1 <= |k2|_1 and ties broken lexicographically (smaller |k1|_1,
// then k1, then k2). m is oriented so that m . omega* > 0. Throws ConfigError
// when no independent pair exists within the search radius.
ResonantFrame build_resonant_frame(const std::array<Rational, 3>& i_star, int kmax_search);

// Rebuilds a frame from an already-chosen wavevector pair (as stored in
// checkpoints and frame files), validating resonance and independence and
// re-deriving every dependent field.
ResonantFrame frame_from_wavevectors(const std::array<Rational, 3>& i_star, const Int3& k1,
                                     const Int3& k2);

// JSON layout: {"i_star": [...], "omega_star": [...], "hessian": [[...]],
// "k1": [...], "k2": [...], "m": [...], "det": int, "cross_gcd": int,
// "m_dot_omega": "p/q", "angle_map_inverse": [["p/q", ...], ...]} with all
// rationals as strings. The reader re-derives the maps from i_star and the
// wavevectors and rejects files whose stored vectors break the invariants.
void write_frame_json(std::FILE* out, const ResonantFrame& frame);
ResonantFrame read_frame_json(const std::string& path);

}  // namespace nflab
