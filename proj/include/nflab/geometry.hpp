// Closed-form resonance geometry around a doubly resonant point.
//
// Everything here is an explicit formula in the frame data: signature
// classification of the action Hessian restricted to the resonant plane,
// the quadratic form a_ij = k_i . M k_j of the resonant actions, widths of
// resonant strips, the overlap threshold energy, and the heuristic
// random-walk diffusion estimates for doubly and simply resonant domains.
// All functions are pure; repeated calls with equal inputs are bit
// identical.
#pragma once

#include <array>
#include <cstdio>
#include <map>
#include <utility>

#include "nflab/frame.hpp"
#include "nflab/model.hpp"

namespace nflab {

using Matrix3 = std::array<std::array<double, 3>, 3>;

// Signature of a symmetric action Hessian together with the positive
// definiteness certificate of its restriction to the plane spanned by two
// resonance wavevectors. The restricted form
//   zeta(x, y) = (1/2) sum_ij M_ij (k1_i x + k2_i y)(k1_j x + k2_j y)
// has discriminant V^2 - 4 Q P in the basis zeta = Q x^2 + V x y + P y^2,
// which is negative exactly when the form is definite.
struct ConvexityReport {
    std::array<double, 3> eigenvalues;  // of M, ascending
    double mu_min = 0.0;                // smallest nonzero |eigenvalue|
    double mu_max = 0.0;                // largest nonzero |eigenvalue|
    bool quasi_convex = false;
    double discriminant = 0.0;          // V^2 - 4QP of the restricted form
};

// Inputs and outputs of the overlap-driven random-walk estimate in a doubly
// resonant domain. Widths are keyed by the canonical harmonic pair (n1, n2)
// with first nonzero component positive and |n1| + |n2| <= 3; the width is
// even under joint negation so the canonical key loses nothing.
struct DoubleResonanceEstimate {
    double a11 = 0.0, a12 = 0.0, a22 = 0.0;
    // centre of the constant-energy ellipses per unit J_F
    double center_slope_r1 = 0.0;
    double center_slope_r2 = 0.0;
    std::map<std::pair<int, int>, double> widths;
    double k12 = 0.0;      // (|k1| + |k2|) / 2, 1-norms
    double Mh = 0.0;       // (mu_min + mu_max) / 2
    double E_crit = 0.0;   // overlap threshold energy
    double n_eff = 1.0;    // order of the dominant resonances
    double T_period = 0.0; // resonant oscillation period scale
    double N_steps = 0.0;  // random-walk steps to cross one threshold gap
    double Delta_E = 0.0;  // rms energy spread after N_steps
    double D_estimate = 0.0;
};

// Chirikov-style estimate along a simple resonance. The remainder norm acts
// through the separatrix splitting of the guiding resonance; the exponent of
// the final power law is p = 2 (1 + b).
struct SimpleResonanceEstimate {
    double main_width = 0.0;    // guiding-resonance strip width
    double f_R1 = 0.0;          // guiding harmonic amplitude A e^{-sigma |k1|}
    double Omega_G = 0.0;       // small-oscillation frequency eps^{1/4} f_R1^{1/2}
    double T_layer = 0.0;       // period inside the separatrix layer
    double kappa_l = 0.0;       // leading remainder harmonic in resonant angles
    double melnikov_amp = 0.0;  // 8 pi kappa_l e^{-pi kappa_l / 2}
    double b = 0.5;             // splitting exponent knob
    double p = 3.0;             // reported power law 2 (1 + b)
    // The delay constant relating the leading remainder harmonic to the
    // optimal truncation, |k_l| = (1 - delay_d) K_opt. No published value
    // exists; it is carried for reporting and enters no computed field.
    double delay_d = 0.0;
    double D_estimate = 0.0;
};

// Eigendecomposes M and classifies its signature: quasi convex means the
// nonzero eigenvalues share one sign and at most one eigenvalue vanishes.
// The discriminant certificate is assembled from the eigenbasis; under
// quasi convexity it is negative for every independent pair. Throws
// ConfigError when k1 and k2 are parallel.
ConvexityReport check_quasi_convexity(const Matrix3& M, const Int3& k1,
                                      const Int3& k2);

// The three contractions a11 = k1.Mk1, a12 = k1.Mk2, a22 = k2.Mk2 of the
// frame Hessian.
std::array<double, 3> quadratic_form_coefficients(const ResonantFrame& frame);

enum class WidthKind {
    separatrix,  // swing of the pendulum action itself
    strip,       // resulting strip width in the resonant-action plane
    simplified,  // order-only estimate through the mean Hessian scale
};

// Width of the (n1, n2) resonant strip for harmonics decaying like
// A e^{-sigma |k|}. The strip width is
//   sqrt(32 A (n1^2 + n2^2) / (a11 n1^2 + 2 a12 n1 n2 + a22 n2^2))
//     * e^{-(|n1| |k1| + |n2| |k2|) sigma / 2},
// the separatrix variant drops the sqrt(n1^2 + n2^2) factor, and the
// simplified variant replaces the quadratic form by the mean eigenvalue
// scale, sqrt(32 A) / (Mh k12) e^{-(|n1|+|n2|) k12 sigma / 2}. Throws
// ConfigError for (0, 0) and NumericError when the quadratic form is not
// positive on the requested harmonic.
double resonance_width(const ResonantFrame& frame, int n1, int n2,
                       double A_decay, double sigma_decay,
                       WidthKind kind = WidthKind::strip);

// Threshold energy below which neighbouring resonant strips cover the whole
// constant-energy ellipse,
//   E_c = 32 sqrt(eps A) / (pi k12 sigma) e^{-k12 sigma / 2}.
double critical_energy(const ResonantFrame& frame, double epsilon,
                       double A_decay, double sigma_decay);

// Centre (J_R1, J_R2) of the constant-energy ellipses for the given fast
// action. Linear in J_F; the slow frequencies vanish there. Throws
// NumericError when the quadratic form is singular.
std::array<double, 2> ellipse_center(const ResonantFrame& frame, double J_F);

// Random-walk diffusion estimate in a doubly resonant domain,
//   D = sqrt(eps A e^{-n_eff k12 sigma}) |R|^2,
// together with the intermediate period, step count, and energy spread of
// the derivation. Throws ConfigError unless R_opt_norm > 0.
DoubleResonanceEstimate diffusion_estimate_double(const ResonantFrame& frame,
                                                  double epsilon,
                                                  double R_opt_norm,
                                                  double A_decay,
                                                  double sigma_decay,
                                                  double n_eff = 1.0);

// Chirikov estimate along the guiding resonance k1,
//   D = eps / (2 Omega_G^2 T) * eps^{3/4} |R|^{2 (1 + b)},
// with the layer period computed at a layer width equal to the guiding
// strip width. The leading remainder harmonic kappa_l is inferred from
// |R| ~ e^{-sigma K} as kappa_l = -ln |R| / (sigma |k1|). Throws
// ConfigError unless R_opt_norm > 0 and 0 <= b <= 1.
SimpleResonanceEstimate diffusion_estimate_simple(const ResonantFrame& frame,
                                                  double epsilon,
                                                  double R_opt_norm,
                                                  double b = 0.5,
                                                  double A_decay = kFourierAmplitude,
                                                  double sigma_decay = kFourierSigma);

// Writes the three records as one JSON document:
// {"convexity": {"eigenvalues", "mu_min", "mu_max", "quasi_convex",
//  "discriminant"}, "double_resonance": {"a11", "a12", "a22",
//  "center_slope_r1", "center_slope_r2", "widths": [{"n1", "n2", "width"}],
//  "k12", "Mh", "E_crit", "n_eff", "T_period", "N_steps", "Delta_E",
//  "D_estimate"}, "simple_resonance": {"main_width", "f_R1", "Omega_G",
//  "T_layer", "kappa_l", "melnikov_amp", "b", "p", "delay_d",
//  "D_estimate"}}. Throws ResourceError on write failure.
void write_geometry_json(std::FILE* out, const ConvexityReport& convexity,
                         const DoubleResonanceEstimate& double_res,
                         const SimpleResonanceEstimate& simple_res);

}  // namespace nflab
