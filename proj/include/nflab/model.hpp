// Benchmark Hamiltonian
//     H(I, phi) = (I1^2 + I2^2)/2 + I3 + eps / (4 + cos phi1 + cos phi2 + cos phi3)
// with frequency map omega(I) = (I1, I2, 1) and action Hessian diag(1, 1, 0).
// The perturbation's Fourier coefficients h_k (exponential convention,
// h_k = <F e^{-i k.phi}>) are real, invariant under permutations and sign
// flips of k, and decay like A e^{-sigma |k|_1} with sigma = arccosh(4/3)
// set by the complex singularity of 1/(4 + 3 cos).
#pragma once

#include <array>
#include <cstdio>
#include <vector>

#include "nflab/common.hpp"
#include "nflab/frame.hpp"
#include "nflab/series.hpp"

namespace nflab {

// Decay constants of the perturbation's Fourier spectrum. The envelope rate
// is exact for the slowest (diagonal) direction; 0.82 is a cruder
// semi-analytic estimate kept only for reference, nothing uses it.
inline constexpr double kFourierSigma = 0.795365;
inline constexpr double kFourierAmplitude = 0.05;
inline constexpr double kFourierSigmaSemiAnalytic = 0.82;

// Fourier coefficients tabulated on the fundamental wedge a >= b >= c >= 0
// with a + b + c <= kmax; every other k is reached through the symmetry
// group. Entries whose provable envelope falls below the zero threshold are
// stored as exact zeros and counted.
struct FourierTable {
    int kmax = 0;
    int64_t underflow_count = 0;
    std::vector<double> wedge;  // (kmax+1)^3 row-major, wedge cells only

    // Sorts |k| into the wedge and reads the entry; |k|_1 beyond the table
    // throws ConfigError.
    double coefficient(const Int3& k) const;
    double wedge_at(int a, int b, int c) const;
};

// Spectral quadrature of h_k on an N^3 periodic trapezoid grid, contracted
// one axis at a time against exact cosines. grid_points = 0 picks N as the
// smallest multiple of 32 at or above max(96, 2 kmax + 64), which drives the
// aliasing error below 1e-16 relative for every entry above the rounding
// floor; a nonzero grid_points overrides N (tests use coarse grids to probe
// the bookkeeping cheaply).
FourierTable compute_fourier_coefficients(int kmax, int grid_points = 0);

struct HamiltonianModel {
    double epsilon = 0.0;
    double fourier_A = kFourierAmplitude;
    double fourier_sigma = kFourierSigma;
    FourierTable table;

    int kmax_table() const { return table.kmax; }
    double fourier_coefficient(const Int3& k) const { return table.coefficient(k); }
};

HamiltonianModel make_model(double epsilon, int kmax_table, int grid_points = 0);

// Nearest integer to -ln(eps) / (2 sigma), clamped to at least 1: the grading
// step that balances e^{-sigma kprime} against eps^{1/2}.
int kprime_for(double epsilon, double sigma);

// Exact pieces of the model, used by integrators and as oracles.
double model_h0(const std::array<double, 3>& I);
std::array<double, 3> model_omega(const std::array<double, 3>& I);
double model_perturbation(const std::array<double, 3>& phi);
std::array<double, 3> model_perturbation_gradient(const std::array<double, 3>& phi);
double model_hamiltonian(const std::array<double, 3>& I,
                         const std::array<double, 3>& phi, double epsilon);

// Book-kept expansion of eps^{-1/2} [H(I* + eps^{1/2} J, phi) - H0(I*)]:
// omega* . J at order 0, eps^{1/2} (J1^2 + J2^2)/2 and the k = 0 constant at
// order 1, and each canonical harmonic 2 h_k cos(k . phi) scaled by eps^{1/2}
// at order |k|_1 / kprime + 1 (integer division). Harmonics are included up
// to |k|_1 = kprime * max_bk - 1, which the model's table must cover.
PoissonSeries build_rescaled_hamiltonian(const HamiltonianModel& model,
                                         const ResonantFrame& frame,
                                         int kprime, int max_bk);

// JSON layout: {"sigma": f64, "A": f64, "coeffs": [{"k": [a,b,c],
// "value": f64}, ...]} over the wedge, sorted by (|k|_1, lexicographic).
void write_fourier_json(std::FILE* out, const HamiltonianModel& model);

}  // namespace nflab
