// Long-time integration of the benchmark Hamiltonian and of truncated
// normal forms.
//
// The full flow is split as H = H0(I) + eps B(phi), which both parts solve
// exactly; a sixth-order palindromic composition of leapfrogs advances
// (I, phi) and, on demand, the deviation vector through the exact tangent
// of each sub-map. Chaos indicators come from the running sup of the
// deviation norm. The reduced two degree of freedom flow of a normal form
// series runs under an adaptive high-order scheme with energy monitoring,
// recording Poincare sections with bisection-refined event times.
#pragma once

#include <array>
#include <cstdio>
#include <vector>

#include "nflab/frame.hpp"
#include "nflab/series.hpp"

namespace nflab {

// One orbit of the full flow, in non-rescaled actions. The deviation vector
// xi stacks (dphi, dI); the default points along dI1 so that even the
// integrable limit shears it linearly. Angles stay reduced to [0, 2pi).
struct OrbitState {
    std::array<double, 3> I{};
    std::array<double, 3> phi{};
    std::array<double, 6> xi = {0.0, 0.0, 0.0, 1.0, 0.0, 0.0};
    double t = 0.0;
};

// Builds a state at t = 0 with angles reduced and the default deviation.
OrbitState make_orbit(const std::array<double, 3>& I,
                      const std::array<double, 3>& phi);

// Advances (I, phi) one step of the sixth-order splitting. Throws
// ConfigError when dt is not positive finite.
OrbitState step_flow(const OrbitState& state, double epsilon, double dt);

// Advances (I, phi) and the deviation vector together, each sub-map paired
// with its exact Jacobian action.
OrbitState step_tangent(const OrbitState& state, double epsilon, double dt);

// log10 of the running sup of |xi| over [0, t_final]. The initial deviation
// is normalized to unit length first; a vanishing one is a ConfigError. On
// overflow of |xi| the value at the overflow time is returned, still a valid
// chaos marker.
double fli(const OrbitState& initial, double epsilon, double t_final,
           double dt);

// Rectangular grid of initial actions for an FLI survey. Angles start at
// phi0 for every node; i3 is the (dummy) third action. Endpoints are
// inclusive; a count of one collapses the axis to its minimum. color_bins
// holds the conventional thresholds separating ordered from chaotic nodes
// in rendered maps; section_halfwidth documents the |phi1| + |phi2| window
// used when map points seed section-based tools.
struct FliMapSpec {
    double i1_min = 0.0, i1_max = 1.0;
    int n1 = 1;
    double i2_min = 0.0, i2_max = 1.0;
    int n2 = 1;
    double i3 = 0.0;
    std::array<double, 3> phi0 = {0.0, 0.0, 0.0};
    double t_final = 1000.0;
    double dt = 0.1;
    std::array<double, 4> color_bins = {2.0, 3.0, 4.0, 5.0};
    double section_halfwidth = 0.1;
};

// FLI per node, I1-major: value(i1 index a, i2 index b) = out[a * n2 + b].
// Nodes are independent jobs on the worker pool; the result does not depend
// on the thread count. Throws ConfigError on non-positive counts, times, or
// an empty axis range.
std::vector<double> fli_map(const FliMapSpec& spec, double epsilon);

// CSV rows "I1,I2,FLI" in the same order as fli_map's result, with a header
// line. Throws ConfigError on a size mismatch and ResourceError on write
// failure.
void write_fli_map_csv(std::FILE* out, const FliMapSpec& spec,
                       const std::vector<double>& values);

// State of the reduced normal-form flow: two resonant pairs plus the fast
// action, which the flow keeps constant.
struct NormalFormState {
    double J_R1 = 0.0, J_R2 = 0.0;
    double phi_R1 = 0.0, phi_R2 = 0.0;
    double J_F = 0.0;
};

struct SectionPoint {
    double phi_R1 = 0.0;  // reduced to [0, 2pi)
    double J_R1 = 0.0;
    double t = 0.0;
};

struct NormalFormOrbit {
    std::vector<SectionPoint> sections;
    NormalFormState final_state;
    double E_initial = 0.0;  // normal form energy at the initial state
    double max_drift = 0.0;  // largest |E(t) - E_initial| seen
};

// Integrates the two degree of freedom reduction of Z at fixed J_F with an
// adaptive eighth-order Runge-Kutta, sampling every dt. A section point is
// recorded whenever phi_R2 - 2 phi_R1 crosses a multiple of 2 pi, with the
// event time bisected to 1e-9. The energy of Z is monitored at every
// sample; drift beyond 1e-9 relative restarts the run with tighter
// tolerances and, failing that, raises NumericError. A positive
// max_sections stops the run once that many points are collected. Z is
// expected to be angle-resonant (every wavevector orthogonal to frame.m);
// the fast angle is pinned to zero.
NormalFormOrbit normal_form_flow(const PoissonSeries& Z,
                                 const ResonantFrame& frame,
                                 const NormalFormState& initial,
                                 double t_final, double dt,
                                 int max_sections = 0);

// CSV rows "phi_R1,J_R1,t" with a header line. Throws ResourceError on
// write failure.
void write_sections_csv(std::FILE* out, const NormalFormOrbit& orbit);

}  // namespace nflab
