// Numeric evaluation of the composed canonical transformations produced by
// the normalizer. The generator flows are applied to the six coordinate
// functions once, giving series that map points between the original and
// the normalized chart; on top of that sit the resonant-variable
// decomposition and the two slow observables (normal-form energy and the
// fast action) evaluated along sampled orbits, where the transformation
// strips the fast oscillations that would otherwise bury the drift.
#pragma once

#include <array>
#include <cstdio>
#include <limits>
#include <vector>

#include "nflab/frame.hpp"
#include "nflab/normalizer.hpp"
#include "nflab/series.hpp"

namespace nflab {

// The images of the six coordinate functions under a composed generator
// flow. Actions are stored whole; for angles only the correction added to
// the bare coordinate is a series, the identity part stays implicit.
struct CoordinateTransform {
    std::array<PoissonSeries, 3> action_image;
    std::array<PoissonSeries, 3> angle_correction;
    int order = 0;       // generators applied
    bool to_new = false; // true for the original -> normalized direction
    // Smallest action radius at which some coordinate series has its two
    // highest grading blocks growing (majorant tail ratio above one);
    // evaluation beyond it raises a divergence error.
    double divergence_radius = std::numeric_limits<double>::infinity();
};

// Composes the first `order` generators (default: all of them) into
// coordinate series. The normalized chart is reached by applying the
// negated generators in descending order; the way back applies them
// positively in ascending order. Throws ConfigError when more generators
// are requested than the state holds.
CoordinateTransform old_to_new_transform(const NormalizationState& state,
                                         int order = -1);
CoordinateTransform new_to_old_transform(const NormalizationState& state,
                                         int order = -1);

struct MappedPoint {
    std::array<double, 3> J{};
    std::array<double, 3> phi{};  // not reduced, so round trips compare raw
    bool outside_domain = false;
};

// Evaluates the coordinate series at a numeric point. A point whose action
// radius hypot(J1, J2) exceeds rho_b is still mapped but flagged. A point
// beyond the transform's divergence radius raises NumericError instead of
// returning a number the graded expansion cannot back.
MappedPoint apply_transform(const CoordinateTransform& transform,
                            const std::array<double, 3>& J,
                            const std::array<double, 3>& phi,
                            double rho_b = 0.4);

// One-shot conveniences that build the full-order transform and apply it.
// For many points build the transform once and use apply_transform.
MappedPoint old_to_new(const NormalizationState& state,
                       const std::array<double, 3>& J_old,
                       const std::array<double, 3>& phi_old);
MappedPoint new_to_old(const NormalizationState& state,
                       const std::array<double, 3>& J_new,
                       const std::array<double, 3>& phi_new);

// Linear resonant decomposition of a point: angles are the integer
// combinations k1 . phi, k2 . phi, m . phi (raw, not reduced) and actions
// solve the transposed system, so that J = k1 J_R1 + k2 J_R2 + m J_F.
struct ResonantPoint {
    double J_R1 = 0.0, J_R2 = 0.0, J_F = 0.0;
    double phi_R1 = 0.0, phi_R2 = 0.0, phi_F = 0.0;
};
ResonantPoint resonant_variables(const ResonantFrame& frame,
                                 const std::array<double, 3>& J,
                                 const std::array<double, 3>& phi);

// Normal-form energy at a point of the normalized chart: the stored normal
// form evaluated there minus (m . omega*) J_F, which removes the fast
// linear part and leaves the slow quasi-integral.
double normal_form_energy(const NormalizationState& state,
                          const ResonantFrame& frame,
                          const std::array<double, 3>& J,
                          const std::array<double, 3>& phi);

// One stored point of a numerically integrated orbit, in non-rescaled
// variables.
struct OrbitSample {
    double t = 0.0;
    std::array<double, 3> I{};
    std::array<double, 3> phi{};
};

enum class SampleFlag { ok, outside_domain, divergent };

struct TransformedSample {
    double t = 0.0;
    std::array<double, 3> J_new{};
    std::array<double, 3> phi_new{};
    double J_R1 = 0.0, J_R2 = 0.0, J_F = 0.0;
    double phi_R1 = 0.0, phi_R2 = 0.0, phi_F = 0.0;  // unwrapped in sequence
    double E_Z = 0.0;
    double rho = 0.0;  // action radius of the rescaled input point
    SampleFlag flag = SampleFlag::ok;
};

// Rescales each sample around the frame's torus (J = (I - I*) / sqrt(eps)),
// maps it to the normalized chart, and attaches resonant variables and the
// normal-form energy. A sample outside rho_b = 0.4 is flagged, a divergent
// one keeps its untransformed coordinates and is flagged; nothing aborts,
// downstream statistics filter on the flag. Resonant angles are unwrapped
// by continuity from sample to sample. Samples are processed in parallel;
// the result does not depend on the thread count.
std::vector<TransformedSample> sample_orbit(const NormalizationState& state,
                                            const ResonantFrame& frame,
                                            const std::vector<OrbitSample>& samples,
                                            double epsilon);

// CSV rows "t,J_R1,J_R2,J_F,phi_R1,phi_R2,phi_F,E_Z,rho,flag" with a header
// line; flag prints as ok/outside/divergent. Throws ResourceError on write
// failure.
void write_samples_csv(std::FILE* out,
                       const std::vector<TransformedSample>& samples);

// Triples "phi_R1,J_R1,E_Z" for the slow-plane visualization export.
void write_viz_csv(std::FILE* out,
                   const std::vector<TransformedSample>& samples);

}  // namespace nflab
