#include "nflab/transformer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>

#include "nflab/common.hpp"
#include "nflab/parallel.hpp"

namespace nflab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

PoissonSeries action_coordinate(const TruncationPolicy& policy, int i) {
    PoissonSeries g(policy);
    Int3 alpha{};
    alpha[i] = 1;
    g.add_term(0, {0, 0, 0}, alpha, 1.0, 0.0);
    return g;
}

// Series part of the generator flow applied to the bare angle phi_i. The
// identity coordinate is not a series, so the exponential is seeded one
// bracket in: {phi_i, chi} = dchi/dJ_i, then the same factorial recurrence
// as for whole series.
PoissonSeries angle_tail(const PoissonSeries& chi, int i) {
    PoissonSeries term = partial_derivative(chi, static_cast<Variable>(i));
    PoissonSeries tail = term;
    int max_n = chi.policy().max_bk_order + 1;
    for (int n = 2; n <= max_n; ++n) {
        term = poisson_bracket(term, chi);
        term *= 1.0 / n;
        if (term.empty()) return tail;
        tail += term;
    }
    if (!term.empty())
        throw NumericError("Lie series failed to terminate under truncation");
    return tail;
}

// Majorant ratio of the two highest significant grading blocks at radius
// rho. Point values of single blocks fluctuate with the angles and can
// invert by cancellation, so convergence of the tail is judged on the block
// norms, which are angle free. Blocks down at rounding level relative to
// the whole series carry no information about the tail and are skipped.
double tail_ratio(const PoissonSeries& g, double rho) {
    double peak = 0.0;
    for (int bk : g.orders()) peak = std::max(peak, g.weighted_norm_block(bk, rho));
    if (peak == 0.0) return 0.0;
    double floor = 1e-10 * peak;
    double w_prev = -1.0, w_last = -1.0;
    for (int bk : g.orders()) {
        double w = g.weighted_norm_block(bk, rho);
        if (w <= floor) continue;
        w_prev = w_last;
        w_last = w;
    }
    if (w_prev < 0.0) return 0.0;
    return w_last / w_prev;
}

// Radius where the majorant tail ratio crosses one, by bisection. Beyond
// kProbeRadius the transform counts as divergent without further search.
constexpr double kProbeRadius = 8.0;

double divergence_radius(const PoissonSeries& g) {
    if (tail_ratio(g, kProbeRadius) <= 1.0)
        return std::numeric_limits<double>::infinity();
    double lo = 0.0, hi = kProbeRadius;
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        if (tail_ratio(g, mid) > 1.0)
            hi = mid;
        else
            lo = mid;
    }
    return lo;
}

void apply_generator(CoordinateTransform& transform, const PoissonSeries& chi) {
    for (int i = 0; i < 3; ++i)
        transform.action_image[i] = lie_transform(chi, transform.action_image[i]);
    for (int i = 0; i < 3; ++i) {
        PoissonSeries moved = lie_transform(chi, transform.angle_correction[i]);
        moved += angle_tail(chi, i);
        moved.compress();
        transform.angle_correction[i] = std::move(moved);
    }
}

CoordinateTransform compose(const NormalizationState& state, int order,
                            bool to_new) {
    if (order < 0) order = state.order;
    if (order > static_cast<int>(state.generators.size()))
        throw ConfigError("transform order exceeds the normalized order of the state");
    CoordinateTransform transform;
    transform.order = order;
    transform.to_new = to_new;
    const TruncationPolicy& policy = state.normal_form.policy();
    for (int i = 0; i < 3; ++i) {
        transform.action_image[i] = action_coordinate(policy, i);
        transform.angle_correction[i] = PoissonSeries(policy);
    }
    if (to_new) {
        for (int s = order; s >= 1; --s)
            apply_generator(transform, scale(state.generators[s - 1], -1.0));
    } else {
        for (int s = 1; s <= order; ++s)
            apply_generator(transform, state.generators[s - 1]);
    }
    for (const PoissonSeries* g : {&transform.action_image[0], &transform.action_image[1],
                                   &transform.action_image[2], &transform.angle_correction[0],
                                   &transform.angle_correction[1], &transform.angle_correction[2]})
        transform.divergence_radius = std::min(transform.divergence_radius, divergence_radius(*g));
    return transform;
}

double unwrap_near(double value, double prev) {
    return value + kTwoPi * std::round((prev - value) / kTwoPi);
}

const char* flag_label(SampleFlag flag) {
    switch (flag) {
        case SampleFlag::outside_domain: return "outside";
        case SampleFlag::divergent: return "divergent";
        default: return "ok";
    }
}

}  // namespace

CoordinateTransform old_to_new_transform(const NormalizationState& state,
                                         int order) {
    return compose(state, order, true);
}

CoordinateTransform new_to_old_transform(const NormalizationState& state,
                                         int order) {
    return compose(state, order, false);
}

MappedPoint apply_transform(const CoordinateTransform& transform,
                            const std::array<double, 3>& J,
                            const std::array<double, 3>& phi, double rho_b) {
    double rho = std::hypot(J[0], J[1]);
    if (rho > transform.divergence_radius)
        throw NumericError("composed transformation diverges at the evaluation point");
    MappedPoint out;
    out.outside_domain = rho > rho_b;
    for (int i = 0; i < 3; ++i)
        out.J[i] = transform.action_image[i].evaluate(J, phi);
    for (int i = 0; i < 3; ++i)
        out.phi[i] = phi[i] + transform.angle_correction[i].evaluate(J, phi);
    return out;
}

MappedPoint old_to_new(const NormalizationState& state,
                       const std::array<double, 3>& J_old,
                       const std::array<double, 3>& phi_old) {
    return apply_transform(old_to_new_transform(state), J_old, phi_old);
}

MappedPoint new_to_old(const NormalizationState& state,
                       const std::array<double, 3>& J_new,
                       const std::array<double, 3>& phi_new) {
    return apply_transform(new_to_old_transform(state), J_new, phi_new);
}

ResonantPoint resonant_variables(const ResonantFrame& frame,
                                 const std::array<double, 3>& J,
                                 const std::array<double, 3>& phi) {
    std::array<double, 3> jr = frame.to_resonant_actions(J);
    std::array<double, 3> pr = frame.to_resonant_angles(phi);
    ResonantPoint out;
    out.J_R1 = jr[0];
    out.J_R2 = jr[1];
    out.J_F = jr[2];
    out.phi_R1 = pr[0];
    out.phi_R2 = pr[1];
    out.phi_F = pr[2];
    return out;
}

double normal_form_energy(const NormalizationState& state,
                          const ResonantFrame& frame,
                          const std::array<double, 3>& J,
                          const std::array<double, 3>& phi) {
    double j_f = frame.to_resonant_actions(J)[2];
    return state.normal_form.evaluate(J, phi) - frame.m_dot_omega.value() * j_f;
}

std::vector<TransformedSample> sample_orbit(const NormalizationState& state,
                                            const ResonantFrame& frame,
                                            const std::vector<OrbitSample>& samples,
                                            double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw ConfigError("epsilon must be positive");
    if (state.epsilon > 0.0 &&
        std::fabs(epsilon - state.epsilon) > 1e-12 * state.epsilon)
        throw ConfigError("epsilon does not match the normalized state");
    std::vector<TransformedSample> out(samples.size());
    if (samples.empty()) return out;
    CoordinateTransform forward = old_to_new_transform(state);
    const std::array<double, 3> i_star = frame.i_star_d();
    const double root_eps = std::sqrt(epsilon);
    const double m_dot_omega = frame.m_dot_omega.value();
    parallel_for(samples.size(), [&](size_t idx) {
        const OrbitSample& s = samples[idx];
        TransformedSample& r = out[idx];
        r.t = s.t;
        std::array<double, 3> J;
        for (int i = 0; i < 3; ++i) J[i] = (s.I[i] - i_star[i]) / root_eps;
        r.rho = std::hypot(J[0], J[1]);
        r.flag = SampleFlag::ok;
        try {
            MappedPoint p = apply_transform(forward, J, s.phi);
            if (p.outside_domain) r.flag = SampleFlag::outside_domain;
            r.J_new = p.J;
            r.phi_new = p.phi;
        } catch (const NumericError&) {
            // keep the untransformed point so the row stays usable
            r.flag = SampleFlag::divergent;
            r.J_new = J;
            r.phi_new = s.phi;
        }
        ResonantPoint rp = resonant_variables(frame, r.J_new, r.phi_new);
        r.J_R1 = rp.J_R1;
        r.J_R2 = rp.J_R2;
        r.J_F = rp.J_F;
        r.phi_R1 = rp.phi_R1;
        r.phi_R2 = rp.phi_R2;
        r.phi_F = rp.phi_F;
        r.E_Z = state.normal_form.evaluate(r.J_new, r.phi_new) - m_dot_omega * rp.J_F;
    });
    for (size_t i = 1; i < out.size(); ++i) {
        out[i].phi_R1 = unwrap_near(out[i].phi_R1, out[i - 1].phi_R1);
        out[i].phi_R2 = unwrap_near(out[i].phi_R2, out[i - 1].phi_R2);
        out[i].phi_F = unwrap_near(out[i].phi_F, out[i - 1].phi_F);
    }
    return out;
}

void write_samples_csv(std::FILE* out,
                       const std::vector<TransformedSample>& samples) {
    std::fprintf(out, "t,J_R1,J_R2,J_F,phi_R1,phi_R2,phi_F,E_Z,rho,flag\n");
    for (const TransformedSample& s : samples)
        std::fprintf(out,
                     "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n",
                     s.t, s.J_R1, s.J_R2, s.J_F, s.phi_R1, s.phi_R2, s.phi_F,
                     s.E_Z, s.rho, flag_label(s.flag));
    if (std::ferror(out)) throw ResourceError("short write on sample data");
}

void write_viz_csv(std::FILE* out,
                   const std::vector<TransformedSample>& samples) {
    std::fprintf(out, "phi_R1,J_R1,E_Z\n");
    for (const TransformedSample& s : samples)
        std::fprintf(out, "%.17g,%.17g,%.17g\n", s.phi_R1, s.J_R1, s.E_Z);
    if (std::ferror(out)) throw ResourceError("short write on sample data");
}

}  // namespace nflab
