#include "nflab/integrator.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_odeiv2.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "nflab/common.hpp"
#include "nflab/model.hpp"
#include "nflab/parallel.hpp"

namespace nflab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double reduce_angle(double phi) {
    double r = std::fmod(phi, kTwoPi);
    return r < 0.0 ? r + kTwoPi : r;
}

// sixth-order palindromic composition of seven leapfrogs (Yoshida's
// solution A); adjacent kicks are merged, giving eight kicks and seven
// drifts per step
constexpr double kW1 = -1.17767998417887;
constexpr double kW2 = 0.235573213359357;
constexpr double kW3 = 0.784513610477560;
constexpr double kW0 = 1.0 - 2.0 * (kW1 + kW2 + kW3);
constexpr double kKick[8] = {0.5 * kW3,         0.5 * (kW3 + kW2),
                             0.5 * (kW2 + kW1), 0.5 * (kW1 + kW0),
                             0.5 * (kW0 + kW1), 0.5 * (kW1 + kW2),
                             0.5 * (kW2 + kW3), 0.5 * kW3};
constexpr double kDrift[7] = {kW3, kW2, kW1, kW0, kW1, kW2, kW3};

struct RawState {
    double I[3];
    double phi[3];
    double xi[6];  // (dphi, dI)
};

void kick(RawState& s, double epsilon, double h, bool tangent) {
    const double f = 1.0 / (4.0 + std::cos(s.phi[0]) + std::cos(s.phi[1]) +
                            std::cos(s.phi[2]));
    const double f2 = f * f;
    double sn[3] = {std::sin(s.phi[0]), std::sin(s.phi[1]), std::sin(s.phi[2])};
    if (tangent) {
        // dI -= eps h Hess(B) dphi with Hess_ij = d_ij cos f^2 + 2 s_i s_j f^3
        const double mixed =
            2.0 * f2 * f *
            (sn[0] * s.xi[0] + sn[1] * s.xi[1] + sn[2] * s.xi[2]);
        for (int i = 0; i < 3; ++i)
            s.xi[3 + i] -= epsilon * h *
                           (std::cos(s.phi[i]) * f2 * s.xi[i] + sn[i] * mixed);
    }
    for (int i = 0; i < 3; ++i) s.I[i] -= epsilon * h * sn[i] * f2;
}

void drift(RawState& s, double h, bool tangent) {
    if (tangent) {
        s.xi[0] += h * s.xi[3];
        s.xi[1] += h * s.xi[4];
    }
    s.phi[0] += h * s.I[0];
    s.phi[1] += h * s.I[1];
    s.phi[2] += h;
}

void step_raw(RawState& s, double epsilon, double dt, bool tangent) {
    kick(s, epsilon, kKick[0] * dt, tangent);
    for (int j = 0; j < 7; ++j) {
        drift(s, kDrift[j] * dt, tangent);
        kick(s, epsilon, kKick[j + 1] * dt, tangent);
    }
    for (int i = 0; i < 3; ++i) s.phi[i] = reduce_angle(s.phi[i]);
}

RawState to_raw(const OrbitState& state) {
    RawState raw;
    for (int i = 0; i < 3; ++i) {
        raw.I[i] = state.I[i];
        raw.phi[i] = state.phi[i];
    }
    for (int i = 0; i < 6; ++i) raw.xi[i] = state.xi[i];
    return raw;
}

void from_raw(const RawState& raw, OrbitState& state) {
    for (int i = 0; i < 3; ++i) {
        state.I[i] = raw.I[i];
        state.phi[i] = raw.phi[i];
    }
    for (int i = 0; i < 6; ++i) state.xi[i] = raw.xi[i];
}

void require_step(double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw ConfigError("step size must be positive");
}

double xi_norm_sq(const RawState& s) {
    double sum = 0.0;
    for (double c : s.xi) sum += c * c;
    return sum;
}

// context and right-hand side of the reduced normal-form flow
struct ReducedFlow {
    const ResonantFrame* frame;
    double J_F;
    std::array<PoissonSeries, 3> dJ;    // dZ/dJ_i
    std::array<PoissonSeries, 3> dPhi;  // dZ/dphi_i
    const PoissonSeries* Z;

    void map_point(const double y[4], std::array<double, 3>& J,
                   std::array<double, 3>& phi) const {
        J = frame->from_resonant_actions({y[0], y[1], J_F});
        phi = frame->from_resonant_angles({y[2], y[3], 0.0});
    }

    double energy(const double y[4]) const {
        std::array<double, 3> J, phi;
        map_point(y, J, phi);
        return Z->evaluate(J, phi);
    }
};

int reduced_rhs(double, const double y[], double dydt[], void* params) {
    const ReducedFlow* flow = static_cast<const ReducedFlow*>(params);
    std::array<double, 3> J, phi;
    flow->map_point(y, J, phi);
    double gJ[3], gPhi[3];
    for (int j = 0; j < 3; ++j) {
        gJ[j] = flow->dJ[j].evaluate(J, phi);
        gPhi[j] = flow->dPhi[j].evaluate(J, phi);
    }
    const ResonantFrame& fr = *flow->frame;
    // dphi_j / dphi_R1 is column one of the inverse angle map
    double dphi_r1 = 0.0, dphi_r2 = 0.0;
    for (int j = 0; j < 3; ++j) {
        dphi_r1 += gPhi[j] * fr.angle_map_inverse[j][0].value();
        dphi_r2 += gPhi[j] * fr.angle_map_inverse[j][1].value();
    }
    dydt[0] = -dphi_r1;
    dydt[1] = -dphi_r2;
    dydt[2] = fr.k1[0] * gJ[0] + fr.k1[1] * gJ[1] + fr.k1[2] * gJ[2];
    dydt[3] = fr.k2[0] * gJ[0] + fr.k2[1] * gJ[1] + fr.k2[2] * gJ[2];
    return GSL_SUCCESS;
}

struct DriverGuard {
    gsl_odeiv2_driver* d = nullptr;
    ~DriverGuard() {
        if (d != nullptr) gsl_odeiv2_driver_free(d);
    }
};

// one attempt at the full run; returns false when the energy drift guard
// trips so the caller can retry with tighter tolerances
bool run_reduced(ReducedFlow& flow, const NormalFormState& initial,
                 double t_final, double dt, int max_sections, double tol,
                 NormalFormOrbit& out) {
    gsl_odeiv2_system sys = {reduced_rhs, nullptr, 4, &flow};
    DriverGuard drv;
    drv.d = gsl_odeiv2_driver_alloc_y_new(&sys, gsl_odeiv2_step_rk8pd,
                                          0.1 * dt, tol, tol);
    if (drv.d == nullptr) throw ResourceError("integrator allocation failed");

    double y[4] = {initial.J_R1, initial.J_R2, initial.phi_R1, initial.phi_R2};
    out = NormalFormOrbit{};
    out.E_initial = flow.energy(y);
    const double e_scale = std::max(std::fabs(out.E_initial), 1e-12);

    double t = 0.0;
    double section_prev = y[3] - 2.0 * y[2];
    double y_prev[4];
    std::memcpy(y_prev, y, sizeof y);
    double t_prev = 0.0;

    while (t < t_final) {
        double t_next = std::min(t + dt, t_final);
        int status = gsl_odeiv2_driver_apply(drv.d, &t, t_next, y);
        if (status != GSL_SUCCESS)
            throw NumericError("normal form integration step failed");

        double drift_now = std::fabs(flow.energy(y) - out.E_initial);
        out.max_drift = std::max(out.max_drift, drift_now);
        if (drift_now > 1e-9 * e_scale) return false;

        double section_now = y[3] - 2.0 * y[2];
        double lo = std::min(section_prev, section_now);
        double hi = std::max(section_prev, section_now);
        long first = static_cast<long>(std::ceil(lo / kTwoPi));
        long last = static_cast<long>(std::floor(hi / kTwoPi));
        for (long n = first; n <= last; ++n) {
            double target = n * kTwoPi;
            if (target <= lo || target > hi) continue;  // count (lo, hi]
            // bisect the crossing time, re-integrating from the last sample
            double ta = t_prev, tb = t;
            double ya[4];
            std::memcpy(ya, y_prev, sizeof ya);
            double sa = section_prev;
            while (tb - ta > 1e-9) {
                double tm = 0.5 * (ta + tb);
                double ym[4];
                std::memcpy(ym, ya, sizeof ym);
                gsl_odeiv2_system sub = {reduced_rhs, nullptr, 4, &flow};
                DriverGuard fine;
                fine.d = gsl_odeiv2_driver_alloc_y_new(
                    &sub, gsl_odeiv2_step_rk8pd, 0.1 * dt, tol, tol);
                if (fine.d == nullptr)
                    throw ResourceError("integrator allocation failed");
                double tcur = ta;
                if (tm > ta &&
                    gsl_odeiv2_driver_apply(fine.d, &tcur, tm, ym) != GSL_SUCCESS)
                    throw NumericError("normal form integration step failed");
                double sm = ym[3] - 2.0 * ym[2];
                bool crossed_left = (sa < target && sm >= target) ||
                                    (sa > target && sm <= target);
                if (crossed_left) {
                    tb = tm;
                } else {
                    ta = tm;
                    std::memcpy(ya, ym, sizeof ya);
                    sa = sm;
                }
            }
            SectionPoint point;
            point.phi_R1 = reduce_angle(ya[2]);
            point.J_R1 = ya[0];
            point.t = tb;
            out.sections.push_back(point);
            if (max_sections > 0 &&
                static_cast<int>(out.sections.size()) >= max_sections)
                break;
        }
        if (max_sections > 0 &&
            static_cast<int>(out.sections.size()) >= max_sections)
            break;

        section_prev = section_now;
        std::memcpy(y_prev, y, sizeof y_prev);
        t_prev = t;
    }

    out.final_state.J_R1 = y[0];
    out.final_state.J_R2 = y[1];
    out.final_state.phi_R1 = reduce_angle(y[2]);
    out.final_state.phi_R2 = reduce_angle(y[3]);
    out.final_state.J_F = initial.J_F;
    return true;
}

}  // namespace

OrbitState make_orbit(const std::array<double, 3>& I,
                      const std::array<double, 3>& phi) {
    OrbitState state;
    state.I = I;
    for (int i = 0; i < 3; ++i) state.phi[i] = reduce_angle(phi[i]);
    return state;
}

OrbitState step_flow(const OrbitState& state, double epsilon, double dt) {
    require_step(dt);
    RawState raw = to_raw(state);
    step_raw(raw, epsilon, dt, false);
    OrbitState out = state;
    from_raw(raw, out);
    out.t = state.t + dt;
    return out;
}

OrbitState step_tangent(const OrbitState& state, double epsilon, double dt) {
    require_step(dt);
    RawState raw = to_raw(state);
    step_raw(raw, epsilon, dt, true);
    OrbitState out = state;
    from_raw(raw, out);
    out.t = state.t + dt;
    return out;
}

double fli(const OrbitState& initial, double epsilon, double t_final,
           double dt) {
    require_step(dt);
    if (!(t_final > 0.0)) throw ConfigError("final time must be positive");

    RawState raw = to_raw(initial);
    double norm0 = std::sqrt(xi_norm_sq(raw));
    if (!(norm0 > 0.0)) throw ConfigError("deviation vector must be nonzero");
    for (double& c : raw.xi) c /= norm0;

    double sup_sq = 1.0;
    const long nsteps = static_cast<long>(std::ceil(t_final / dt - 1e-12));
    for (long s = 0; s < nsteps; ++s) {
        step_raw(raw, epsilon, dt, true);
        double nrm = xi_norm_sq(raw);
        if (!std::isfinite(nrm) || nrm > 1e300) break;  // already conclusive
        sup_sq = std::max(sup_sq, nrm);
    }
    return 0.5 * std::log10(sup_sq);
}

std::vector<double> fli_map(const FliMapSpec& spec, double epsilon) {
    if (spec.n1 < 1 || spec.n2 < 1)
        throw ConfigError("grid counts must be at least 1");
    if (!(spec.t_final > 0.0)) throw ConfigError("final time must be positive");
    require_step(spec.dt);
    if (!(spec.i1_max >= spec.i1_min) || !(spec.i2_max >= spec.i2_min))
        throw ConfigError("grid ranges must be ordered");

    auto node = [](double lo, double hi, int count, int index) {
        if (count == 1) return lo;
        return lo + (hi - lo) * index / (count - 1);
    };

    std::vector<double> values(static_cast<size_t>(spec.n1) * spec.n2, 0.0);
    parallel_for(values.size(), [&](std::size_t job) {
        int a = static_cast<int>(job) / spec.n2;
        int b = static_cast<int>(job) % spec.n2;
        std::array<double, 3> I = {node(spec.i1_min, spec.i1_max, spec.n1, a),
                                   node(spec.i2_min, spec.i2_max, spec.n2, b),
                                   spec.i3};
        OrbitState start = make_orbit(I, spec.phi0);
        values[job] = fli(start, epsilon, spec.t_final, spec.dt);
    });
    return values;
}

void write_fli_map_csv(std::FILE* out, const FliMapSpec& spec,
                       const std::vector<double>& values) {
    if (values.size() != static_cast<size_t>(spec.n1) * spec.n2)
        throw ConfigError("value grid does not match the map spec");
    auto node = [](double lo, double hi, int count, int index) {
        if (count == 1) return lo;
        return lo + (hi - lo) * index / (count - 1);
    };
    std::fprintf(out, "I1,I2,FLI\n");
    for (int a = 0; a < spec.n1; ++a) {
        for (int b = 0; b < spec.n2; ++b) {
            std::fprintf(out, "%.17g,%.17g,%.17g\n",
                         node(spec.i1_min, spec.i1_max, spec.n1, a),
                         node(spec.i2_min, spec.i2_max, spec.n2, b),
                         values[static_cast<size_t>(a) * spec.n2 + b]);
        }
    }
    if (std::ferror(out)) throw ResourceError("short write on FLI map");
}

NormalFormOrbit normal_form_flow(const PoissonSeries& Z,
                                 const ResonantFrame& frame,
                                 const NormalFormState& initial,
                                 double t_final, double dt, int max_sections) {
    if (!(t_final > 0.0)) throw ConfigError("final time must be positive");
    require_step(dt);

    gsl_set_error_handler_off();

    ReducedFlow flow;
    flow.frame = &frame;
    flow.J_F = initial.J_F;
    flow.Z = &Z;
    for (int j = 0; j < 3; ++j) {
        flow.dJ[j] = partial_derivative(Z, static_cast<Variable>(j));
        flow.dPhi[j] = partial_derivative(
            Z, static_cast<Variable>(static_cast<int>(Variable::Phi1) + j));
    }

    NormalFormOrbit orbit;
    for (double tol : {1e-12, 1e-14}) {
        if (run_reduced(flow, initial, t_final, dt, max_sections, tol, orbit))
            return orbit;
    }
    throw NumericError("normal form energy drift exceeded tolerance");
}

void write_sections_csv(std::FILE* out, const NormalFormOrbit& orbit) {
    std::fprintf(out, "phi_R1,J_R1,t\n");
    for (const SectionPoint& p : orbit.sections)
        std::fprintf(out, "%.17g,%.17g,%.17g\n", p.phi_R1, p.J_R1, p.t);
    if (std::ferror(out)) throw ResourceError("short write on section data");
}

}  // namespace nflab
