#include "nflab/geometry.hpp"

#include <gsl/gsl_eigen.h>
#include <gsl/gsl_matrix.h>
#include <gsl/gsl_vector.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "nflab/common.hpp"

namespace nflab {

namespace {

struct EigenSystem {
    std::array<double, 3> values;       // ascending
    std::array<std::array<double, 3>, 3> vectors;  // vectors[j] pairs with values[j]
};

EigenSystem eigen_symmetric(const Matrix3& M) {
    double data[9];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) data[3 * i + j] = M[i][j];
    gsl_matrix_view mv = gsl_matrix_view_array(data, 3, 3);
    gsl_vector* eval = gsl_vector_alloc(3);
    gsl_matrix* evec = gsl_matrix_alloc(3, 3);
    gsl_eigen_symmv_workspace* work = gsl_eigen_symmv_alloc(3);
    if (eval == nullptr || evec == nullptr || work == nullptr)
        throw ResourceError("eigensolver allocation failed");
    gsl_eigen_symmv(&mv.matrix, eval, evec, work);
    gsl_eigen_symmv_sort(eval, evec, GSL_EIGEN_SORT_VAL_ASC);
    EigenSystem out;
    for (int j = 0; j < 3; ++j) {
        out.values[j] = gsl_vector_get(eval, j);
        for (int i = 0; i < 3; ++i) out.vectors[j][i] = gsl_matrix_get(evec, i, j);
    }
    gsl_eigen_symmv_free(work);
    gsl_matrix_free(evec);
    gsl_vector_free(eval);
    return out;
}

// splits the spectrum into numerically zero and nonzero parts
struct Signature {
    int zeros = 0;
    int positives = 0;
    int negatives = 0;
    double mu_min = 0.0;
    double mu_max = 0.0;
};

Signature classify_spectrum(const std::array<double, 3>& mu) {
    double scale = 0.0;
    for (double m : mu) scale = std::max(scale, std::fabs(m));
    double tol = 1e-12 * std::max(1.0, scale);
    Signature sig;
    sig.mu_min = std::numeric_limits<double>::infinity();
    for (double m : mu) {
        if (std::fabs(m) <= tol) {
            ++sig.zeros;
            continue;
        }
        (m > 0 ? sig.positives : sig.negatives)++;
        sig.mu_min = std::min(sig.mu_min, std::fabs(m));
        sig.mu_max = std::max(sig.mu_max, std::fabs(m));
    }
    if (sig.zeros == 3) sig.mu_min = 0.0;
    return sig;
}

double contract(const Matrix3& M, const std::array<double, 3>& a,
                const std::array<double, 3>& b) {
    double sum = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) sum += M[i][j] * a[i] * b[j];
    return sum;
}

std::array<double, 3> to_double(const Int3& k) {
    return {static_cast<double>(k[0]), static_cast<double>(k[1]),
            static_cast<double>(k[2])};
}

int l1_norm(const Int3& k) {
    return std::abs(k[0]) + std::abs(k[1]) + std::abs(k[2]);
}

double mean_hessian_scale(const Matrix3& M) {
    Signature sig = classify_spectrum(eigen_symmetric(M).values);
    return 0.5 * (sig.mu_min + sig.mu_max);
}

// coefficient of the (n1, n2) pendulum, a11 n1^2 + 2 a12 n1 n2 + a22 n2^2
double pendulum_coefficient(const std::array<double, 3>& a, int n1, int n2) {
    return a[0] * n1 * n1 + 2.0 * a[1] * n1 * n2 + a[2] * n2 * n2;
}

}  // namespace

ConvexityReport check_quasi_convexity(const Matrix3& M, const Int3& k1,
                                      const Int3& k2) {
    Int3 cross = {k1[1] * k2[2] - k1[2] * k2[1], k1[2] * k2[0] - k1[0] * k2[2],
                  k1[0] * k2[1] - k1[1] * k2[0]};
    if (cross[0] == 0 && cross[1] == 0 && cross[2] == 0)
        throw ConfigError("resonance wavevectors are parallel");

    EigenSystem eig = eigen_symmetric(M);
    Signature sig = classify_spectrum(eig.values);

    ConvexityReport report;
    report.eigenvalues = eig.values;
    report.mu_min = sig.zeros == 3 ? 0.0 : sig.mu_min;
    report.mu_max = sig.mu_max;
    report.quasi_convex =
        sig.zeros <= 1 && (sig.positives == 0 || sig.negatives == 0);

    // Rows of Y are the wavevectors in the eigenbasis; the discriminant of
    // the restricted form is minus the sum of squared 2x2 minors of Y
    // weighted by the eigenvalue pair products.
    double y[2][3];
    std::array<double, 3> k1d = to_double(k1), k2d = to_double(k2);
    for (int j = 0; j < 3; ++j) {
        y[0][j] = k1d[0] * eig.vectors[j][0] + k1d[1] * eig.vectors[j][1] +
                  k1d[2] * eig.vectors[j][2];
        y[1][j] = k2d[0] * eig.vectors[j][0] + k2d[1] * eig.vectors[j][1] +
                  k2d[2] * eig.vectors[j][2];
    }
    double minor01 = y[0][0] * y[1][1] - y[0][1] * y[1][0];
    double minor02 = y[0][0] * y[1][2] - y[0][2] * y[1][0];
    double minor12 = y[0][1] * y[1][2] - y[0][2] * y[1][1];
    report.discriminant = -(minor01 * minor01 * eig.values[0] * eig.values[1] +
                            minor02 * minor02 * eig.values[0] * eig.values[2] +
                            minor12 * minor12 * eig.values[1] * eig.values[2]);
    return report;
}

std::array<double, 3> quadratic_form_coefficients(const ResonantFrame& frame) {
    std::array<double, 3> k1d = to_double(frame.k1), k2d = to_double(frame.k2);
    return {contract(frame.hessian, k1d, k1d), contract(frame.hessian, k1d, k2d),
            contract(frame.hessian, k2d, k2d)};
}

double resonance_width(const ResonantFrame& frame, int n1, int n2,
                       double A_decay, double sigma_decay, WidthKind kind) {
    if (n1 == 0 && n2 == 0)
        throw ConfigError("resonance harmonic must be nonzero");
    if (A_decay <= 0.0 || sigma_decay <= 0.0)
        throw ConfigError("decay constants must be positive");

    int l1 = l1_norm(frame.k1), l2 = l1_norm(frame.k2);
    if (kind == WidthKind::simplified) {
        double Mh = mean_hessian_scale(frame.hessian);
        double k12 = 0.5 * (l1 + l2);
        if (Mh <= 0.0)
            throw NumericError("hessian has no nonzero eigenvalue");
        return std::sqrt(32.0 * A_decay) / (Mh * k12) *
               std::exp(-0.5 * (std::abs(n1) + std::abs(n2)) * k12 * sigma_decay);
    }

    std::array<double, 3> a = quadratic_form_coefficients(frame);
    double denom = pendulum_coefficient(a, n1, n2);
    if (denom <= 0.0)
        throw NumericError("quadratic form is not positive on the requested harmonic");
    double swing =
        std::sqrt(32.0 * A_decay / denom) *
        std::exp(-0.5 * (std::abs(n1) * l1 + std::abs(n2) * l2) * sigma_decay);
    if (kind == WidthKind::separatrix) return swing;
    return swing * std::sqrt(static_cast<double>(n1) * n1 +
                             static_cast<double>(n2) * n2);
}

double critical_energy(const ResonantFrame& frame, double epsilon,
                       double A_decay, double sigma_decay) {
    if (epsilon <= 0.0) throw ConfigError("perturbation size must be positive");
    if (A_decay <= 0.0 || sigma_decay <= 0.0)
        throw ConfigError("decay constants must be positive");
    double k12 = 0.5 * (l1_norm(frame.k1) + l1_norm(frame.k2));
    return 32.0 * std::sqrt(epsilon * A_decay) / (M_PI * k12 * sigma_decay) *
           std::exp(-0.5 * k12 * sigma_decay);
}

std::array<double, 2> ellipse_center(const ResonantFrame& frame, double J_F) {
    std::array<double, 3> a = quadratic_form_coefficients(frame);
    double det = a[0] * a[2] - a[1] * a[1];
    double scale = std::max({1.0, std::fabs(a[0] * a[2]), a[1] * a[1]});
    if (std::fabs(det) <= 1e-12 * scale)
        throw NumericError("resonant quadratic form is singular");
    std::array<double, 3> md = {static_cast<double>(frame.m[0]),
                                static_cast<double>(frame.m[1]),
                                static_cast<double>(frame.m[2])};
    double mk1 = contract(frame.hessian, md, to_double(frame.k1));
    double mk2 = contract(frame.hessian, md, to_double(frame.k2));
    return {(a[1] * mk2 - a[2] * mk1) / det * J_F,
            (a[1] * mk1 - a[0] * mk2) / det * J_F};
}

DoubleResonanceEstimate diffusion_estimate_double(const ResonantFrame& frame,
                                                  double epsilon,
                                                  double R_opt_norm,
                                                  double A_decay,
                                                  double sigma_decay,
                                                  double n_eff) {
    if (epsilon <= 0.0) throw ConfigError("perturbation size must be positive");
    if (R_opt_norm <= 0.0) throw ConfigError("remainder norm must be positive");
    if (A_decay <= 0.0 || sigma_decay <= 0.0)
        throw ConfigError("decay constants must be positive");

    DoubleResonanceEstimate est;
    std::array<double, 3> a = quadratic_form_coefficients(frame);
    est.a11 = a[0];
    est.a12 = a[1];
    est.a22 = a[2];
    std::array<double, 2> center = ellipse_center(frame, 1.0);
    est.center_slope_r1 = center[0];
    est.center_slope_r2 = center[1];
    for (int n1 = 0; n1 <= 3; ++n1) {
        for (int n2 = -3; n2 <= 3; ++n2) {
            int order = std::abs(n1) + std::abs(n2);
            if (order < 1 || order > 3) continue;
            bool canonical = n1 > 0 || (n1 == 0 && n2 > 0);
            if (!canonical) continue;
            est.widths[{n1, n2}] =
                resonance_width(frame, n1, n2, A_decay, sigma_decay);
        }
    }
    est.k12 = 0.5 * (l1_norm(frame.k1) + l1_norm(frame.k2));
    est.Mh = mean_hessian_scale(frame.hessian);
    est.E_crit = critical_energy(frame, epsilon, A_decay, sigma_decay);
    est.n_eff = n_eff;
    double damp = std::exp(-n_eff * est.k12 * sigma_decay);
    est.T_period = std::exp(0.5 * n_eff * est.k12 * sigma_decay) /
                   std::sqrt(epsilon * A_decay);
    est.N_steps = epsilon * damp / (R_opt_norm * R_opt_norm);
    est.Delta_E = std::sqrt(epsilon * damp);
    est.D_estimate = std::sqrt(epsilon * A_decay * damp) * R_opt_norm * R_opt_norm;
    return est;
}

SimpleResonanceEstimate diffusion_estimate_simple(const ResonantFrame& frame,
                                                  double epsilon,
                                                  double R_opt_norm, double b,
                                                  double A_decay,
                                                  double sigma_decay) {
    if (epsilon <= 0.0) throw ConfigError("perturbation size must be positive");
    if (R_opt_norm <= 0.0) throw ConfigError("remainder norm must be positive");
    if (b < 0.0 || b > 1.0)
        throw ConfigError("splitting exponent must lie in [0, 1]");
    if (A_decay <= 0.0 || sigma_decay <= 0.0)
        throw ConfigError("decay constants must be positive");

    SimpleResonanceEstimate est;
    int l1 = l1_norm(frame.k1);
    double Mh = mean_hessian_scale(frame.hessian);
    if (Mh <= 0.0) throw NumericError("hessian has no nonzero eigenvalue");
    est.main_width = std::sqrt(32.0 * A_decay) / (Mh * l1) *
                     std::exp(-0.5 * l1 * sigma_decay);
    est.f_R1 = A_decay * std::exp(-sigma_decay * l1);
    est.Omega_G = std::pow(epsilon, 0.25) * std::sqrt(est.f_R1);
    est.T_layer = std::log(32.0 * M_E / est.main_width) / est.Omega_G;
    est.kappa_l = -std::log(R_opt_norm) / (sigma_decay * l1);
    est.melnikov_amp =
        8.0 * M_PI * est.kappa_l * std::exp(-0.5 * M_PI * est.kappa_l);
    est.b = b;
    est.p = 2.0 * (1.0 + b);
    est.delay_d = 0.0;
    est.D_estimate = epsilon / (2.0 * est.Omega_G * est.Omega_G * est.T_layer) *
                     std::pow(epsilon, 0.75) * std::pow(R_opt_norm, est.p);
    return est;
}

void write_geometry_json(std::FILE* out, const ConvexityReport& convexity,
                         const DoubleResonanceEstimate& double_res,
                         const SimpleResonanceEstimate& simple_res) {
    std::fprintf(out, "{\"convexity\": {\"eigenvalues\": [%.17g, %.17g, %.17g], ",
                 convexity.eigenvalues[0], convexity.eigenvalues[1],
                 convexity.eigenvalues[2]);
    std::fprintf(out, "\"mu_min\": %.17g, \"mu_max\": %.17g, ", convexity.mu_min,
                 convexity.mu_max);
    std::fprintf(out, "\"quasi_convex\": %s, \"discriminant\": %.17g},\n",
                 convexity.quasi_convex ? "true" : "false",
                 convexity.discriminant);
    std::fprintf(out, " \"double_resonance\": {\"a11\": %.17g, \"a12\": %.17g, "
                      "\"a22\": %.17g, ",
                 double_res.a11, double_res.a12, double_res.a22);
    std::fprintf(out, "\"center_slope_r1\": %.17g, \"center_slope_r2\": %.17g, ",
                 double_res.center_slope_r1, double_res.center_slope_r2);
    std::fprintf(out, "\"widths\": [");
    bool first = true;
    for (const auto& [key, width] : double_res.widths) {
        std::fprintf(out, "%s{\"n1\": %d, \"n2\": %d, \"width\": %.17g}",
                     first ? "" : ", ", key.first, key.second, width);
        first = false;
    }
    std::fprintf(out, "], \"k12\": %.17g, \"Mh\": %.17g, \"E_crit\": %.17g, ",
                 double_res.k12, double_res.Mh, double_res.E_crit);
    std::fprintf(out, "\"n_eff\": %.17g, \"T_period\": %.17g, \"N_steps\": %.17g, ",
                 double_res.n_eff, double_res.T_period, double_res.N_steps);
    std::fprintf(out, "\"Delta_E\": %.17g, \"D_estimate\": %.17g},\n",
                 double_res.Delta_E, double_res.D_estimate);
    std::fprintf(out, " \"simple_resonance\": {\"main_width\": %.17g, "
                      "\"f_R1\": %.17g, \"Omega_G\": %.17g, \"T_layer\": %.17g, ",
                 simple_res.main_width, simple_res.f_R1, simple_res.Omega_G,
                 simple_res.T_layer);
    std::fprintf(out, "\"kappa_l\": %.17g, \"melnikov_amp\": %.17g, \"b\": %.17g, ",
                 simple_res.kappa_l, simple_res.melnikov_amp, simple_res.b);
    std::fprintf(out, "\"p\": %.17g, \"delay_d\": %.17g, \"D_estimate\": %.17g}}\n",
                 simple_res.p, simple_res.delay_d, simple_res.D_estimate);
    if (std::ferror(out)) throw ResourceError("short write on geometry report");
}

}  // namespace nflab
