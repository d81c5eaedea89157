// Fourier tabulation and book-kept expansion of the benchmark Hamiltonian.
//
// The perturbation F(phi) = 1/(4 + cos phi1 + cos phi2 + cos phi3) is even in
// each angle separately, so every mixed sine moment vanishes and
//     h_k = <F e^{-i k.phi}> = <F cos(k1 phi1) cos(k2 phi2) cos(k3 phi3)>.
// That product form is separable: the trapezoid sum over an N^3 grid factors
// into three successive cosine contractions, one axis at a time, which costs
// O(kmax N^3) instead of O(kmax^3 N^3) and keeps every partial sum in a fixed
// order for bit reproducibility. With N >= max(96, 2 kmax + 64) the aliasing
// error sits many orders below the double rounding floor.
//
// Quadrature noise floors near 1e-18 absolute, so tail coefficients whose
// true size is below the zero threshold would otherwise be stored as noise.
// An entry is therefore zeroed (and counted) when the decay envelope
// A e^{-sigma |k|_1} proves it underflows, not when the computed value does.

#include "nflab/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "nflab/parallel.hpp"

namespace nflab {

namespace {

constexpr double kTwoPi = 6.28318530717958647692528676655900577;

bool is_canonical(const Int3& k) {
    for (int v : k) {
        if (v > 0) return true;
        if (v < 0) return false;
    }
    return false;
}

int choose_grid(int kmax, int grid_points) {
    if (grid_points != 0) {
        if (grid_points < 4) throw ConfigError("quadrature grid must have at least 4 points");
        return grid_points;
    }
    int need = std::max(96, 2 * kmax + 64);
    return (need + 31) / 32 * 32;
}

}  // namespace

double FourierTable::wedge_at(int a, int b, int c) const {
    if (!(a >= b && b >= c && c >= 0 && a + b + c <= kmax))
        throw ConfigError("wedge index outside the tabulated range");
    std::size_t nk = static_cast<std::size_t>(kmax) + 1;
    return wedge[(static_cast<std::size_t>(a) * nk + b) * nk + c];
}

double FourierTable::coefficient(const Int3& k) const {
    int a = std::abs(k[0]), b = std::abs(k[1]), c = std::abs(k[2]);
    if (a < b) std::swap(a, b);
    if (b < c) std::swap(b, c);
    if (a < b) std::swap(a, b);
    if (a + b + c > kmax)
        throw ConfigError("harmonic |k| = " + std::to_string(a + b + c) +
                          " outside the tabulated range |k| <= " + std::to_string(kmax));
    std::size_t nk = static_cast<std::size_t>(kmax) + 1;
    return wedge[(static_cast<std::size_t>(a) * nk + b) * nk + c];
}

FourierTable compute_fourier_coefficients(int kmax, int grid_points) {
    if (kmax < 0) throw ConfigError("kmax must be non-negative");
    if (kmax > 200) throw ConfigError("kmax exceeds the supported table size (200)");
    const int n = choose_grid(kmax, grid_points);
    if (n <= kmax) throw ConfigError("quadrature grid must have more than kmax points");
    const int nk = kmax + 1;
    const std::size_t ns = static_cast<std::size_t>(n);
    const std::size_t nks = static_cast<std::size_t>(nk);

    std::vector<double> ct(ns);
    for (int t = 0; t < n; ++t) ct[t] = std::cos(kTwoPi * t / n);

    // pass 1: contract the first axis; a1[k1][j][l] = sum_i f(i,j,l) cos(k1 phi_i)
    std::vector<double> a1(nks * ns * ns);
    parallel_for(ns, [&](std::size_t j) {
        std::vector<double> col(ns);
        for (std::size_t l = 0; l < ns; ++l) {
            const double base = 4.0 + ct[j] + ct[l];
            for (std::size_t i = 0; i < ns; ++i) col[i] = 1.0 / (base + ct[i]);
            for (int k1 = 0; k1 < nk; ++k1) {
                double s = 0.0;
                std::size_t idx = 0;
                for (std::size_t i = 0; i < ns; ++i) {
                    s += col[i] * ct[idx];
                    idx += k1;
                    if (idx >= ns) idx -= ns;
                }
                a1[(static_cast<std::size_t>(k1) * ns + j) * ns + l] = s;
            }
        }
    });

    // pass 2: contract the second axis for the wedge half k2 <= k1
    std::vector<double> a2(nks * nks * ns, 0.0);
    parallel_for(nks, [&](std::size_t k1) {
        for (std::size_t k2 = 0; k2 <= k1; ++k2) {
            double* row = &a2[(k1 * nks + k2) * ns];
            std::size_t idx = 0;
            for (std::size_t j = 0; j < ns; ++j) {
                const double w = ct[idx];
                idx += k2;
                if (idx >= ns) idx -= ns;
                const double* src = &a1[(k1 * ns + j) * ns];
                for (std::size_t l = 0; l < ns; ++l) row[l] += src[l] * w;
            }
        }
    });

    // pass 3: contract the third axis and normalize
    FourierTable table;
    table.kmax = kmax;
    table.wedge.assign(nks * nks * nks, 0.0);
    const double volume = static_cast<double>(n) * n * n;
    const double zt = TruncationPolicy{}.zero_threshold;
    for (int a = 0; a <= kmax; ++a)
        for (int b = 0; b <= a; ++b)
            for (int c = 0; c <= b; ++c) {
                if (a + b + c > kmax) continue;
                const double* row = &a2[(static_cast<std::size_t>(a) * nks + b) * ns];
                double s = 0.0;
                std::size_t idx = 0;
                for (std::size_t l = 0; l < ns; ++l) {
                    s += row[l] * ct[idx];
                    idx += c;
                    if (idx >= ns) idx -= ns;
                }
                double h = s / volume;
                double envelope = kFourierAmplitude * std::exp(-kFourierSigma * (a + b + c));
                if (envelope < zt || std::fabs(h) < zt) {
                    h = 0.0;
                    ++table.underflow_count;
                }
                table.wedge[(static_cast<std::size_t>(a) * nks + b) * nks + c] = h;
            }
    return table;
}

HamiltonianModel make_model(double epsilon, int kmax_table, int grid_points) {
    if (!(epsilon >= 0.0 && epsilon < 1.0))
        throw ConfigError("epsilon must lie in [0, 1)");
    HamiltonianModel model;
    model.epsilon = epsilon;
    model.table = compute_fourier_coefficients(kmax_table, grid_points);
    return model;
}

int kprime_for(double epsilon, double sigma) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ConfigError("epsilon must lie in (0, 1)");
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    long long k = std::llround(-std::log(epsilon) / (2.0 * sigma));
    return k < 1 ? 1 : static_cast<int>(k);
}

double model_h0(const std::array<double, 3>& I) {
    return 0.5 * (I[0] * I[0] + I[1] * I[1]) + I[2];
}

std::array<double, 3> model_omega(const std::array<double, 3>& I) {
    return {I[0], I[1], 1.0};
}

double model_perturbation(const std::array<double, 3>& phi) {
    return 1.0 / (4.0 + std::cos(phi[0]) + std::cos(phi[1]) + std::cos(phi[2]));
}

std::array<double, 3> model_perturbation_gradient(const std::array<double, 3>& phi) {
    const double f = model_perturbation(phi);
    const double f2 = f * f;
    return {std::sin(phi[0]) * f2, std::sin(phi[1]) * f2, std::sin(phi[2]) * f2};
}

double model_hamiltonian(const std::array<double, 3>& I,
                         const std::array<double, 3>& phi, double epsilon) {
    return model_h0(I) + epsilon * model_perturbation(phi);
}

PoissonSeries build_rescaled_hamiltonian(const HamiltonianModel& model,
                                         const ResonantFrame& frame,
                                         int kprime, int max_bk) {
    if (kprime < 1) throw ConfigError("kprime must be at least 1");
    if (max_bk < 2) throw ConfigError("max_bk must be at least 2");
    const int need = kprime * max_bk - 1;
    if (need > model.table.kmax)
        throw ConfigError("Fourier table covers |k| <= " + std::to_string(model.table.kmax) +
                          " but truncation order " + std::to_string(max_bk) +
                          " needs |k| <= " + std::to_string(need));

    PoissonSeries H(TruncationPolicy{max_bk});
    const Int3 zero{0, 0, 0};
    const double re = std::sqrt(model.epsilon);

    const auto w = frame.omega_star_d();
    H.add_term(0, zero, {1, 0, 0}, w[0], 0.0);
    H.add_term(0, zero, {0, 1, 0}, w[1], 0.0);
    H.add_term(0, zero, {0, 0, 1}, w[2], 0.0);

    // quadratic action part from the Hessian at I*
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            double v = frame.hessian[i][j];
            if (v == 0.0) continue;
            Int3 alpha{0, 0, 0};
            ++alpha[i];
            ++alpha[j];
            H.add_term(1, zero, alpha, re * (i == j ? 0.5 * v : v), 0.0);
        }

    H.add_term(1, zero, zero, re * model.table.coefficient(zero), 0.0);
    for (int a = -need; a <= need; ++a)
        for (int b = -(need - std::abs(a)); b <= need - std::abs(a); ++b) {
            const int rem = need - std::abs(a) - std::abs(b);
            for (int c = -rem; c <= rem; ++c) {
                const Int3 k{a, b, c};
                const int l1 = std::abs(a) + std::abs(b) + std::abs(c);
                if (l1 == 0 || !is_canonical(k)) continue;
                const double h = model.table.coefficient(k);
                if (h == 0.0) continue;
                H.add_term(l1 / kprime + 1, k, zero, 2.0 * re * h, 0.0);
            }
        }
    return H;
}

void write_fourier_json(std::FILE* out, const HamiltonianModel& model) {
    const int kmax = model.table.kmax;
    std::vector<Int3> cells;
    for (int a = 0; a <= kmax; ++a)
        for (int b = 0; b <= a; ++b)
            for (int c = 0; c <= b; ++c)
                if (a + b + c <= kmax) cells.push_back({a, b, c});
    std::sort(cells.begin(), cells.end(), [](const Int3& x, const Int3& y) {
        int lx = x[0] + x[1] + x[2], ly = y[0] + y[1] + y[2];
        if (lx != ly) return lx < ly;
        return x < y;
    });

    std::fprintf(out, "{\"sigma\": %.17g, \"A\": %.17g, \"coeffs\": [\n",
                 model.fourier_sigma, model.fourier_A);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const Int3& k = cells[i];
        std::fprintf(out, "  {\"k\": [%d, %d, %d], \"value\": %.17g}%s\n", k[0], k[1], k[2],
                     model.table.wedge_at(k[0], k[1], k[2]), i + 1 < cells.size() ? "," : "");
    }
    std::fprintf(out, "]}\n");
    if (std::ferror(out)) throw ResourceError("short write on Fourier table");
}

}  // namespace nflab
