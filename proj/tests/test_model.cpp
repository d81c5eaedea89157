#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "nflab/common.hpp"
#include "nflab/frame.hpp"
#include "nflab/model.hpp"
#include "nflab/series.hpp"

using namespace nflab;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_canonical(const Int3& k) {
    for (int v : k) {
        if (v > 0) return true;
        if (v < 0) return false;
    }
    return false;
}

std::vector<Int3> canonical_shell(int l1) {
    std::vector<Int3> out;
    for (int a = -l1; a <= l1; ++a)
        for (int b = -(l1 - std::abs(a)); b <= l1 - std::abs(a); ++b) {
            int rem = l1 - std::abs(a) - std::abs(b);
            for (int c : {-rem, rem}) {
                Int3 k{a, b, c};
                if (std::abs(a) + std::abs(b) + std::abs(c) == l1 && is_canonical(k))
                    out.push_back(k);
                if (rem == 0) break;
            }
        }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Direct non-separable trapezoid sum, the reference the contraction must hit.
double brute_coefficient(const Int3& k, int n) {
    long double acc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) {
                double p1 = kTwoPi * i / n, p2 = kTwoPi * j / n, p3 = kTwoPi * l / n;
                double f = 1.0 / (4.0 + std::cos(p1) + std::cos(p2) + std::cos(p3));
                acc += f * std::cos(k[0] * p1 + k[1] * p2 + k[2] * p3);
            }
    return static_cast<double>(acc / (static_cast<long double>(n) * n * n));
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::array<Rational, 3> rat3(const std::string& a, const std::string& b, const std::string& c) {
    return {parse_rational(a), parse_rational(b), parse_rational(c)};
}

std::string temp_path(const char* stem) {
    return std::string("nflab_model_test_") + stem + ".json";
}

}  // namespace

TEST_CASE("torus average matches a Monte-Carlo estimate") {
    FourierTable t = compute_fourier_coefficients(4);
    const double h000 = t.coefficient({0, 0, 0});
    CHECK(h000 == doctest::Approx(0.2818629762254342).epsilon(1e-10));

    std::mt19937_64 rng(20240817);
    std::uniform_real_distribution<double> ang(0.0, kTwoPi);
    const int64_t samples = 100000000;
    double acc = 0.0;
    for (int64_t i = 0; i < samples; ++i) {
        double f = 4.0 + std::cos(ang(rng)) + std::cos(ang(rng)) + std::cos(ang(rng));
        acc += 1.0 / f;
    }
    double mc = acc / static_cast<double>(samples);
    CHECK(std::fabs(mc - h000) < 5e-5);
}

TEST_CASE("cosine contraction reproduces the direct triple sum") {
    FourierTable t = compute_fourier_coefficients(4, 96);
    for (const Int3& k : {Int3{0, 0, 0}, Int3{1, 0, 0}, Int3{1, -2, 0},
                          Int3{2, 1, 0}, Int3{1, 1, 1}, Int3{2, -1, -1}}) {
        double direct = brute_coefficient(k, 96);
        CHECK(t.coefficient(k) == doctest::Approx(direct).epsilon(1e-12));
    }
    CHECK(t.coefficient({1, 0, 0}) == doctest::Approx(-0.042484).epsilon(5e-5));
}

TEST_CASE("coefficients are stable under grid refinement") {
    FourierTable coarse = compute_fourier_coefficients(20);
    FourierTable fine = compute_fourier_coefficients(20, 224);
    for (int a = 0; a <= 20; ++a)
        for (int b = 0; b <= a; ++b)
            for (int c = 0; c <= b && a + b + c <= 20; ++c) {
                double u = coarse.wedge_at(a, b, c), v = fine.wedge_at(a, b, c);
                CHECK(std::fabs(u - v) <= 1e-12 * std::fabs(v) + 2e-16);
            }
}

TEST_CASE("symmetry lookup collapses permutations and sign flips") {
    FourierTable t = compute_fourier_coefficients(6);
    const Int3 base{3, 2, 1};
    double ref = t.coefficient(base);
    for (const Int3& k : {Int3{3, 2, 1}, Int3{-3, 2, 1}, Int3{2, -3, -1},
                          Int3{1, 3, 2}, Int3{-1, -2, -3}, Int3{2, 1, 3}}) {
        CHECK(t.coefficient(k) == ref);
    }
    CHECK(t.coefficient({1, -2, 0}) == t.coefficient({2, 1, 0}));
    CHECK_THROWS_AS((void)t.coefficient({4, 2, 1}), ConfigError);
    CHECK_THROWS_AS((void)t.coefficient({7, 0, 0}), ConfigError);
}

TEST_CASE("axis decay is steeper than the envelope rate") {
    FourierTable t = compute_fourier_coefficients(30);
    std::vector<double> xs, ys;
    for (int n = 5; n <= 20; ++n) {
        xs.push_back(n);
        ys.push_back(std::log(std::fabs(t.coefficient({n, 0, 0}))));
    }
    double slope = fit_slope(xs, ys);
    CHECK(slope > -1.45);
    CHECK(slope < -1.38);
}

TEST_CASE("diagonal decay follows the envelope rate") {
    FourierTable t = compute_fourier_coefficients(30);
    std::vector<double> xs, ys;
    for (int j = 2; j <= 10; ++j) {
        xs.push_back(3 * j);
        ys.push_back(std::log(std::fabs(t.coefficient({j, j, j}))));
    }
    double slope = fit_slope(xs, ys);
    CHECK(slope > -0.88);
    CHECK(slope < -0.835);
}

TEST_CASE("envelope amplitude is larger at low order than in the tail") {
    FourierTable t = compute_fourier_coefficients(30);
    std::vector<double> shell_ratio(31, 0.0);  // max |h_k| e^{sigma |k|} per shell
    for (int l1 = 1; l1 <= 30; ++l1)
        for (const Int3& k : canonical_shell(l1))
            shell_ratio[l1] = std::max(
                shell_ratio[l1], std::fabs(t.coefficient(k)) * std::exp(kFourierSigma * l1));

    // The first three shells overshoot A = 0.05; from |k|_1 = 4 on it holds.
    CHECK(shell_ratio[1] / 0.05 == doctest::Approx(1.8823).epsilon(2e-3));
    CHECK(shell_ratio[2] > 0.05);
    CHECK(shell_ratio[3] > 0.05);
    double tail_max = 0.0, global_max = 0.0;
    for (int l1 = 1; l1 <= 30; ++l1) {
        global_max = std::max(global_max, shell_ratio[l1]);
        if (l1 >= 4) tail_max = std::max(tail_max, shell_ratio[l1]);
    }
    CHECK(tail_max <= 0.05);
    CHECK(global_max <= 0.095);
    CHECK(global_max == doctest::Approx(0.094116).epsilon(2e-3));
}

TEST_CASE("far tail underflow is recorded and stored as zero") {
    // Coarse grid on purpose: only the envelope bookkeeping is probed here.
    FourierTable t = compute_fourier_coefficients(75, 96);
    int64_t expected = 0;
    for (int a = 0; a <= 75; ++a)
        for (int b = 0; b <= a; ++b)
            for (int c = 0; c <= b; ++c) {
                int l1 = a + b + c;
                if (l1 > 75) continue;
                if (kFourierAmplitude * std::exp(-kFourierSigma * l1) < 1e-25) ++expected;
            }
    CHECK(expected > 0);
    CHECK(t.underflow_count == expected);
    CHECK(t.coefficient({75, 0, 0}) == 0.0);
    CHECK(t.coefficient({25, 25, 25}) == 0.0);
    CHECK(t.coefficient({30, 30, 8}) != 0.0);
}

TEST_CASE("grading step tracks the perturbation size") {
    CHECK(kprime_for(0.01, kFourierSigma) == 3);
    CHECK(kprime_for(0.02, kFourierSigma) == 2);
    CHECK(kprime_for(0.001, kFourierSigma) == 4);
    CHECK(kprime_for(0.008, kFourierSigma) == 3);
    CHECK(kprime_for(0.012, kFourierSigma) == 3);
    CHECK(kprime_for(0.013, kFourierSigma) == 3);
    CHECK(kprime_for(0.015, kFourierSigma) == 3);
    CHECK(kprime_for(0.016, kFourierSigma) == 3);
    CHECK(kprime_for(0.9, kFourierSigma) == 1);
    CHECK_THROWS_AS(kprime_for(0.0, kFourierSigma), ConfigError);
    CHECK_THROWS_AS(kprime_for(1.5, kFourierSigma), ConfigError);
    CHECK_THROWS_AS(kprime_for(0.01, 0.0), ConfigError);
}

TEST_CASE("rational parsing accepts fractions decimals and integers") {
    CHECK(parse_rational("2/5") == Rational(2, 5));
    CHECK(parse_rational("3/6") == Rational(1, 2));
    CHECK(parse_rational("-4/6") == Rational(-2, 3));
    CHECK(parse_rational("1") == Rational(1));
    CHECK(parse_rational("-7") == Rational(-7));
    CHECK(parse_rational("0.155") == Rational(31, 200));
    CHECK(parse_rational("-0.25") == Rational(-1, 4));
    CHECK(parse_rational("0.31") == Rational(31, 100));
    CHECK(parse_rational("2.") == Rational(2));
    CHECK(Rational(31, 200).str() == "31/200");
    CHECK(Rational(-3, 1).str() == "-3");
    CHECK_THROWS_AS(parse_rational("abc"), ConfigError);
    CHECK_THROWS_AS(parse_rational("1/0"), ConfigError);
    CHECK_THROWS_AS(parse_rational(""), ConfigError);
    CHECK_THROWS_AS(parse_rational("1/2/3"), ConfigError);
}

TEST_CASE("rational arithmetic stays reduced") {
    Rational a(1, 6), b(1, 3);
    CHECK(a + b == Rational(1, 2));
    CHECK(b - a == Rational(1, 6));
    CHECK(a * b == Rational(1, 18));
    CHECK(a / b == Rational(1, 2));
    CHECK((Rational(2, 4) == Rational(1, 2)));
    CHECK_THROWS_AS(a / Rational(0), NumericError);
}

TEST_CASE("resonant frame at the first benchmark point") {
    ResonantFrame fr = build_resonant_frame(rat3("2/5", "1/5", "1"), 12);
    CHECK(fr.k1 == Int3{1, -2, 0});
    CHECK(fr.k2 == Int3{2, 1, -1});
    CHECK(fr.m == Int3{2, 1, 5});
    CHECK(fr.cross_gcd == 1);
    CHECK(fr.det == 30);
    CHECK(fr.m_dot_omega == Rational(6));

    for (const Int3& k : {fr.k1, fr.k2}) {
        CHECK(k[0] * fr.m[0] + k[1] * fr.m[1] + k[2] * fr.m[2] == 0);
        Rational dot = Rational(k[0]) * fr.omega_star[0] + Rational(k[1]) * fr.omega_star[1] +
                       Rational(k[2]) * fr.omega_star[2];
        CHECK(dot == Rational(0));
    }

    // angle_map * angle_map_inverse is the identity in exact arithmetic
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            Rational acc(0);
            for (int l = 0; l < 3; ++l)
                acc = acc + Rational(fr.angle_map[i][l]) * fr.angle_map_inverse[l][j];
            CHECK(acc == Rational(i == j ? 1 : 0));
        }

    const std::array<double, 3> J{0.3, -0.7, 0.11};
    auto jr = fr.to_resonant_actions(J);
    CHECK(jr[2] == doctest::Approx((2 * J[0] + J[1] + 5 * J[2]) / 30.0).epsilon(1e-14));
    auto back = fr.from_resonant_actions(jr);
    for (int i = 0; i < 3; ++i) CHECK(back[i] == doctest::Approx(J[i]).epsilon(1e-13));

    const std::array<double, 3> phi{0.4, 1.9, -2.2};
    auto pr = fr.to_resonant_angles(phi);
    CHECK(pr[0] == doctest::Approx(phi[0] - 2 * phi[1]).epsilon(1e-14));
    CHECK(pr[2] == doctest::Approx(2 * phi[0] + phi[1] + 5 * phi[2]).epsilon(1e-14));
    auto pb = fr.from_resonant_angles(pr);
    for (int i = 0; i < 3; ++i) CHECK(pb[i] == doctest::Approx(phi[i]).epsilon(1e-13));

    // canonical pairing: J . dphi is preserved by the pair of linear maps
    const std::array<double, 3> dphi{0.2, -0.05, 0.13};
    auto dpr = fr.to_resonant_angles(dphi);
    double before = J[0] * dphi[0] + J[1] * dphi[1] + J[2] * dphi[2];
    double after = jr[0] * dpr[0] + jr[1] * dpr[1] + jr[2] * dpr[2];
    CHECK(after == doctest::Approx(before).epsilon(1e-13));
}

TEST_CASE("resonant frame at the doubly resonant study point") {
    ResonantFrame fr = build_resonant_frame(rat3("0.31", "0.155", "1"), 131);
    CHECK(fr.k1 == Int3{1, -2, 0});
    CHECK(fr.k2 == Int3{100, 0, -31});
    CHECK(fr.m == Int3{62, 31, 200});
    CHECK(fr.det == 44805);
    Rational mw = Rational(fr.m[0]) * fr.omega_star[0] + Rational(fr.m[1]) * fr.omega_star[1] +
                  Rational(fr.m[2]) * fr.omega_star[2];
    CHECK(mw.num > 0);
    CHECK(fr.m_dot_omega == mw);

    CHECK_THROWS_AS(build_resonant_frame(rat3("0.31", "0.155", "1"), 130), ConfigError);
    CHECK_THROWS_AS(build_resonant_frame(rat3("0.31", "0.155", "1"), 0), ConfigError);
}

TEST_CASE("tie between equal-length partners resolves lexicographically") {
    ResonantFrame fr = build_resonant_frame(rat3("1/2", "1/2", "1"), 6);
    CHECK(fr.k1 == Int3{1, -1, 0});
    CHECK(fr.k2 == Int3{0, 2, -1});
    CHECK(fr.m == Int3{1, 1, 2});
}

TEST_CASE("non-resonant points are rejected") {
    // omega = (1/3, 1/7, 1) has only k = 0 orthogonal within a small radius
    CHECK_THROWS_AS(build_resonant_frame(rat3("1/3", "1/7", "1"), 4), ConfigError);
}

TEST_CASE("perturbation derivatives match finite differences") {
    const std::array<double, 3> phi{0.7, -1.3, 2.1};
    auto grad = model_perturbation_gradient(phi);
    const double h = 1e-6;
    for (int i = 0; i < 3; ++i) {
        auto hi = phi, lo = phi;
        hi[i] += h;
        lo[i] -= h;
        double fd = (model_perturbation(hi) - model_perturbation(lo)) / (2 * h);
        CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6));
    }
    const std::array<double, 3> I{0.4, 0.2, 1.0};
    CHECK(model_h0(I) == doctest::Approx(0.5 * (0.16 + 0.04) + 1.0));
    CHECK(model_omega(I)[0] == 0.4);
    CHECK(model_omega(I)[2] == 1.0);
    CHECK(model_hamiltonian(I, phi, 0.01) ==
          doctest::Approx(model_h0(I) + 0.01 * model_perturbation(phi)).epsilon(1e-15));
}

TEST_CASE("rescaled expansion carries the stated grading") {
    HamiltonianModel model = make_model(0.01, 35);
    ResonantFrame fr = build_resonant_frame(rat3("2/5", "1/5", "1"), 12);
    PoissonSeries H = build_rescaled_hamiltonian(model, fr, 3, 12);
    const double re = std::sqrt(0.01);

    REQUIRE(H.lowest_order() == 0);
    REQUIRE(H.highest_order() == 12);
    CHECK(H.orders().size() == 13);

    // order 0: omega* . J and nothing else
    REQUIRE(H.block(0).size() == 3);
    for (const Term& t : H.block(0)) {
        Int3 k, al;
        unpack_key(t.key, k, al);
        CHECK(k == Int3{0, 0, 0});
        CHECK(key_degree(t.key) == 1);
        if (al == Int3{1, 0, 0}) CHECK(t.c == doctest::Approx(0.4));
        if (al == Int3{0, 1, 0}) CHECK(t.c == doctest::Approx(0.2));
        if (al == Int3{0, 0, 1}) CHECK(t.c == doctest::Approx(1.0));
    }

    // order 1: two quadratic action terms, the constant, and |k| <= 2 harmonics
    CHECK(H.block(1).size() == 2 + 1 + 3 + 9);
    int quad = 0;
    for (const Term& t : H.block(1)) {
        Int3 k, al;
        unpack_key(t.key, k, al);
        if (key_degree(t.key) == 2) {
            ++quad;
            CHECK((al == Int3{2, 0, 0} || al == Int3{0, 2, 0}));
            CHECK(t.c == doctest::Approx(0.5 * re).epsilon(1e-15));
        } else {
            CHECK(key_degree(t.key) == 0);
            CHECK(key_ktotal(t.key) <= 2);
        }
    }
    CHECK(quad == 2);
    Int3 zero{0, 0, 0};
    double h000 = model.fourier_coefficient(zero);
    double h100 = model.fourier_coefficient({1, 0, 0});
    bool saw_const = false, saw_100 = false;
    for (const Term& t : H.block(1)) {
        Int3 k, al;
        unpack_key(t.key, k, al);
        if (al != zero) continue;
        if (k == zero) {
            saw_const = true;
            CHECK(t.c == doctest::Approx(re * h000).epsilon(1e-14));
        }
        if (k == Int3{1, 0, 0}) {
            saw_100 = true;
            CHECK(t.c == doctest::Approx(2 * re * h100).epsilon(1e-14));
            CHECK(t.s == 0.0);
        }
    }
    CHECK(saw_const);
    CHECK(saw_100);

    // order 2 holds exactly the 3 <= |k| <= 5 harmonics
    std::size_t shell_345 = canonical_shell(3).size() + canonical_shell(4).size() +
                            canonical_shell(5).size();
    CHECK(H.block(2).size() == shell_345);

    // every term sits at the order its shape dictates
    for (int bk : H.orders())
        for (const Term& t : H.block(bk)) {
            Int3 k, al;
            unpack_key(t.key, k, al);
            int deg = key_degree(t.key), l1 = key_ktotal(t.key);
            if (bk == 0) {
                CHECK(deg == 1);
                CHECK(l1 == 0);
            } else if (deg == 2) {
                CHECK(bk == 1);
                CHECK(l1 == 0);
            } else {
                CHECK(deg == 0);
                CHECK(bk == l1 / 3 + 1);
            }
        }
}

TEST_CASE("rescaled expansion reproduces the shifted Hamiltonian") {
    HamiltonianModel model = make_model(0.01, 35);
    ResonantFrame fr = build_resonant_frame(rat3("2/5", "1/5", "1"), 12);
    PoissonSeries H = build_rescaled_hamiltonian(model, fr, 3, 12);
    const double re = std::sqrt(0.01);
    const auto istar = fr.i_star_d();

    // tabulated truncation of the perturbation, same harmonics as the series
    auto tabulated = [&](const std::array<double, 3>& phi) {
        double acc = model.fourier_coefficient({0, 0, 0});
        for (int l1 = 1; l1 <= 35; ++l1)
            for (const Int3& k : canonical_shell(l1)) {
                double h = model.fourier_coefficient(k);
                if (h == 0.0) continue;
                acc += 2 * h * std::cos(k[0] * phi[0] + k[1] * phi[1] + k[2] * phi[2]);
            }
        return acc;
    };

    std::mt19937 rng(515151);
    std::uniform_real_distribution<double> ang(0.0, kTwoPi), rad(0.0, 0.4);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double h0_star = model_h0(istar);
    for (int rep = 0; rep < 100; ++rep) {
        std::array<double, 3> dir{gauss(rng), gauss(rng), gauss(rng)};
        double nrm = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
        double rho = rad(rng);
        std::array<double, 3> J{}, phi{};
        for (int i = 0; i < 3; ++i) {
            J[i] = rho * dir[i] / nrm;
            phi[i] = ang(rng);
        }
        std::array<double, 3> I{istar[0] + re * J[0], istar[1] + re * J[1],
                                istar[2] + re * J[2]};
        double shifted_tab =
            (model_h0(I) - h0_star + model.epsilon * tabulated(phi)) / re;
        double shifted_exact = (model_hamiltonian(I, phi, model.epsilon) - h0_star) / re;
        double val = H.evaluate(J, phi);
        CHECK(std::fabs(val - shifted_tab) <= 1e-10 * (1.0 + std::fabs(shifted_tab)));
        CHECK(std::fabs(val - shifted_exact) <= 1e-8 * (1.0 + std::fabs(shifted_exact)));
    }
}

TEST_CASE("rescaled expansion rejects an undersized coefficient table") {
    HamiltonianModel small = make_model(0.01, 20);
    ResonantFrame fr = build_resonant_frame(rat3("2/5", "1/5", "1"), 12);
    CHECK_THROWS_AS(build_rescaled_hamiltonian(small, fr, 3, 12), ConfigError);
    HamiltonianModel model = make_model(0.01, 35);
    CHECK_THROWS_AS(build_rescaled_hamiltonian(model, fr, 0, 12), ConfigError);
    CHECK_THROWS_AS(build_rescaled_hamiltonian(model, fr, 3, 1), ConfigError);
}

TEST_CASE("fourier json export follows the documented layout") {
    HamiltonianModel model = make_model(0.01, 6);
    std::string path = temp_path("hk");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f != nullptr);
    write_fourier_json(f, model);
    std::fclose(f);

    std::ifstream in(path);
    nlohmann::json doc = nlohmann::json::parse(in);
    CHECK(doc.at("sigma").get<double>() == doctest::Approx(0.795365));
    CHECK(doc.at("A").get<double>() == doctest::Approx(0.05));
    std::size_t wedge_cells = 0;
    for (int a = 0; a <= 6; ++a)
        for (int b = 0; b <= a; ++b)
            for (int c = 0; c <= b; ++c)
                if (a + b + c <= 6) ++wedge_cells;
    REQUIRE(doc.at("coeffs").size() == wedge_cells);
    const auto& first = doc["coeffs"][0];
    CHECK(first.at("k") == nlohmann::json::array({0, 0, 0}));
    CHECK(first.at("value").get<double>() ==
          doctest::Approx(model.fourier_coefficient({0, 0, 0})).epsilon(1e-15));
    int prev_l1 = -1;
    for (const auto& entry : doc["coeffs"]) {
        int a = entry["k"][0], b = entry["k"][1], c = entry["k"][2];
        CHECK(a >= b);
        CHECK(b >= c);
        CHECK(c >= 0);
        CHECK(a + b + c >= prev_l1);
        prev_l1 = a + b + c;
    }
    std::remove(path.c_str());
}

TEST_CASE("frame json round trips exactly") {
    ResonantFrame fr = build_resonant_frame(rat3("0.31", "0.155", "1"), 131);
    std::string path = temp_path("frame");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f != nullptr);
    write_frame_json(f, fr);
    std::fclose(f);

    ResonantFrame back = read_frame_json(path);
    CHECK(back.k1 == fr.k1);
    CHECK(back.k2 == fr.k2);
    CHECK(back.m == fr.m);
    CHECK(back.det == fr.det);
    CHECK(back.cross_gcd == fr.cross_gcd);
    CHECK(back.m_dot_omega == fr.m_dot_omega);
    for (int i = 0; i < 3; ++i) {
        CHECK(back.i_star[i] == fr.i_star[i]);
        CHECK(back.omega_star[i] == fr.omega_star[i]);
        for (int j = 0; j < 3; ++j)
            CHECK(back.angle_map_inverse[i][j] == fr.angle_map_inverse[i][j]);
    }

    // a second write of the reread frame is byte-identical
    std::string path2 = temp_path("frame2");
    std::FILE* g = std::fopen(path2.c_str(), "wb");
    REQUIRE(g != nullptr);
    write_frame_json(g, back);
    std::fclose(g);
    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    std::remove(path.c_str());
    std::remove(path2.c_str());
}
