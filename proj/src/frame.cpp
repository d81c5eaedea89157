// Exact construction of resonant frames over rational expansion points.
//
// Resonance tests multiply k against omega* = (p1/q1, p2/q2, 1) cleared of
// denominators, so every orthogonality decision is an integer identity in
// 128-bit arithmetic; nothing here depends on floating point. The angle map
// inverse is the integer adjugate divided by the determinant, stored as
// reduced fractions.

#include "nflab/frame.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <climits>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <tuple>
#include <vector>

#include "json.hpp"

namespace nflab {

namespace {

using i128 = __int128;

i128 abs128(i128 v) { return v < 0 ? -v : v; }

i128 gcd128(i128 a, i128 b) {
    a = abs128(a);
    b = abs128(b);
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

int64_t checked64(i128 v) {
    if (v > std::numeric_limits<int64_t>::max() || v < std::numeric_limits<int64_t>::min())
        throw NumericError("rational arithmetic overflow");
    return static_cast<int64_t>(v);
}

Rational make_rational(i128 num, i128 den) {
    if (den == 0) throw NumericError("rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    i128 g = gcd128(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    Rational r;
    r.num = checked64(num);
    r.den = checked64(den);
    return r;
}

bool is_canonical(const Int3& k) {
    for (int v : k) {
        if (v > 0) return true;
        if (v < 0) return false;
    }
    return false;
}

int l1_norm(const Int3& k) { return std::abs(k[0]) + std::abs(k[1]) + std::abs(k[2]); }

Int3 cross(const Int3& a, const Int3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// numerators of k . omega* after clearing denominators; zero iff resonant
struct ResonanceTest {
    i128 w[3];

    explicit ResonanceTest(const std::array<Rational, 3>& omega) {
        const i128 q0 = omega[0].den, q1 = omega[1].den, q2 = omega[2].den;
        w[0] = static_cast<i128>(omega[0].num) * q1 * q2;
        w[1] = static_cast<i128>(omega[1].num) * q0 * q2;
        w[2] = static_cast<i128>(omega[2].num) * q0 * q1;
    }

    i128 dot(const Int3& k) const {
        return static_cast<i128>(k[0]) * w[0] + static_cast<i128>(k[1]) * w[1] +
               static_cast<i128>(k[2]) * w[2];
    }
};

bool parse_int64(const std::string& text, int64_t& out) {
    if (text.empty()) return false;
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(text.c_str(), &end, 10);
    if (errno == ERANGE || end != text.c_str() + text.size()) return false;
    out = v;
    return true;
}

}  // namespace

ResonantFrame frame_from_wavevectors(const std::array<Rational, 3>& i_star, const Int3& k1,
                                     const Int3& k2) {
    for (const Int3& k : {k1, k2})
        for (int v : k)
            if (std::abs(v) > 1000)
                throw ConfigError("wavevector component out of range [-1000, 1000]");

    ResonantFrame fr;
    fr.i_star = i_star;
    fr.omega_star = {i_star[0], i_star[1], Rational(1)};
    fr.hessian = {{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 0.0}}};
    fr.k1 = k1;
    fr.k2 = k2;

    const ResonanceTest res(fr.omega_star);
    if (res.dot(k1) != 0 || res.dot(k2) != 0)
        throw ConfigError("wavevector does not annihilate the frequency at I*");

    Int3 c = cross(k1, k2);
    if (c == Int3{0, 0, 0}) throw ConfigError("resonant wavevectors are collinear");
    int64_t g = std::gcd(std::gcd(std::abs(c[0]), std::abs(c[1])), std::abs(c[2]));
    fr.cross_gcd = g;
    fr.m = {static_cast<int>(c[0] / g), static_cast<int>(c[1] / g), static_cast<int>(c[2] / g)};
    if (res.dot(fr.m) < 0)
        fr.m = {-fr.m[0], -fr.m[1], -fr.m[2]};

    for (int j = 0; j < 3; ++j) {
        fr.angle_map[0][j] = k1[j];
        fr.angle_map[1][j] = k2[j];
        fr.angle_map[2][j] = fr.m[j];
    }
    const auto& B = fr.angle_map;
    fr.det = B[0][0] * (B[1][1] * B[2][2] - B[1][2] * B[2][1]) -
             B[0][1] * (B[1][0] * B[2][2] - B[1][2] * B[2][0]) +
             B[0][2] * (B[1][0] * B[2][1] - B[1][1] * B[2][0]);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const int i1 = (j + 1) % 3, i2 = (j + 2) % 3;
            const int j1 = (i + 1) % 3, j2 = (i + 2) % 3;
            const int64_t cof = B[i1][j1] * B[i2][j2] - B[i1][j2] * B[i2][j1];
            fr.angle_map_inverse[i][j] = make_rational(cof, fr.det);
        }

    fr.m_dot_omega = Rational(fr.m[0]) * fr.omega_star[0] +
                     Rational(fr.m[1]) * fr.omega_star[1] +
                     Rational(fr.m[2]) * fr.omega_star[2];
    return fr;
}

Rational::Rational(int64_t n, int64_t d) {
    Rational r = make_rational(n, d);
    num = r.num;
    den = r.den;
}

std::string Rational::str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
}

Rational operator+(const Rational& a, const Rational& b) {
    return make_rational(static_cast<i128>(a.num) * b.den + static_cast<i128>(b.num) * a.den,
                         static_cast<i128>(a.den) * b.den);
}

Rational operator-(const Rational& a, const Rational& b) {
    return make_rational(static_cast<i128>(a.num) * b.den - static_cast<i128>(b.num) * a.den,
                         static_cast<i128>(a.den) * b.den);
}

Rational operator*(const Rational& a, const Rational& b) {
    return make_rational(static_cast<i128>(a.num) * b.num, static_cast<i128>(a.den) * b.den);
}

Rational operator/(const Rational& a, const Rational& b) {
    if (b.num == 0) throw NumericError("rational division by zero");
    return make_rational(static_cast<i128>(a.num) * b.den, static_cast<i128>(a.den) * b.num);
}

Rational parse_rational(const std::string& text) {
    std::size_t lo = 0, hi = text.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(text[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(text[hi - 1]))) --hi;
    const std::string body = text.substr(lo, hi - lo);
    if (body.empty()) throw ConfigError("empty rational literal");

    const std::size_t slash = body.find('/');
    if (slash != std::string::npos) {
        int64_t num = 0, den = 0;
        if (!parse_int64(body.substr(0, slash), num) ||
            !parse_int64(body.substr(slash + 1), den) || den == 0)
            throw ConfigError("malformed rational literal: " + text);
        return Rational(num, den);
    }

    const std::size_t dot = body.find('.');
    if (dot != std::string::npos) {
        std::string head = body.substr(0, dot), frac = body.substr(dot + 1);
        bool neg = false;
        if (!head.empty() && (head[0] == '+' || head[0] == '-')) {
            neg = head[0] == '-';
            head.erase(0, 1);
        }
        if (head.empty() && frac.empty())
            throw ConfigError("malformed rational literal: " + text);
        if (frac.size() > 18)
            throw ConfigError("decimal literal has too many digits: " + text);
        for (char ch : head + frac)
            if (!std::isdigit(static_cast<unsigned char>(ch)))
                throw ConfigError("malformed rational literal: " + text);
        i128 num = 0;
        for (char ch : head) num = num * 10 + (ch - '0');
        i128 den = 1;
        for (char ch : frac) {
            num = num * 10 + (ch - '0');
            den *= 10;
        }
        return make_rational(neg ? -num : num, den);
    }

    int64_t v = 0;
    if (!parse_int64(body, v)) throw ConfigError("malformed rational literal: " + text);
    return Rational(v);
}

std::array<double, 3> ResonantFrame::i_star_d() const {
    return {i_star[0].value(), i_star[1].value(), i_star[2].value()};
}

std::array<double, 3> ResonantFrame::omega_star_d() const {
    return {omega_star[0].value(), omega_star[1].value(), omega_star[2].value()};
}

std::array<double, 3> ResonantFrame::to_resonant_angles(const std::array<double, 3>& phi) const {
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            out[i] += static_cast<double>(angle_map[i][j]) * phi[j];
    return out;
}

std::array<double, 3> ResonantFrame::from_resonant_angles(
    const std::array<double, 3>& phi_r) const {
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            out[i] += angle_map_inverse[i][j].value() * phi_r[j];
    return out;
}

std::array<double, 3> ResonantFrame::to_resonant_actions(const std::array<double, 3>& J) const {
    std::array<double, 3> out{};
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i)
            out[j] += angle_map_inverse[i][j].value() * J[i];
    return out;
}

std::array<double, 3> ResonantFrame::from_resonant_actions(
    const std::array<double, 3>& J_r) const {
    std::array<double, 3> out{};
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i)
            out[j] += static_cast<double>(angle_map[i][j]) * J_r[i];
    return out;
}

ResonantFrame build_resonant_frame(const std::array<Rational, 3>& i_star, int kmax_search) {
    if (kmax_search < 1) throw ConfigError("kmax_search must be at least 1");
    if (kmax_search > 300) throw ConfigError("kmax_search exceeds the supported range (300)");

    const std::array<Rational, 3> omega{i_star[0], i_star[1], Rational(1)};
    const ResonanceTest res(omega);

    std::vector<Int3> cand;
    const int K = kmax_search;
    for (int a = -K; a <= K; ++a)
        for (int b = -(K - std::abs(a)); b <= K - std::abs(a); ++b) {
            const int rem = K - std::abs(a) - std::abs(b);
            for (int c = -rem; c <= rem; ++c) {
                const Int3 k{a, b, c};
                if (!is_canonical(k)) continue;
                if (res.dot(k) == 0) cand.push_back(k);
            }
        }
    std::sort(cand.begin(), cand.end(), [](const Int3& x, const Int3& y) {
        const int lx = l1_norm(x), ly = l1_norm(y);
        if (lx != ly) return lx < ly;
        return x < y;
    });

    bool found = false;
    int best_sum = 0, best_l1 = 0;
    Int3 best_a{}, best_b{};
    for (std::size_t ia = 0; ia < cand.size(); ++ia) {
        const int la = l1_norm(cand[ia]);
        if (found && 2 * la > best_sum) break;
        for (std::size_t ib = 0; ib < cand.size(); ++ib) {
            if (ib == ia) continue;
            const int lb = l1_norm(cand[ib]);
            if (lb < la) continue;
            if (found && la + lb > best_sum) break;
            if (cross(cand[ia], cand[ib]) == Int3{0, 0, 0}) continue;
            const bool better =
                !found ||
                std::make_tuple(la + lb, la, cand[ia], cand[ib]) <
                    std::make_tuple(best_sum, best_l1, best_a, best_b);
            if (better) {
                found = true;
                best_sum = la + lb;
                best_l1 = la;
                best_a = cand[ia];
                best_b = cand[ib];
            }
        }
    }
    if (!found)
        throw ConfigError("point is not doubly resonant: fewer than two independent "
                          "wavevectors with |k| <= " + std::to_string(kmax_search));
    return frame_from_wavevectors(i_star, best_a, best_b);
}

void write_frame_json(std::FILE* out, const ResonantFrame& fr) {
    auto rat3 = [out](const char* key, const std::array<Rational, 3>& v, const char* tail) {
        std::fprintf(out, "\"%s\": [\"%s\", \"%s\", \"%s\"]%s\n", key, v[0].str().c_str(),
                     v[1].str().c_str(), v[2].str().c_str(), tail);
    };
    auto int3 = [out](const char* key, const Int3& v, const char* tail) {
        std::fprintf(out, "\"%s\": [%d, %d, %d]%s\n", key, v[0], v[1], v[2], tail);
    };
    std::fprintf(out, "{\n");
    rat3("i_star", fr.i_star, ",");
    rat3("omega_star", fr.omega_star, ",");
    std::fprintf(out, "\"hessian\": [");
    for (int i = 0; i < 3; ++i)
        std::fprintf(out, "[%.17g, %.17g, %.17g]%s", fr.hessian[i][0], fr.hessian[i][1],
                     fr.hessian[i][2], i < 2 ? ", " : "],\n");
    int3("k1", fr.k1, ",");
    int3("k2", fr.k2, ",");
    int3("m", fr.m, ",");
    std::fprintf(out, "\"det\": %lld,\n", static_cast<long long>(fr.det));
    std::fprintf(out, "\"cross_gcd\": %lld,\n", static_cast<long long>(fr.cross_gcd));
    std::fprintf(out, "\"m_dot_omega\": \"%s\",\n", fr.m_dot_omega.str().c_str());
    std::fprintf(out, "\"angle_map_inverse\": [");
    for (int i = 0; i < 3; ++i) {
        std::fprintf(out, "[\"%s\", \"%s\", \"%s\"]%s", fr.angle_map_inverse[i][0].str().c_str(),
                     fr.angle_map_inverse[i][1].str().c_str(),
                     fr.angle_map_inverse[i][2].str().c_str(), i < 2 ? ", " : "]\n");
    }
    std::fprintf(out, "}\n");
    if (std::ferror(out)) throw ResourceError("short write on frame file");
}

ResonantFrame read_frame_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open frame file: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
    try {
        std::array<Rational, 3> istar;
        for (int i = 0; i < 3; ++i)
            istar[i] = parse_rational(doc.at("i_star").at(i).get<std::string>());
        Int3 k1{}, k2{}, m{};
        for (int i = 0; i < 3; ++i) {
            k1[i] = doc.at("k1").at(i).get<int>();
            k2[i] = doc.at("k2").at(i).get<int>();
            m[i] = doc.at("m").at(i).get<int>();
        }
        ResonantFrame fr = frame_from_wavevectors(istar, k1, k2);
        if (fr.m != m)
            throw ConfigError("frame file " + path + " stores m inconsistent with k1 x k2");
        return fr;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("frame file " + path + " is malformed: " + e.what());
    }
}

}  // namespace nflab
