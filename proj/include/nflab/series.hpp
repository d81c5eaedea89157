// Sparse graded Fourier-Taylor series over 3 action and 3 angle variables.
//
// A series is a sum of terms
//     J1^a1 J2^a2 J3^a3 * (c * cos(k . phi) + s * sin(k . phi))
// indexed by the integer wavevector k and the exponent vector alpha, graded by
// a non-negative integer "book-keeping" order that tracks each term's formal
// order of smallness. Storage is canonical-real: for each wavevector only one
// of (k, -k) is kept (first nonzero component positive), with separate cosine
// and sine coefficients, so evaluation is real by construction. Terms rest in
// per-order blocks sorted by packed key; products scatter-accumulate through a
// transient hash map and are merged back in key order through a fixed pairwise
// tree, which makes results bit-reproducible for a given partition count.
#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "nflab/common.hpp"

namespace nflab {

using Int3 = std::array<int, 3>;

// Packed (k, alpha) key. k components must lie in [-255, 255], exponents in
// [0, 63]; layout (low to high bits): k1,k2,k3 (9 bits each, biased by 255),
// a1,a2,a3 (6 bits each).
uint64_t pack_key(const Int3& k, const Int3& alpha);
void unpack_key(uint64_t key, Int3& k, Int3& alpha);
int key_ktotal(uint64_t key);   // |k1|+|k2|+|k3|
int key_degree(uint64_t key);   // a1+a2+a3

// Flips k to the canonical representative (first nonzero component positive).
// Returns true if the sign was flipped, in which case the caller must negate
// the sine coefficient.
bool canonicalize_wavevector(Int3& k);

// Majorant weight of the action monomial J^alpha over the ball of radius rho:
// w(alpha) * rho^q with q = a1+a2+a3 and w = a1^(a1/2) a2^(a2/2) a3^(a3/2)
// / q^(q/2) (0^0 = 1). A term's weighted-norm contribution is
// hypot(c, s) * action_weight(alpha, rho).
double action_weight(const Int3& alpha, double rho);

struct Term {
    uint64_t key;
    double c;  // cosine coefficient
    double s;  // sine coefficient (always 0 when k == 0)
};

struct TruncationPolicy {
    int max_bk_order = 12;
    double zero_threshold = 1e-25;

    bool operator==(const TruncationPolicy&) const = default;
};

// One grading block: terms of a single book-keeping order, sorted by key.
using Block = std::vector<Term>;

class PoissonSeries {
public:
    PoissonSeries() = default;
    explicit PoissonSeries(const TruncationPolicy& pol) : pol_(pol) {}

    const TruncationPolicy& policy() const { return pol_; }
    int max_bk() const { return pol_.max_bk_order; }

    // Adds one term (accumulating if the key exists). k is canonicalized and
    // the sine part of k = 0 harmonics is required to vanish; terms at orders
    // above the policy cap or below the zero threshold are dropped silently.
    void add_term(int bk, Int3 k, const Int3& alpha, double cos_coef, double sin_coef);

    // Drops terms whose coefficient pair has magnitude below the policy
    // threshold and re-sorts; add_term already maintains both invariants, but
    // bulk builders call this once at the end.
    void compress();

    bool empty() const;
    std::size_t term_count() const;
    int lowest_order() const;   // -1 when empty
    int highest_order() const;  // -1 when empty

    const Block& block(int bk) const;  // empty block for out-of-range orders
    std::vector<int> orders() const;   // non-empty block indices, ascending

    // Pointwise value at (J, phi).
    double evaluate(const std::array<double, 3>& J, const std::array<double, 3>& phi) const;

    // Majorant norm over the action ball of radius rho: every term contributes
    // hypot(c, s) * w(alpha) * rho^q with q = a1+a2+a3 and weight
    // w = a1^(a1/2) a2^(a2/2) a3^(a3/2) / q^(q/2) (0^0 = 1), the sup of
    // |J^alpha| on the ball. Bounds sup |f| since |c cos + s sin| <= hypot.
    double weighted_norm(double rho) const;
    double weighted_norm_block(int bk, double rho) const;

    PoissonSeries& operator+=(const PoissonSeries& other);
    PoissonSeries& operator*=(double factor);

    // Keeps only terms for which pred(k, alpha) holds. Used to split normal
    // form harmonics from the rest; never touches coefficients.
    PoissonSeries filtered(const std::function<bool(const Int3&, const Int3&)>& pred) const;

    bool same_policy(const PoissonSeries& other) const { return pol_ == other.pol_; }

    // Internal mutable access for the algebra kernels.
    std::vector<Block>& raw_blocks() { return blocks_; }
    const std::vector<Block>& raw_blocks() const { return blocks_; }
    void ensure_order(int bk);

private:
    TruncationPolicy pol_;
    std::vector<Block> blocks_;
};

// Product with book-keeping orders added per term pair; trigonometric
// products are resolved by the angle-addition identities so the canonical
// real form is preserved. Policies must match.
PoissonSeries multiply(const PoissonSeries& a, const PoissonSeries& b);

// Canonical Poisson bracket sum_i (df/dphi_i dg/dJ_i - df/dJ_i dg/dphi_i).
// With this sign convention {omega . J, exp(i k . phi)} = -i (k . omega)
// times the exponential, and {J1, cos phi1} = sin phi1.
PoissonSeries poisson_bracket(const PoissonSeries& f, const PoissonSeries& g);

// exp(L_chi) f = sum_n L_chi^n f / n! with L_chi f = {f, chi}. Requires chi
// to have lowest order >= 1 so the sum terminates under truncation.
PoissonSeries lie_transform(const PoissonSeries& chi, const PoissonSeries& f);

enum class Variable { J1, J2, J3, Phi1, Phi2, Phi3 };

// Exact term-wise derivative; grading orders are unchanged.
PoissonSeries partial_derivative(const PoissonSeries& f, Variable v);

PoissonSeries add(const PoissonSeries& a, const PoissonSeries& b);
PoissonSeries scale(const PoissonSeries& a, double factor);

// Streams the series as JSON {"kprime": int, "terms": [...]} with terms
// sorted by (bk, |k|, k lexicographic, alpha lexicographic); numbers carry 17
// significant digits. The reader accepts exactly this schema.
void write_series_json(std::FILE* out, const PoissonSeries& s, int kprime);
PoissonSeries read_series_json(const std::string& path, TruncationPolicy pol, int* kprime_out);

// Compact binary dump for checkpoints and caches (not a public format).
void write_series_binary(std::FILE* out, const PoissonSeries& s);
PoissonSeries read_series_binary(std::FILE* in);

}  // namespace nflab
