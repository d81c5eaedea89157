#include "nflab/series.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "nflab/parallel.hpp"

namespace nflab {

namespace {

constexpr int kMaxWave = 255;
constexpr int kMaxExp = 63;
constexpr uint64_t kEmptySlot = ~0ull;

// Pairs per accumulation chunk; the partition depends only on block sizes, so
// results do not depend on the worker count.
constexpr std::size_t kChunkPairs = std::size_t{1} << 20;

uint64_t mix64(uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ull;
    x ^= x >> 33;
    return x;
}

}  // namespace

uint64_t pack_key(const Int3& k, const Int3& alpha) {
    uint64_t key = 0;
    for (int i = 0; i < 3; ++i) {
        if (k[i] < -kMaxWave || k[i] > kMaxWave)
            throw NumericError("wavevector component out of representable range [-255, 255]");
        if (alpha[i] < 0 || alpha[i] > kMaxExp)
            throw NumericError("action exponent out of representable range [0, 63]");
        key |= static_cast<uint64_t>(k[i] + kMaxWave) << (9 * i);
        key |= static_cast<uint64_t>(alpha[i]) << (27 + 6 * i);
    }
    return key;
}

void unpack_key(uint64_t key, Int3& k, Int3& alpha) {
    for (int i = 0; i < 3; ++i) {
        k[i] = static_cast<int>((key >> (9 * i)) & 0x1ff) - kMaxWave;
        alpha[i] = static_cast<int>((key >> (27 + 6 * i)) & 0x3f);
    }
}

int key_ktotal(uint64_t key) {
    int t = 0;
    for (int i = 0; i < 3; ++i)
        t += std::abs(static_cast<int>((key >> (9 * i)) & 0x1ff) - kMaxWave);
    return t;
}

int key_degree(uint64_t key) {
    int t = 0;
    for (int i = 0; i < 3; ++i) t += static_cast<int>((key >> (27 + 6 * i)) & 0x3f);
    return t;
}

bool canonicalize_wavevector(Int3& k) {
    for (int i = 0; i < 3; ++i) {
        if (k[i] > 0) return false;
        if (k[i] < 0) {
            k[0] = -k[0];
            k[1] = -k[1];
            k[2] = -k[2];
            return true;
        }
    }
    return false;  // k == 0
}

void PoissonSeries::ensure_order(int bk) {
    if (bk < 0) throw ConfigError("negative book-keeping order");
    if (static_cast<std::size_t>(bk) >= blocks_.size()) blocks_.resize(bk + 1);
}

void PoissonSeries::add_term(int bk, Int3 k, const Int3& alpha, double cos_coef,
                             double sin_coef) {
    if (bk < 0) throw ConfigError("negative book-keeping order");
    if (bk > pol_.max_bk_order) return;
    if (canonicalize_wavevector(k)) sin_coef = -sin_coef;
    if (k[0] == 0 && k[1] == 0 && k[2] == 0) sin_coef = 0.0;
    uint64_t key = pack_key(k, alpha);
    ensure_order(bk);
    Block& blk = blocks_[bk];
    auto it = std::lower_bound(blk.begin(), blk.end(), key,
                               [](const Term& t, uint64_t v) { return t.key < v; });
    if (it != blk.end() && it->key == key) {
        it->c += cos_coef;
        it->s += sin_coef;
        if (std::hypot(it->c, it->s) < pol_.zero_threshold) blk.erase(it);
    } else if (std::hypot(cos_coef, sin_coef) >= pol_.zero_threshold) {
        blk.insert(it, Term{key, cos_coef, sin_coef});
    }
}

void PoissonSeries::compress() {
    for (Block& blk : blocks_) {
        blk.erase(std::remove_if(blk.begin(), blk.end(),
                                 [this](const Term& t) {
                                     return std::hypot(t.c, t.s) < pol_.zero_threshold;
                                 }),
                  blk.end());
        std::sort(blk.begin(), blk.end(),
                  [](const Term& a, const Term& b) { return a.key < b.key; });
    }
}

bool PoissonSeries::empty() const {
    for (const Block& blk : blocks_)
        if (!blk.empty()) return false;
    return true;
}

std::size_t PoissonSeries::term_count() const {
    std::size_t n = 0;
    for (const Block& blk : blocks_) n += blk.size();
    return n;
}

int PoissonSeries::lowest_order() const {
    for (std::size_t b = 0; b < blocks_.size(); ++b)
        if (!blocks_[b].empty()) return static_cast<int>(b);
    return -1;
}

int PoissonSeries::highest_order() const {
    for (std::size_t b = blocks_.size(); b > 0; --b)
        if (!blocks_[b - 1].empty()) return static_cast<int>(b - 1);
    return -1;
}

const Block& PoissonSeries::block(int bk) const {
    static const Block empty_block;
    if (bk < 0 || static_cast<std::size_t>(bk) >= blocks_.size()) return empty_block;
    return blocks_[bk];
}

std::vector<int> PoissonSeries::orders() const {
    std::vector<int> out;
    for (std::size_t b = 0; b < blocks_.size(); ++b)
        if (!blocks_[b].empty()) out.push_back(static_cast<int>(b));
    return out;
}

double PoissonSeries::evaluate(const std::array<double, 3>& J,
                               const std::array<double, 3>& phi) const {
    double pw[3][kMaxExp + 1];
    for (int i = 0; i < 3; ++i) {
        pw[i][0] = 1.0;
        for (int d = 1; d <= kMaxExp; ++d) pw[i][d] = pw[i][d - 1] * J[i];
    }
    double total = 0.0;
    Int3 k, al;
    for (const Block& blk : blocks_) {
        for (const Term& t : blk) {
            unpack_key(t.key, k, al);
            double mono = pw[0][al[0]] * pw[1][al[1]] * pw[2][al[2]];
            double ang = k[0] * phi[0] + k[1] * phi[1] + k[2] * phi[2];
            total += mono * (t.c * std::cos(ang) + t.s * std::sin(ang));
        }
    }
    return total;
}

double action_weight(const Int3& alpha, double rho) {
    int q = alpha[0] + alpha[1] + alpha[2];
    if (q == 0) return 1.0;
    if (rho == 0.0) return 0.0;
    if (rho < 0) throw ConfigError("norm radius must be non-negative");
    double logw = q * std::log(rho) - 0.5 * q * std::log(double(q));
    for (int i = 0; i < 3; ++i)
        if (alpha[i] > 0) logw += 0.5 * alpha[i] * std::log(double(alpha[i]));
    return std::exp(logw);
}

namespace {

double term_norm_contrib(const Term& t, double rho) {
    Int3 k, al;
    unpack_key(t.key, k, al);
    return std::hypot(t.c, t.s) * action_weight(al, rho);
}

}  // namespace

double PoissonSeries::weighted_norm_block(int bk, double rho) const {
    if (rho < 0) throw ConfigError("norm radius must be non-negative");
    double sum = 0.0;
    for (const Term& t : block(bk)) sum += term_norm_contrib(t, rho);
    return sum;
}

double PoissonSeries::weighted_norm(double rho) const {
    if (rho < 0) throw ConfigError("norm radius must be non-negative");
    double sum = 0.0;
    for (const Block& blk : blocks_)
        for (const Term& t : blk) sum += term_norm_contrib(t, rho);
    return sum;
}

PoissonSeries& PoissonSeries::operator+=(const PoissonSeries& other) {
    if (!same_policy(other))
        throw ConfigError("cannot combine series with different truncation policies");
    for (std::size_t b = 0; b < other.blocks_.size(); ++b) {
        const Block& src = other.blocks_[b];
        if (src.empty()) continue;
        ensure_order(static_cast<int>(b));
        Block& dst = blocks_[b];
        Block merged;
        merged.reserve(dst.size() + src.size());
        std::size_t i = 0, j = 0;
        while (i < dst.size() || j < src.size()) {
            if (j == src.size() || (i < dst.size() && dst[i].key < src[j].key)) {
                merged.push_back(dst[i++]);
            } else if (i == dst.size() || src[j].key < dst[i].key) {
                merged.push_back(src[j++]);
            } else {
                Term t{dst[i].key, dst[i].c + src[j].c, dst[i].s + src[j].s};
                ++i;
                ++j;
                if (std::hypot(t.c, t.s) >= pol_.zero_threshold) merged.push_back(t);
            }
        }
        dst = std::move(merged);
    }
    return *this;
}

PoissonSeries& PoissonSeries::operator*=(double factor) {
    for (Block& blk : blocks_)
        for (Term& t : blk) {
            t.c *= factor;
            t.s *= factor;
        }
    if (factor == 0.0) blocks_.clear();
    return *this;
}

PoissonSeries PoissonSeries::filtered(
    const std::function<bool(const Int3&, const Int3&)>& pred) const {
    PoissonSeries out(pol_);
    out.blocks_.resize(blocks_.size());
    Int3 k, al;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        for (const Term& t : blocks_[b]) {
            unpack_key(t.key, k, al);
            if (pred(k, al)) out.blocks_[b].push_back(t);
        }
    }
    return out;
}

PoissonSeries add(const PoissonSeries& a, const PoissonSeries& b) {
    PoissonSeries out = a;
    out += b;
    return out;
}

PoissonSeries scale(const PoissonSeries& a, double factor) {
    PoissonSeries out = a;
    out *= factor;
    return out;
}

namespace {

// Unpacked term with per-axis nonzero masks, used by the pairwise kernels.
struct UTerm {
    int16_t k[3];
    uint8_t al[3];
    uint8_t kmask;  // bit i set when k[i] != 0
    uint8_t amask;  // bit i set when al[i] != 0
    double c, s;
};

std::vector<UTerm> unpack_block(const Block& blk) {
    std::vector<UTerm> out;
    out.reserve(blk.size());
    Int3 k, al;
    for (const Term& t : blk) {
        UTerm u{};
        unpack_key(t.key, k, al);
        for (int i = 0; i < 3; ++i) {
            u.k[i] = static_cast<int16_t>(k[i]);
            u.al[i] = static_cast<uint8_t>(al[i]);
            if (k[i] != 0) u.kmask |= uint8_t(1 << i);
            if (al[i] != 0) u.amask |= uint8_t(1 << i);
        }
        u.c = t.c;
        u.s = t.s;
        out.push_back(u);
    }
    return out;
}

// Open-addressing accumulator keyed by packed (k, alpha). Accumulation order
// within one chunk follows emission order, which is fixed by the pair loop.
class Accumulator {
public:
    void emit(int k1, int k2, int k3, int a1, int a2, int a3, double c, double s) {
        if (c == 0.0 && s == 0.0) return;
        int flip = 1;
        if (k1 < 0 || (k1 == 0 && (k2 < 0 || (k2 == 0 && k3 < 0)))) {
            k1 = -k1;
            k2 = -k2;
            k3 = -k3;
            flip = -1;
        }
        if (k1 == 0 && k2 == 0 && k3 == 0) {
            if (c == 0.0) return;
            s = 0.0;
        } else {
            s *= flip;
        }
        if (k1 > kMaxWave || k2 > kMaxWave || k3 > kMaxWave)
            throw NumericError("wavevector component out of representable range [-255, 255]");
        if (a1 > kMaxExp || a2 > kMaxExp || a3 > kMaxExp)
            throw NumericError("action exponent out of representable range [0, 63]");
        uint64_t key = static_cast<uint64_t>(k1 + kMaxWave) |
                       (static_cast<uint64_t>(k2 + kMaxWave) << 9) |
                       (static_cast<uint64_t>(k3 + kMaxWave) << 18) |
                       (static_cast<uint64_t>(a1) << 27) | (static_cast<uint64_t>(a2) << 33) |
                       (static_cast<uint64_t>(a3) << 39);
        insert(key, c, s);
    }

    void extract_sorted(std::vector<Term>& out) {
        out.clear();
        out.reserve(size_);
        for (std::size_t i = 0; i < keys_.size(); ++i)
            if (keys_[i] != kEmptySlot) out.push_back(Term{keys_[i], cval_[i], sval_[i]});
        std::sort(out.begin(), out.end(),
                  [](const Term& a, const Term& b) { return a.key < b.key; });
    }

private:
    void insert(uint64_t key, double c, double s) {
        if (keys_.empty()) rehash(1024);
        std::size_t mask = keys_.size() - 1;
        std::size_t slot = mix64(key) & mask;
        for (;;) {
            if (keys_[slot] == key) {
                cval_[slot] += c;
                sval_[slot] += s;
                return;
            }
            if (keys_[slot] == kEmptySlot) {
                keys_[slot] = key;
                cval_[slot] = c;
                sval_[slot] = s;
                if (++size_ * 10 > keys_.size() * 7) rehash(keys_.size() * 2);
                return;
            }
            slot = (slot + 1) & mask;
        }
    }

    void rehash(std::size_t cap) {
        std::vector<uint64_t> old_keys = std::move(keys_);
        std::vector<double> old_c = std::move(cval_);
        std::vector<double> old_s = std::move(sval_);
        keys_.assign(cap, kEmptySlot);
        cval_.assign(cap, 0.0);
        sval_.assign(cap, 0.0);
        std::size_t mask = cap - 1;
        for (std::size_t i = 0; i < old_keys.size(); ++i) {
            if (old_keys[i] == kEmptySlot) continue;
            std::size_t slot = mix64(old_keys[i]) & mask;
            while (keys_[slot] != kEmptySlot) slot = (slot + 1) & mask;
            keys_[slot] = old_keys[i];
            cval_[slot] = old_c[i];
            sval_[slot] = old_s[i];
        }
    }

    std::vector<uint64_t> keys_;
    std::vector<double> cval_, sval_;
    std::size_t size_ = 0;
};

std::vector<Term> merge_sorted_sum(const std::vector<Term>& a, const std::vector<Term>& b,
                                   double /*zt*/) {
    std::vector<Term> out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].key < b[j].key)) {
            out.push_back(a[i++]);
        } else if (i == a.size() || b[j].key < a[i].key) {
            out.push_back(b[j++]);
        } else {
            out.push_back(Term{a[i].key, a[i].c + b[j].c, a[i].s + b[j].s});
            ++i;
            ++j;
        }
    }
    return out;
}

struct PairJob {
    int ba, bb;
    std::size_t lo, hi;  // left-operand term range
};

// Runs kern over every term pair of every block pair with ba + bb == obk for
// each output order obk, accumulating per chunk and merging chunk results
// through a pairwise tree. The chunk partition depends only on block sizes.
template <class Kernel>
PoissonSeries pairwise_combine(const PoissonSeries& a, const PoissonSeries& b, Kernel kern) {
    if (!a.same_policy(b))
        throw ConfigError("cannot combine series with different truncation policies");
    const TruncationPolicy& pol = a.policy();
    PoissonSeries result(pol);

    int amax = a.highest_order();
    int bmax = b.highest_order();
    if (amax < 0 || bmax < 0) return result;

    std::vector<std::vector<UTerm>> ua(amax + 1), ub(bmax + 1);
    for (int i = 0; i <= amax; ++i) ua[i] = unpack_block(a.block(i));
    for (int i = 0; i <= bmax; ++i) ub[i] = unpack_block(b.block(i));

    for (int obk = 0; obk <= pol.max_bk_order; ++obk) {
        std::vector<PairJob> jobs;
        for (int ba = 0; ba <= amax && ba <= obk; ++ba) {
            int bb = obk - ba;
            if (bb > bmax) continue;
            std::size_t n = ua[ba].size(), m = ub[bb].size();
            if (n == 0 || m == 0) continue;
            std::size_t rows = std::max<std::size_t>(1, kChunkPairs / m);
            for (std::size_t lo = 0; lo < n; lo += rows)
                jobs.push_back(PairJob{ba, bb, lo, std::min(n, lo + rows)});
        }
        if (jobs.empty()) continue;

        std::vector<std::vector<Term>> partial(jobs.size());
        parallel_for(jobs.size(), [&](std::size_t j) {
            const PairJob& job = jobs[j];
            const std::vector<UTerm>& left = ua[job.ba];
            const std::vector<UTerm>& right = ub[job.bb];
            Accumulator acc;
            for (std::size_t i = job.lo; i < job.hi; ++i)
                for (const UTerm& g : right) kern(left[i], g, acc);
            acc.extract_sorted(partial[j]);
        });

        while (partial.size() > 1) {
            std::vector<std::vector<Term>> next;
            next.reserve((partial.size() + 1) / 2);
            for (std::size_t i = 0; i + 1 < partial.size(); i += 2)
                next.push_back(merge_sorted_sum(partial[i], partial[i + 1], pol.zero_threshold));
            if (partial.size() % 2) next.push_back(std::move(partial.back()));
            partial = std::move(next);
        }

        result.ensure_order(obk);
        Block final_block;
        final_block.reserve(partial[0].size());
        for (const Term& t : partial[0])
            if (std::hypot(t.c, t.s) >= pol.zero_threshold) final_block.push_back(t);
        result.raw_blocks()[obk] = std::move(final_block);
    }
    return result;
}

}  // namespace

PoissonSeries multiply(const PoissonSeries& a, const PoissonSeries& b) {
    return pairwise_combine(a, b, [](const UTerm& f, const UTerm& g, Accumulator& acc) {
        double pc = f.c * g.c, ps = f.s * g.s;
        double cs = f.c * g.s, sc = f.s * g.c;
        int a1 = f.al[0] + g.al[0], a2 = f.al[1] + g.al[1], a3 = f.al[2] + g.al[2];
        acc.emit(f.k[0] + g.k[0], f.k[1] + g.k[1], f.k[2] + g.k[2], a1, a2, a3,
                 0.5 * (pc - ps), 0.5 * (cs + sc));
        acc.emit(f.k[0] - g.k[0], f.k[1] - g.k[1], f.k[2] - g.k[2], a1, a2, a3,
                 0.5 * (pc + ps), 0.5 * (sc - cs));
    });
}

PoissonSeries poisson_bracket(const PoissonSeries& f, const PoissonSeries& g) {
    return pairwise_combine(f, g, [](const UTerm& ft, const UTerm& gt, Accumulator& acc) {
        if (((ft.kmask & gt.amask) | (ft.amask & gt.kmask)) == 0) return;
        for (int i = 0; i < 3; ++i) {
            double t1 = double(ft.k[i]) * gt.al[i];  // d f/d phi_i times beta_i
            double t2 = double(ft.al[i]) * gt.k[i];  // alpha_i times d g/d phi_i
            if (t1 == 0.0 && t2 == 0.0) continue;
            // piece 1: (b k_i, -a k_i) x (beta_i c, beta_i d)
            double p1 = ft.s * t1, q1 = -ft.c * t1;
            double r1 = gt.c, s1 = gt.s;
            // piece 2: (-alpha_i a, -alpha_i b) x (d l_i, -c l_i)
            double p2 = -ft.c * t2, q2 = -ft.s * t2;
            double r2 = gt.s, s2 = -gt.c;
            double cp = 0.5 * (p1 * r1 - q1 * s1 + p2 * r2 - q2 * s2);
            double sp = 0.5 * (p1 * s1 + q1 * r1 + p2 * s2 + q2 * r2);
            double cm = 0.5 * (p1 * r1 + q1 * s1 + p2 * r2 + q2 * s2);
            double sm = 0.5 * (q1 * r1 - p1 * s1 + q2 * r2 - p2 * s2);
            int a1 = ft.al[0] + gt.al[0], a2 = ft.al[1] + gt.al[1], a3 = ft.al[2] + gt.al[2];
            int e1 = i == 0, e2 = i == 1, e3 = i == 2;
            acc.emit(ft.k[0] + gt.k[0], ft.k[1] + gt.k[1], ft.k[2] + gt.k[2], a1 - e1,
                     a2 - e2, a3 - e3, cp, sp);
            acc.emit(ft.k[0] - gt.k[0], ft.k[1] - gt.k[1], ft.k[2] - gt.k[2], a1 - e1,
                     a2 - e2, a3 - e3, cm, sm);
        }
    });
}

PoissonSeries lie_transform(const PoissonSeries& chi, const PoissonSeries& f) {
    if (!chi.same_policy(f))
        throw ConfigError("cannot combine series with different truncation policies");
    if (!chi.empty() && chi.lowest_order() < 1)
        throw NumericError("generator must have book-keeping order >= 1");
    PoissonSeries result = f;
    PoissonSeries term = f;
    int max_n = f.policy().max_bk_order + 1;
    for (int n = 1; n <= max_n; ++n) {
        term = poisson_bracket(term, chi);
        term *= 1.0 / n;
        if (term.empty()) return result;
        result += term;
    }
    if (!term.empty())
        throw NumericError("Lie series failed to terminate under truncation");
    return result;
}

PoissonSeries partial_derivative(const PoissonSeries& f, Variable v) {
    PoissonSeries out(f.policy());
    Int3 k, al;
    int axis = static_cast<int>(v) % 3;
    bool wrt_action = v == Variable::J1 || v == Variable::J2 || v == Variable::J3;
    for (int bk : f.orders()) {
        for (const Term& t : f.block(bk)) {
            unpack_key(t.key, k, al);
            if (wrt_action) {
                if (al[axis] == 0) continue;
                double fac = al[axis];
                Int3 nal = al;
                nal[axis] -= 1;
                out.add_term(bk, k, nal, fac * t.c, fac * t.s);
            } else {
                if (k[axis] == 0) continue;
                double fac = k[axis];
                out.add_term(bk, k, al, fac * t.s, -fac * t.c);
            }
        }
    }
    return out;
}

namespace {

struct SortableTerm {
    int bk;
    Int3 k, al;
    double c, s;
};

bool json_term_order(const SortableTerm& a, const SortableTerm& b) {
    if (a.bk != b.bk) return a.bk < b.bk;
    int ta = std::abs(a.k[0]) + std::abs(a.k[1]) + std::abs(a.k[2]);
    int tb = std::abs(b.k[0]) + std::abs(b.k[1]) + std::abs(b.k[2]);
    if (ta != tb) return ta < tb;
    if (a.k != b.k) return a.k < b.k;
    return a.al < b.al;
}

}  // namespace

void write_series_json(std::FILE* out, const PoissonSeries& s, int kprime) {
    std::vector<SortableTerm> terms;
    terms.reserve(s.term_count());
    for (int bk : s.orders()) {
        for (const Term& t : s.block(bk)) {
            SortableTerm st;
            st.bk = bk;
            unpack_key(t.key, st.k, st.al);
            st.c = t.c;
            st.s = t.s;
            terms.push_back(st);
        }
    }
    std::sort(terms.begin(), terms.end(), json_term_order);

    std::fprintf(out, "{\"kprime\":%d,\"terms\":[", kprime);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const SortableTerm& t = terms[i];
        std::fprintf(out,
                     "%s\n{\"k\":[%d,%d,%d],\"alpha\":[%d,%d,%d],\"cos\":%.17g,"
                     "\"sin\":%.17g,\"bk\":%d}",
                     i ? "," : "", t.k[0], t.k[1], t.k[2], t.al[0], t.al[1], t.al[2], t.c,
                     t.s, t.bk);
    }
    std::fprintf(out, "\n]}\n");
}

PoissonSeries read_series_json(const std::string& path, TruncationPolicy pol,
                               int* kprime_out) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open series file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("kprime") || !j.contains("terms"))
        throw ConfigError("series file " + path + " must contain kprime and terms");
    if (kprime_out) *kprime_out = j["kprime"].get<int>();
    PoissonSeries s(pol);
    for (const auto& jt : j["terms"]) {
        Int3 k{}, al{};
        for (int i = 0; i < 3; ++i) {
            k[i] = jt.at("k").at(i).get<int>();
            al[i] = jt.at("alpha").at(i).get<int>();
        }
        s.add_term(jt.at("bk").get<int>(), k, al, jt.at("cos").get<double>(),
                   jt.at("sin").get<double>());
    }
    return s;
}

namespace {
constexpr uint32_t kBinaryMagic = 0x4e465342;  // "NFSB"
constexpr uint32_t kBinaryVersion = 1;
}  // namespace

void write_series_binary(std::FILE* out, const PoissonSeries& s) {
    auto put = [out](const void* p, std::size_t n) {
        if (std::fwrite(p, 1, n, out) != n) throw ResourceError("short write on series dump");
    };
    uint32_t magic = kBinaryMagic, version = kBinaryVersion;
    int32_t max_bk = s.policy().max_bk_order;
    double zt = s.policy().zero_threshold;
    std::vector<int> ords = s.orders();
    uint32_t nblocks = static_cast<uint32_t>(ords.size());
    put(&magic, 4);
    put(&version, 4);
    put(&max_bk, 4);
    put(&zt, 8);
    put(&nblocks, 4);
    for (int bk : ords) {
        const Block& blk = s.block(bk);
        int32_t b = bk;
        uint64_t n = blk.size();
        put(&b, 4);
        put(&n, 8);
        for (const Term& t : blk) {
            put(&t.key, 8);
            put(&t.c, 8);
            put(&t.s, 8);
        }
    }
}

PoissonSeries read_series_binary(std::FILE* in) {
    auto get = [in](void* p, std::size_t n) {
        if (std::fread(p, 1, n, in) != n) throw ConfigError("truncated series dump");
    };
    uint32_t magic = 0, version = 0, nblocks = 0;
    int32_t max_bk = 0;
    double zt = 0;
    get(&magic, 4);
    if (magic != kBinaryMagic) throw ConfigError("not a series dump (bad magic)");
    get(&version, 4);
    if (version != kBinaryVersion) throw ConfigError("unsupported series dump version");
    get(&max_bk, 4);
    get(&zt, 8);
    get(&nblocks, 4);
    TruncationPolicy pol;
    pol.max_bk_order = max_bk;
    pol.zero_threshold = zt;
    PoissonSeries s(pol);
    for (uint32_t b = 0; b < nblocks; ++b) {
        int32_t bk = 0;
        uint64_t n = 0;
        get(&bk, 4);
        get(&n, 8);
        if (bk < 0 || bk > max_bk) throw ConfigError("series dump block order out of range");
        s.ensure_order(bk);
        Block& blk = s.raw_blocks()[bk];
        blk.resize(n);
        for (uint64_t i = 0; i < n; ++i) {
            get(&blk[i].key, 8);
            get(&blk[i].c, 8);
            get(&blk[i].s, 8);
        }
    }
    return s;
}

}  // namespace nflab
