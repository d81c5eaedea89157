#include "nflab/normalizer.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "nflab/model.hpp"

namespace nflab {

namespace {

constexpr std::size_t kDefaultTermBudget = 20'000'000;

std::size_t peak_rss_kb() {
    struct rusage ru;
    if (getrusage(RUSAGE_SELF, &ru) != 0) return 0;
    return static_cast<std::size_t>(ru.ru_maxrss);
}

bool in_module(uint64_t key, const Int3& m) {
    Int3 k, al;
    unpack_key(key, k, al);
    return int64_t(k[0]) * m[0] + int64_t(k[1]) * m[1] + int64_t(k[2]) * m[2] == 0;
}

// Exact divisor k . omega* as a rational; the frequency components are the
// frame's rational I* entries, so zero detection is exact.
Rational exact_divisor(const Int3& k, const ResonantFrame& frame) {
    Rational d(0);
    for (int i = 0; i < 3; ++i) d = d + Rational(k[i]) * frame.omega_star[i];
    return d;
}

std::size_t series_terms(const PoissonSeries& s) {
    std::size_t n = 0;
    for (const Block& blk : s.raw_blocks()) n += blk.size();
    return n;
}

// Weighted-norm mass of one block, split by action degree q, so the norm at
// any radius rho is sum_q profile[q] * rho^q.
std::vector<double> block_profile(const PoissonSeries& s, int bk) {
    std::vector<double> prof;
    Int3 k, al;
    for (const Term& t : s.block(bk)) {
        unpack_key(t.key, k, al);
        int q = al[0] + al[1] + al[2];
        if (static_cast<int>(prof.size()) <= q) prof.resize(q + 1, 0.0);
        prof[q] += std::hypot(t.c, t.s) * action_weight(al, 1.0);
    }
    return prof;
}

void append_profile_row(NormalizationState& state) {
    std::vector<std::vector<double>> row(state.max_bk + 1);
    for (int s = state.order + 1; s <= state.max_bk; ++s)
        row[s] = block_profile(state.remainder, s);
    state.remainder_profiles.push_back(std::move(row));
}

void append_step_metrics(NormalizationState& state, double step_min_divisor) {
    StepMetrics m;
    m.order = state.order;
    m.hamiltonian_terms = series_terms(state.normal_form) + series_terms(state.remainder);
    m.generator_terms = state.generators.empty() ? 0 : series_terms(state.generators.back());
    m.min_divisor = step_min_divisor;
    m.term_bytes = state.term_count() * sizeof(Term);
    m.peak_rss_kb = peak_rss_kb();
    state.steps.push_back(m);
}

double profile_norm(const std::vector<double>& prof, double rho) {
    double sum = 0.0, p = 1.0;
    for (double c : prof) {
        sum += c * p;
        p *= rho;
    }
    return sum;
}

}  // namespace

PoissonSeries NormalizationState::combined() const {
    PoissonSeries out = normal_form;
    out += remainder;
    return out;
}

std::size_t NormalizationState::term_count() const {
    std::size_t n = series_terms(normal_form) + series_terms(remainder);
    for (const PoissonSeries& g : generators) n += series_terms(g);
    return n;
}

NormalizationState init_normalization(const HamiltonianModel& model, const ResonantFrame& frame,
                                      int kprime, int max_bk) {
    NormalizationState state;
    state.frame = frame;
    state.epsilon = model.epsilon;
    state.kprime = kprime;
    state.max_bk = max_bk;
    state.order = 0;
    state.min_divisor = std::numeric_limits<double>::infinity();

    PoissonSeries h = build_rescaled_hamiltonian(model, frame, kprime, max_bk);
    state.normal_form = PoissonSeries(h.policy());
    state.remainder = PoissonSeries(h.policy());
    state.normal_form.ensure_order(max_bk);
    state.remainder.ensure_order(max_bk);
    h.ensure_order(max_bk);
    auto& src = h.raw_blocks();
    state.normal_form.raw_blocks()[0] = std::move(src[0]);
    for (int b = 1; b <= max_bk; ++b) state.remainder.raw_blocks()[b] = std::move(src[b]);

    append_profile_row(state);
    return state;
}

void normalize_step(NormalizationState& state) {
    const int r = state.order + 1;
    if (r > state.max_bk - 1)
        throw ConfigError("normalization order must stay below the truncation order");

    PoissonSeries h = state.combined();
    h.ensure_order(state.max_bk);

    // Solve omega* . dchi/dphi = non-resonant part of block r. A source term
    // a cos(k.phi) + b sin(k.phi) with divisor d = k . omega* needs the
    // generator term (-b cos(k.phi) + a sin(k.phi)) / d.
    PoissonSeries chi(h.policy());
    double step_min = std::numeric_limits<double>::infinity();
    double source_max = 0.0;
    Int3 k, al;
    for (const Term& t : h.block(r)) {
        if (in_module(t.key, state.frame.m)) continue;
        unpack_key(t.key, k, al);
        Rational d = exact_divisor(k, state.frame);
        if (d.num == 0)
            throw NumericError("non-resonant term with an exactly vanishing divisor at block " +
                               std::to_string(r));
        double dv = d.value();
        step_min = std::min(step_min, std::abs(dv));
        source_max = std::max(source_max, std::hypot(t.c, t.s));
        chi.add_term(r, k, al, -t.s / dv, t.c / dv);
    }

    PoissonSeries hn = lie_transform(chi, h);
    hn.ensure_order(state.max_bk);
    auto& blocks = hn.raw_blocks();

    // Block r must come out resonant; the solved slots only keep rounding
    // residue because the divisor and the bracket evaluate k . omega* with
    // different summation order. Anything larger signals a broken solve.
    const double resid_tol = 1e-9 * std::max(1.0, source_max);
    Block kept;
    kept.reserve(blocks[r].size());
    for (const Term& t : blocks[r]) {
        if (in_module(t.key, state.frame.m)) {
            kept.push_back(t);
        } else if (std::hypot(t.c, t.s) > resid_tol) {
            throw NumericError("non-resonant residue survived the homological step at block " +
                               std::to_string(r));
        }
    }
    blocks[r] = std::move(kept);

    state.normal_form.ensure_order(state.max_bk);
    for (int b = 0; b <= r; ++b) state.normal_form.raw_blocks()[b] = std::move(blocks[b]);
    state.remainder = PoissonSeries(hn.policy());
    state.remainder.ensure_order(state.max_bk);
    for (int b = r + 1; b <= state.max_bk; ++b)
        state.remainder.raw_blocks()[b] = std::move(blocks[b]);

    state.generators.push_back(std::move(chi));
    state.order = r;
    state.min_divisor = std::min(state.min_divisor, step_min);
    append_profile_row(state);
    append_step_metrics(state, step_min);
}

NormalizationState run_normalization(const HamiltonianModel& model, const ResonantFrame& frame,
                                     int kprime, int max_bk, int target_order,
                                     std::size_t term_budget) {
    if (target_order < 0 || target_order > max_bk - 1)
        throw ConfigError("target order must lie in [0, max_bk - 1]");
    if (term_budget == 0) term_budget = kDefaultTermBudget;

    NormalizationState state = init_normalization(model, frame, kprime, max_bk);
    for (int r = 1; r <= target_order; ++r) {
        normalize_step(state);
        if (state.term_count() > term_budget && r < target_order) {
            state.budget_exhausted = true;
            break;
        }
    }
    return state;
}

RemainderTable remainder_table(const NormalizationState& state, double rho) {
    if (!(rho > 0)) throw ConfigError("remainder table radius must be positive");
    RemainderTable table;
    table.rho = rho;
    table.kprime = state.kprime;
    table.max_bk = state.max_bk;
    for (int r = 0; r <= state.order; ++r) {
        RemainderTable::Row row;
        row.r = r;
        const auto& prof = state.remainder_profiles.at(r);
        double sum = 0.0;
        for (int s = r + 1; s <= state.max_bk; ++s) {
            sum += profile_norm(prof[s], rho);
            row.partial_sums.push_back(sum);
        }
        const std::size_t n = row.partial_sums.size();
        if (n >= 3) {
            double a = row.partial_sums[n - 3], c = row.partial_sums[n - 1];
            row.converged = std::abs(c - a) <= 0.01 * std::abs(c);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

OptimalOrder find_optimal_order(const RemainderTable& table) {
    std::vector<double> xs, ns;
    for (const auto& row : table.rows) {
        if (row.r < 1 || row.partial_sums.empty()) continue;
        xs.push_back(row.r);
        ns.push_back(row.partial_sums.back());
    }
    if (xs.size() < 3)
        throw ConfigError("optimal-order search needs at least three completed orders");

    std::size_t best = 0;
    for (std::size_t i = 1; i < ns.size(); ++i)
        if (ns[i] < ns[best]) best = i;

    OptimalOrder opt;
    if (best + 1 < ns.size()) {
        opt.method = OptimalOrderMethod::direct_minimum;
        opt.r_opt = xs[best];
        opt.r_norm = ns[best];
        opt.k_opt = static_cast<int>(std::llround(table.kprime * opt.r_opt));
        return opt;
    }

    // Still decreasing at the last computed order: fit a parabola through the
    // last three (r, log norm) points and take its vertex when convex.
    const std::size_t n = ns.size();
    double x0 = xs[n - 3], x1 = xs[n - 2], x2 = xs[n - 1];
    if (ns[n - 3] > 0 && ns[n - 2] > 0 && ns[n - 1] > 0) {
        double y0 = std::log(ns[n - 3]), y1 = std::log(ns[n - 2]), y2 = std::log(ns[n - 1]);
        double f01 = (y1 - y0) / (x1 - x0);
        double f12 = (y2 - y1) / (x2 - x1);
        double f012 = (f12 - f01) / (x2 - x0);
        if (f012 > 0) {
            double xv = 0.5 * (x0 + x1) - f01 / (2.0 * f012);
            double yv = y0 + f01 * (xv - x0) + f012 * (xv - x0) * (xv - x1);
            opt.method = OptimalOrderMethod::quadratic_extrapolation;
            opt.r_opt = xv;
            opt.r_norm = std::exp(yv);
            opt.k_opt = static_cast<int>(std::llround(table.kprime * xv));
            return opt;
        }
    }

    opt.method = OptimalOrderMethod::not_reached;
    opt.r_opt = x2;
    opt.r_norm = ns.back();
    opt.k_opt = static_cast<int>(std::llround(table.kprime * x2));
    return opt;
}

std::vector<std::pair<int, double>> transformation_decay_profile(const NormalizationState& state,
                                                                 int r, double rho_b) {
    if (r < 0 || r > state.order)
        throw ConfigError("decay profile order exceeds the normalized order");
    if (!(rho_b > 0)) throw ConfigError("decay profile radius must be positive");

    PoissonSeries f(state.normal_form.policy());
    f.add_term(0, {0, 0, 0}, {1, 0, 0}, 1.0, 0.0);
    for (int s = 1; s <= r; ++s) f = lie_transform(scale(state.generators[s - 1], -1.0), f);

    std::vector<double> mass;
    Int3 k, al;
    for (const Block& blk : f.raw_blocks()) {
        for (const Term& t : blk) {
            unpack_key(t.key, k, al);
            int kt = std::abs(k[0]) + std::abs(k[1]) + std::abs(k[2]);
            if (static_cast<int>(mass.size()) <= kt) mass.resize(kt + 1, 0.0);
            mass[kt] += std::hypot(t.c, t.s) * action_weight(al, rho_b);
        }
    }
    std::vector<std::pair<int, double>> out;
    for (int kt = 0; kt < static_cast<int>(mass.size()); ++kt)
        if (mass[kt] != 0.0) out.emplace_back(kt, mass[kt]);
    return out;
}

namespace {
constexpr uint32_t kStateMagic = 0x5453464e;  // "NFST"
constexpr uint32_t kStateVersion = 1;
}  // namespace

void write_state_binary(std::FILE* out, const NormalizationState& state) {
    auto put = [out](const void* p, std::size_t n) {
        if (std::fwrite(p, 1, n, out) != n) throw ResourceError("short write on checkpoint");
    };
    auto put_u32 = [&](uint32_t v) { put(&v, 4); };
    auto put_i32 = [&](int32_t v) { put(&v, 4); };
    auto put_i64 = [&](int64_t v) { put(&v, 8); };
    auto put_u64 = [&](uint64_t v) { put(&v, 8); };
    auto put_f64 = [&](double v) { put(&v, 8); };

    put_u32(kStateMagic);
    put_u32(kStateVersion);
    for (int i = 0; i < 3; ++i) {
        put_i64(state.frame.i_star[i].num);
        put_i64(state.frame.i_star[i].den);
    }
    for (int i = 0; i < 3; ++i) put_i32(state.frame.k1[i]);
    for (int i = 0; i < 3; ++i) put_i32(state.frame.k2[i]);
    put_f64(state.epsilon);
    put_i32(state.kprime);
    put_i32(state.max_bk);
    put_i32(state.order);
    uint8_t budget = state.budget_exhausted ? 1 : 0;
    put(&budget, 1);
    put_f64(state.min_divisor);

    write_series_binary(out, state.normal_form);
    write_series_binary(out, state.remainder);
    put_u32(static_cast<uint32_t>(state.generators.size()));
    for (const PoissonSeries& g : state.generators) write_series_binary(out, g);

    put_u32(static_cast<uint32_t>(state.remainder_profiles.size()));
    for (const auto& row : state.remainder_profiles) {
        put_u32(static_cast<uint32_t>(row.size()));
        for (const auto& prof : row) {
            put_u32(static_cast<uint32_t>(prof.size()));
            for (double c : prof) put_f64(c);
        }
    }
    put_u32(static_cast<uint32_t>(state.steps.size()));
    for (const StepMetrics& m : state.steps) {
        put_i32(m.order);
        put_u64(m.hamiltonian_terms);
        put_u64(m.generator_terms);
        put_f64(m.min_divisor);
        put_u64(m.term_bytes);
        put_u64(m.peak_rss_kb);
    }
}

NormalizationState read_state_binary(const std::string& path) {
    std::FILE* in = std::fopen(path.c_str(), "rb");
    if (!in) throw ResourceError("cannot open checkpoint " + path);
    struct Closer {
        std::FILE* f;
        ~Closer() { std::fclose(f); }
    } closer{in};

    auto get = [in, &path](void* p, std::size_t n) {
        if (std::fread(p, 1, n, in) != n) throw ConfigError("truncated checkpoint " + path);
    };
    auto get_u32 = [&] { uint32_t v; get(&v, 4); return v; };
    auto get_i32 = [&] { int32_t v; get(&v, 4); return v; };
    auto get_i64 = [&] { int64_t v; get(&v, 8); return v; };
    auto get_u64 = [&] { uint64_t v; get(&v, 8); return v; };
    auto get_f64 = [&] { double v; get(&v, 8); return v; };

    if (get_u32() != kStateMagic) throw ConfigError("not a normalization checkpoint: " + path);
    if (get_u32() != kStateVersion)
        throw ConfigError("unsupported checkpoint version in " + path);

    std::array<Rational, 3> istar;
    for (int i = 0; i < 3; ++i) {
        int64_t num = get_i64();
        int64_t den = get_i64();
        istar[i] = Rational(num, den);
    }
    Int3 k1, k2;
    for (int i = 0; i < 3; ++i) k1[i] = get_i32();
    for (int i = 0; i < 3; ++i) k2[i] = get_i32();

    NormalizationState state;
    state.frame = frame_from_wavevectors(istar, k1, k2);
    state.epsilon = get_f64();
    state.kprime = get_i32();
    state.max_bk = get_i32();
    state.order = get_i32();
    uint8_t budget = 0;
    get(&budget, 1);
    state.budget_exhausted = budget != 0;
    state.min_divisor = get_f64();

    state.normal_form = read_series_binary(in);
    state.remainder = read_series_binary(in);
    uint32_t ngen = get_u32();
    for (uint32_t i = 0; i < ngen; ++i) state.generators.push_back(read_series_binary(in));

    uint32_t nrows = get_u32();
    state.remainder_profiles.resize(nrows);
    for (auto& row : state.remainder_profiles) {
        row.resize(get_u32());
        for (auto& prof : row) {
            prof.resize(get_u32());
            for (double& c : prof) c = get_f64();
        }
    }
    uint32_t nsteps = get_u32();
    state.steps.resize(nsteps);
    for (StepMetrics& m : state.steps) {
        m.order = get_i32();
        m.hamiltonian_terms = get_u64();
        m.generator_terms = get_u64();
        m.min_divisor = get_f64();
        m.term_bytes = get_u64();
        m.peak_rss_kb = get_u64();
    }

    if (state.generators.size() != static_cast<std::size_t>(state.order) ||
        state.remainder_profiles.size() != static_cast<std::size_t>(state.order) + 1)
        throw ConfigError("checkpoint " + path + " is internally inconsistent");
    return state;
}

void write_remainder_table_json(std::FILE* out, const RemainderTable& table,
                                const OptimalOrder& opt) {
    std::fprintf(out, "{\n  \"rho\": %.17g,\n  \"kprime\": %d,\n  \"max_bk\": %d,\n  \"rows\": [",
                 table.rho, table.kprime, table.max_bk);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        std::fprintf(out, "%s\n    {\"r\": %d, \"partial_sums\": [", i ? "," : "", row.r);
        for (std::size_t j = 0; j < row.partial_sums.size(); ++j)
            std::fprintf(out, "%s%.17g", j ? ", " : "", row.partial_sums[j]);
        std::fprintf(out, "], \"converged\": %s}", row.converged ? "true" : "false");
    }
    const char* method = "not_reached";
    if (opt.method == OptimalOrderMethod::direct_minimum) method = "direct";
    if (opt.method == OptimalOrderMethod::quadratic_extrapolation) method = "extrapolated";
    std::fprintf(out,
                 "\n  ],\n  \"summary\": {\"r_opt\": %.17g, \"method\": \"%s\", "
                 "\"R_opt\": %.17g, \"K_opt\": %d}\n}\n",
                 opt.r_opt, method, opt.r_norm, opt.k_opt);
    if (std::ferror(out)) throw ResourceError("short write on remainder table");
}

}  // namespace nflab
