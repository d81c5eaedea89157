// Resonant Birkhoff normalization of the graded Hamiltonian around a doubly
// resonant torus. Each step r splits the lowest remaining block into its
// resonant part (wavevectors annihilated by m) and a rest, solves the
// homological equation against omega* . J for a generator chi_r, and pushes
// the full Hamiltonian through exp(L_chi_r). States are value types and can
// be checkpointed to disk and resumed.
#pragma once

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include "nflab/frame.hpp"
#include "nflab/model.hpp"
#include "nflab/series.hpp"

namespace nflab {

// Per-step progress record. term_bytes counts live series payload (normal
// form + remainder + all generators) after the step completed; peak_rss_kb
// is the process high-water mark, so it is monotone across steps.
struct StepMetrics {
    int order = 0;
    std::size_t hamiltonian_terms = 0;
    std::size_t generator_terms = 0;
    double min_divisor = 0.0;  // smallest |k . omega*| hit by this step's solve
    std::size_t term_bytes = 0;
    std::size_t peak_rss_kb = 0;
};

struct NormalizationState {
    ResonantFrame frame;
    double epsilon = 0.0;
    int kprime = 1;
    int max_bk = 0;
    int order = 0;                  // steps completed; blocks <= order are normalized
    bool budget_exhausted = false;  // true when a run stopped early on the term budget
    double min_divisor = 0.0;       // smallest |k . omega*| over all completed steps

    PoissonSeries normal_form;               // blocks 0..order, every term has k . m == 0
    PoissonSeries remainder;                 // blocks order+1..max_bk
    std::vector<PoissonSeries> generators;   // chi_1..chi_order, chi_r purely block r

    // remainder_profiles[r][s][q] is the weighted-norm mass (coefficient of
    // rho^q) of remainder block s after step r, so block norms can be
    // re-evaluated at any radius without keeping the intermediate series.
    std::vector<std::vector<std::vector<double>>> remainder_profiles;
    std::vector<StepMetrics> steps;

    // Z_0 + ... + Z_order + sum of remainder blocks.
    PoissonSeries combined() const;
    std::size_t term_count() const;  // normal form + remainder + generators
};

// Remainder norms at a fixed radius. Row r lists the cumulative sums
// ||R^(r)||_{<=p} for p = r+1..max_bk; converged is set when the last three
// sums differ by less than 1% relative (false when fewer than three exist).
struct RemainderTable {
    double rho = 0.0;
    int kprime = 1;
    int max_bk = 0;
    struct Row {
        int r = 0;
        std::vector<double> partial_sums;
        bool converged = false;
    };
    std::vector<Row> rows;  // one per completed order, r ascending from 0
};

enum class OptimalOrderMethod { direct_minimum, quadratic_extrapolation, not_reached };

struct OptimalOrder {
    double r_opt = 0.0;   // integer-valued for a direct minimum, real when extrapolated
    double r_norm = 0.0;  // ||R|| at r_opt (fitted value when extrapolated)
    OptimalOrderMethod method = OptimalOrderMethod::not_reached;
    int k_opt = 0;        // Fourier truncation candidate, round(kprime * r_opt)
};

// Builds the order-0 state: the rescaled expansion of the model around the
// frame's torus with block 0 as the initial normal form and blocks 1..max_bk
// as the remainder.
NormalizationState init_normalization(const HamiltonianModel& model, const ResonantFrame& frame,
                                      int kprime, int max_bk);

// Advances the state by one order. Splits remainder block r = order+1 into
// resonant terms (kept as Z_r) and a rest, solves omega* . dchi/dphi = rest
// for the generator, applies exp(L_chi_r) to the whole Hamiltonian, and
// refreshes the stored block profiles. A non-resonant term whose divisor
// k . omega* vanishes exactly makes the equation unsolvable and throws
// NumericError; the same error is raised when the transformed block r keeps
// a non-resonant residue beyond rounding noise.
void normalize_step(NormalizationState& state);

// Runs init + target_order steps. Requires target_order <= max_bk - 1. After
// each step the live term count is checked against term_budget (0 picks the
// default of 20 million terms); when exceeded the run stops early and returns
// the last completed state with budget_exhausted set.
NormalizationState run_normalization(const HamiltonianModel& model, const ResonantFrame& frame,
                                     int kprime, int max_bk, int target_order,
                                     std::size_t term_budget = 0);

// Evaluates the stored remainder profiles at radius rho. Requires rho > 0.
RemainderTable remainder_table(const NormalizationState& state, double rho);

// Locates the order minimizing the full remainder norm from the table rows
// with r >= 1 (at least three required). An argmin before the last row is
// reported directly; a still-decreasing tail is extrapolated through the
// vertex of the parabola fitted to the last three (r, log ||R||) points when
// that fit is convex, and reported as not reached otherwise.
OptimalOrder find_optimal_order(const RemainderTable& table);

// Expresses the transformed action J_1 after r steps in the original
// variables by applying exp(-L_chi_r) ... exp(-L_chi_1) to J_1, then
// aggregates the weighted-norm mass at radius rho_b per total wavevector
// order |k|_1. Returns (|k|_1, mass) pairs, ascending, nonzero entries only.
std::vector<std::pair<int, double>> transformation_decay_profile(const NormalizationState& state,
                                                                 int r, double rho_b);

// Binary checkpoint of a full state, including profiles and step metrics.
// The frame is stored as (I*, k1, k2) and re-derived on read.
void write_state_binary(std::FILE* out, const NormalizationState& state);
NormalizationState read_state_binary(const std::string& path);

// JSON layout: {"rho": f, "kprime": n, "max_bk": n,
// "rows": [{"r": n, "partial_sums": [f], "converged": b}],
// "summary": {"r_opt": f, "method": "direct|extrapolated|not_reached",
// "R_opt": f, "K_opt": n}}.
void write_remainder_table_json(std::FILE* out, const RemainderTable& table,
                                const OptimalOrder& opt);

}  // namespace nflab
