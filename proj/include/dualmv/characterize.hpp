#pragma once

#include "dualmv/functionals.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dualmv {

struct RecoveryOptions {
    /// Maximum number of functional evaluations spent on indicator tuples.
    std::size_t budget = 1'000'000;
    /// Enumerate only constant multi-indices (k, ..., k).
    bool diagonal_only = false;
    std::size_t validation_trials = 100;
    std::uint64_t seed = 7;
};

/// Kernel read off from F(st A_{k_1}, ..., st A_{k_n}) and checked on random tuples.
struct RecoveredMeasure {
    KernelFunctional kernel;
    /// max |K(L) - F(L)| / max(1, |F(L)|) over the validation tuples.
    double residual = 0.0;
    std::size_t validation_trials = 0;
    std::size_t evaluations = 0;
    bool diagonal_only = false;
    /// A negative weight witnesses that F is not positive.
    bool negative_weights = false;
};

/// Throws BudgetExceeded when cells^n (or cells, for diagonal_only) exceeds the budget.
RecoveredMeasure recover_measure(const BlackBoxFunctional& f, const std::shared_ptr<const SphereGrid>& grid,
                                 const RecoveryOptions& opt = {});

struct DiagonalityResult {
    Verdict verdict = Verdict::Pass;
    double off_diagonal_mass = 0.0;
    double total_mass = 0.0;
    double tolerance = 0.0;
    /// Largest off-diagonal weight, if any.
    std::optional<MultiIndex> worst;
    /// Weights of the constant multi-indices, set on pass.
    std::optional<std::vector<double>> projected;
};

/// Pass iff the off-diagonal mass is at most tol times the total mass.
DiagonalityResult diagonality_test(const KernelFunctional& k, double tol = 1e-9);
DiagonalityResult diagonality_test(const RecoveredMeasure& m, double tol = 1e-9);

struct UniformityResult {
    Verdict verdict = Verdict::Pass;
    /// w_k / sigma(cell k)
    std::vector<double> density;
    double lambda = 0.0;  // mean density
    double spread = 0.0;  // max - min
    double tolerance = 0.0;
    std::size_t worst_cell = 0;  // cell whose density is farthest from lambda
    std::string note;
};

/// Pass iff max - min density <= tol * mean. Inconclusive on grids without
/// nontrivial symmetries.
UniformityResult uniformity_test(const std::shared_ptr<const SphereGrid>& grid, std::span<const double> weights,
                                 double tol = 1e-9);
UniformityResult uniformity_test(const DiagonalFunctional& d, double tol = 1e-9);

struct RatioSample {
    std::size_t trial;
    double f;
    double dmv;
    double ratio;
};

struct ConstantEstimate {
    double c = 0.0;       // mean of F / V~
    double spread = 0.0;  // (max - min) / |mean|, 0 when all ratios agree
    std::vector<RatioSample> series;
};

/// Ratios F / V~ over random tuples with V~ > 0. Throws DegenerateSample when every
/// sampled V~ vanishes and InvalidParameter for fewer than 2 trials.
ConstantEstimate estimate_constant(const BlackBoxFunctional& f, const CheckOptions& opt = {});
/// Same estimate over the given tuples; `trial` in the series is the tuple position.
ConstantEstimate estimate_constant(const BlackBoxFunctional& f, std::span<const Tuple> tuples);

enum class Conclusion { GeneralKernel, DiagonalMeasure, CTimesDmv, HypothesisViolated };
std::string to_string(Conclusion c);

struct CharacterizeOptions {
    CheckOptions check;
    /// Test "increasing" instead of "positive".
    bool real_valued = false;
    bool test_vanishing = true;
    bool test_rotation = true;
    RecoveryOptions recovery;
    double diagonality_tol = 1e-9;
    double uniformity_tol = 1e-9;
    double spread_tol = 1e-10;
};

struct CharacterizationReport {
    std::string functional;
    std::string grid;
    std::vector<PropertyReport> checks;
    std::optional<RecoveredMeasure> recovered;
    std::optional<DiagonalityResult> diagonality;
    std::optional<UniformityResult> uniformity;
    std::optional<ConstantEstimate> constant;
    Conclusion conclusion = Conclusion::GeneralKernel;
    /// Failed hypothesis when conclusion is HypothesisViolated.
    std::string culprit;
    std::string note;

    [[nodiscard]] const PropertyReport* check(const std::string& property) const;
};

/// additive -> positive (or increasing) -> vanishing -> recovery -> rotation ->
/// uniformity and constant. A failed additive, positive, increasing or vanishing
/// check ends the run with HypothesisViolated; a failed or inconclusive rotation
/// check ends it with DiagonalMeasure.
CharacterizationReport characterize(const BlackBoxFunctional& f, const std::shared_ptr<const SphereGrid>& grid,
                                    const CharacterizeOptions& opt = {});

struct ValuationOptions {
    std::size_t pairs = 100;
    std::size_t polycones = 50;
    std::size_t cones = 100;
    std::uint64_t seed = 7;
    double valuation_tol = 1e-12;
    double density_tol = 1e-10;
    double volume_tol = 1e-10;
};

struct ValuationCheck {
    std::string name;
    Verdict verdict = Verdict::Pass;
    double max_residual = 0.0;
    double tolerance = 0.0;
    std::size_t trials = 0;
};

/// mu(A) = F(st A, ..., st A) on cell sets of the grid.
struct ValuationReport {
    std::string functional;
    std::string grid;
    ValuationCheck valuation;    // mu(A u B) + mu(A n B) = mu(A) + mu(B)
    ValuationCheck empty;        // mu(empty) = 0
    ValuationCheck rotation;     // mu(phi A) = mu(A)
    ValuationCheck proportional; // mu(cell k) / sigma(cell k) constant
    ValuationCheck volume;       // F(L, ..., L) = c H^n(L)
    std::vector<double> density;
    double lambda = 0.0;
    double c = 0.0;
    double c_spread = 0.0;
    /// |c - n lambda|
    double consistency = 0.0;
    /// Cone tuples: F(C) against c (alpha_1 ... alpha_n / n) sigma(A_1 n ... n A_n) and
    /// against c alpha_1 ... alpha_n / min(alpha)^n H^n(C_1 n ... n C_n).
    double cone_residual_direct = 0.0;
    double cone_residual_ratio = 0.0;
    std::size_t cone_trials = 0;

    [[nodiscard]] bool pass() const;
};

ValuationReport valuation_pipeline(const BlackBoxFunctional& f, const std::shared_ptr<const SphereGrid>& grid,
                                   const ValuationOptions& opt = {});

}  // namespace dualmv
