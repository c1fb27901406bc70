#pragma once

#include "dualmv/dmv.hpp"
#include "dualmv/starset.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace dualmv {

using Tuple = std::vector<StarSet>;
using Evaluator = std::function<double(std::span<const StarSet>)>;

/// Functional on n-tuples of star sets, accessed through evaluation only.
class BlackBoxFunctional {
public:
    /// `serial` marks evaluators that must not be called concurrently.
    BlackBoxFunctional(std::string name, int dim, Evaluator evaluator,
                       std::shared_ptr<const SphereGrid> grid = nullptr, bool serial = false);

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] const std::shared_ptr<const SphereGrid>& grid() const { return grid_; }
    [[nodiscard]] bool serial() const { return serial_; }

    /// Throws ArityError unless exactly dim() star sets are given.
    double operator()(std::span<const StarSet> tuple) const;

private:
    std::string name_;
    int dim_;
    Evaluator evaluator_;
    std::shared_ptr<const SphereGrid> grid_;
    bool serial_;
};

using MultiIndex = std::vector<std::size_t>;

/// Sparse weights on grid-cell multi-indices:
/// F(L_1, ..., L_n) = sum_k w[k] rho_1(cell k_1) ... rho_n(cell k_n).
class KernelFunctional {
public:
    /// Nonnegative weights; throws InvalidParameter on negative, non-finite or
    /// out-of-range entries.
    KernelFunctional(std::shared_ptr<const SphereGrid> grid, int arity, std::map<MultiIndex, double> weights);
    /// Signed weights, for exercising the checkers on non-positive functionals.
    static KernelFunctional signed_kernel(std::shared_ptr<const SphereGrid> grid, int arity,
                                          std::map<MultiIndex, double> weights);

    [[nodiscard]] const std::shared_ptr<const SphereGrid>& grid() const { return grid_; }
    [[nodiscard]] int arity() const { return arity_; }
    [[nodiscard]] const std::map<MultiIndex, double>& weights() const { return weights_; }
    [[nodiscard]] double weight(const MultiIndex& k) const;
    /// Sum of |w|; equals the total mass for nonnegative kernels.
    [[nodiscard]] double total_mass() const { return total_mass_; }
    [[nodiscard]] bool has_negative_weight() const;

    /// sum_k w[k] f_1[k_1] ... f_n[k_n] for arbitrary per-cell values.
    [[nodiscard]] double contract(std::span<const std::vector<double>> f) const;
    /// Throws GridMismatch when a body is not exactly representable on the grid.
    [[nodiscard]] double evaluate(std::span<const StarSet> tuple) const;
    [[nodiscard]] BlackBoxFunctional to_black_box(std::string name = "kernel") const;

private:
    KernelFunctional(std::shared_ptr<const SphereGrid> grid, int arity, std::map<MultiIndex, double> weights,
                     bool allow_negative);

    std::shared_ptr<const SphereGrid> grid_;
    int arity_;
    std::map<MultiIndex, double> weights_;
    double total_mass_ = 0.0;
};

/// F(L_1, ..., L_n) = sum_k w_k rho_1(cell k) ... rho_n(cell k).
class DiagonalFunctional {
public:
    DiagonalFunctional(std::shared_ptr<const SphereGrid> grid, int arity, std::vector<double> weights);
    /// w_k = c sigma(cell k) / n, which evaluates to c times the dual mixed volume.
    static DiagonalFunctional dmv_multiple(std::shared_ptr<const SphereGrid> grid, double c = 1.0);

    [[nodiscard]] const std::shared_ptr<const SphereGrid>& grid() const { return grid_; }
    [[nodiscard]] int arity() const { return arity_; }
    [[nodiscard]] std::span<const double> weights() const { return weights_; }
    [[nodiscard]] double total_mass() const;

    [[nodiscard]] double evaluate(std::span<const StarSet> tuple) const;
    [[nodiscard]] KernelFunctional as_kernel() const;
    [[nodiscard]] BlackBoxFunctional to_black_box(std::string name = "diagonal") const;

private:
    std::shared_ptr<const SphereGrid> grid_;
    int arity_;
    std::vector<double> weights_;
};

/// Direct contraction with signed per-cell functions.
double extend_signed(const KernelFunctional& k, std::span<const std::vector<double>> f);
/// Alternating sum over the 2^n choices of positive and negative parts.
double extend_signed_expansion(const KernelFunctional& k, std::span<const std::vector<double>> f);
/// Bound M with |F(f_1, ..., f_n)| <= M ||f_1||_inf ... ||f_n||_inf.
double operator_norm_bound(const KernelFunctional& k);

// ---------------------------------------------------------------- random inputs

/// Star hull of a single grid cell.
StarSet cell_cone(const std::shared_ptr<const SphereGrid>& grid, std::size_t cell, double level = 1.0);

/// Polycone on 1 to 4 uniformly chosen cells with levels log-uniform in [1/4, 4].
StarSet random_grid_polycone(const std::shared_ptr<const SphereGrid>& grid, std::mt19937_64& rng);
/// Same construction restricted to the cells in `pool` (which must be non-empty).
StarSet random_grid_polycone(const std::shared_ptr<const SphereGrid>& grid, std::span<const std::size_t> pool,
                             std::mt19937_64& rng);
/// Each cell of `pool` kept with probability 1/2, levels log-uniform in [1/4, 4].
StarSet random_dense_polycone(const std::shared_ptr<const SphereGrid>& grid, std::span<const std::size_t> pool,
                              std::mt19937_64& rng);
/// Random signed per-cell function with values in [-4, 4].
std::vector<double> random_signed_values(const SphereGrid& grid, std::mt19937_64& rng);

/// Trial tuples used by the checkers: trial 0 is a tuple of balls; later trials
/// cycle through independent sparse supports, sparse supports drawn from one
/// shared pool of cells, and dense supports.
Tuple random_trial_tuple(const std::shared_ptr<const SphereGrid>& grid, int n, std::size_t trial,
                         std::mt19937_64& rng);

// ---------------------------------------------------------------- checkers

enum class Verdict { Pass, Fail, Inconclusive };
std::string to_string(Verdict v);

/// Failing inputs together with the values F took on them.
struct Witness {
    std::string description;
    std::vector<Tuple> tuples;
    std::vector<double> values;
    int slot = -1;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct PropertyReport {
    std::string property;
    Verdict verdict = Verdict::Pass;
    std::size_t trials = 0;
    double max_residual = 0.0;
    double tolerance = 0.0;
    std::optional<Witness> witness;
    std::string note;
};

struct CheckOptions {
    std::size_t trials = 200;
    std::uint64_t seed = 7;
    double tol = 1e-9;
    /// Grid for the random inputs; defaults to the functional's grid.
    std::shared_ptr<const SphereGrid> grid;
};

PropertyReport check_additive(const BlackBoxFunctional& f, const CheckOptions& opt = {});
PropertyReport check_positive(const BlackBoxFunctional& f, const CheckOptions& opt = {});
PropertyReport check_increasing(const BlackBoxFunctional& f, const CheckOptions& opt = {});
PropertyReport check_homogeneous(const BlackBoxFunctional& f, const CheckOptions& opt = {});
PropertyReport check_vanishing(const BlackBoxFunctional& f, const CheckOptions& opt = {});
PropertyReport check_rotation_invariant(const BlackBoxFunctional& f, const CheckOptions& opt = {});

/// Scale factors used by check_homogeneous.
std::span<const double> homogeneity_factors();

// ---------------------------------------------------------------- gallery

struct GalleryParams {
    /// Ignored when a grid is given.
    int dim = 2;
    std::shared_ptr<const SphereGrid> grid;
    /// Fixed body of weighted-by-M; defaults to the tilted body rho(u) = 1 + u_1 / 2.
    std::optional<StarSet> m;
    /// Multiplier for "dmv" and "neg-dmv".
    double c = 1.0;
};

/// Named functionals: "intersection-volume", "product-of-integrals", "weighted-by-M",
/// "dmv" (c times the dual mixed volume) and "neg-dmv" (its negative).
/// Throws InvalidParameter for unknown names and for weighted-by-M with a centered ball.
BlackBoxFunctional gallery(const std::string& name, const GalleryParams& params);
std::vector<std::string> gallery_names();

/// Per-cell integrals of rho_M over `grid`: exact for piecewise-constant M,
/// tensor Gauss-Legendre quadrature for samplers.
std::vector<double> cell_integrals(const StarSet& m, const std::shared_ptr<const SphereGrid>& grid);

}  // namespace dualmv
