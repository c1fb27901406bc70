#pragma once

#include "dualmv/starset.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dualmv {

enum class VolumeMethod { Exact, Quadrature, MonteCarlo };

std::string to_string(VolumeMethod m);

/// Volume-like quantity with its provenance. `error` is 0 for exact results and
/// the sample standard error for Monte Carlo estimates.
struct Volume {
    double value = 0.0;
    VolumeMethod method = VolumeMethod::Exact;
    double error = 0.0;
};

struct MonteCarloOptions {
    std::size_t samples = 1'000'000;
    std::uint64_t seed = 0;
};

/// Integrand g(rho_1(u), ..., rho_k(u)) of a pointwise combination of radial functions.
using PointwiseIntegrand = std::function<double(std::span<const double>)>;

/// Exact value of the spherical integral of g(rho_1, ..., rho_k) for piecewise-constant
/// bodies, summed over their common refinement (or shared grid). Throws
/// InvalidParameter for samplers and RequiresRasterization / GridMismatch when no
/// exact common partition exists.
double integrate_piecewise(std::span<const StarSet> bodies, const PointwiseIntegrand& g);

/// Monte Carlo estimate of the same integral from `samples` uniform directions.
Volume monte_carlo_integral(std::span<const StarSet> bodies, const PointwiseIntegrand& g, std::size_t samples,
                            std::uint64_t seed);

/// Integral of rho_L over the sphere (exact path).
double radial_integral(const StarSet& l);

/// Dual mixed volume (1/n) * integral of rho_{L_1} ... rho_{L_n} over S^{n-1}.
/// Exact for polycones and grid data; Monte Carlo when `mc` is given, which is
/// required as soon as a sampler is involved.
Volume dual_mixed_volume(std::span<const StarSet> bodies, const std::optional<MonteCarloOptions>& mc = std::nullopt);

/// H^n(L) = dual_mixed_volume(L, ..., L).
Volume volume(const StarSet& l, const std::optional<MonteCarloOptions>& mc = std::nullopt);

/// Monte Carlo estimator of the dual mixed volume; deterministic for a given seed.
Volume monte_carlo_dmv(std::span<const StarSet> bodies, std::size_t samples, std::uint64_t seed);

/// Dual mixed volumes V~(L_{i_1}, ..., L_{i_n}) for every ordered multi-index in
/// {0, ..., m-1}^n, stored row-major with i_1 most significant.
class LutwakExpansion {
public:
    LutwakExpansion(int n, std::size_t m, std::vector<double> coefficients);

    [[nodiscard]] int degree() const { return n_; }
    [[nodiscard]] std::size_t bodies() const { return m_; }
    [[nodiscard]] std::span<const double> coefficients() const { return coefficients_; }
    [[nodiscard]] double coefficient(std::span<const std::size_t> index) const;
    /// Multi-index of the flat position `flat`.
    [[nodiscard]] std::vector<std::size_t> index_of(std::size_t flat) const;

    /// sum over ordered multi-indices of coefficient * t_{i_1} ... t_{i_n}.
    [[nodiscard]] double evaluate(std::span<const double> t) const;

    struct Monomial {
        std::vector<std::size_t> index;  // nondecreasing
        double coefficient;              // multinomial multiplicity times V~
    };
    /// Collapsed form over nondecreasing multi-indices.
    [[nodiscard]] std::vector<Monomial> symmetric_form() const;

private:
    int n_;
    std::size_t m_;
    std::vector<double> coefficients_;
};

LutwakExpansion lutwak_expand(std::span<const StarSet> bodies);

struct LutwakCheck {
    double lhs = 0.0;  // H^n(t_1 L_1 +~ ... +~ t_m L_m)
    double rhs = 0.0;  // polynomial(t)
    double residual = 0.0;
    double tolerance = 0.0;  // 1e-10 * max(1, lhs)
    bool pass = false;
};

/// Compares the volume of the scaled radial sum with the polynomial in t.
LutwakCheck verify_lutwak(std::span<const StarSet> bodies, std::span<const double> t);
LutwakCheck verify_lutwak(std::span<const StarSet> bodies, const LutwakExpansion& expansion,
                          std::span<const double> t);

/// alpha * st(A) as a plain value.
struct Cone {
    double radius;
    SphericalRegion base;
};

struct ConeProductCheck {
    double dmv = 0.0;         // V~(C_1, ..., C_n)
    double direct = 0.0;      // (alpha_1 ... alpha_n / n) * sigma(A_1 cap ... cap A_n)
    double ratio_form = 0.0;  // alpha_1 ... alpha_n / min(alpha)^n * H^n(C_1 cap ... cap C_n)
    double residual_direct = 0.0;
    double residual_ratio = 0.0;
};

ConeProductCheck cone_product_identity(int dim, std::span<const Cone> cones);
/// Each polycone must be a single cone; throws DomainError otherwise.
ConeProductCheck cone_product_identity(std::span<const Polycone> cones);

}  // namespace dualmv
