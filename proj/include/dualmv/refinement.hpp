#pragma once

#include "dualmv/sphere.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace dualmv {

/// Common refinement of finitely many regions: a partition of S^{n-1} into atoms
/// with exact measures such that every input region is a union of atoms.
///
/// Three exact cases are supported, tried in this order:
///   - every region is FullSphere or cells of one grid: atoms are grid cells;
///   - n = 2 and every region is a finite union of arcs: atoms are the elementary
///     intervals between sorted endpoints;
///   - the caps involved form a laminar family (any two are disjoint or nested):
///     atoms are "cap minus its children" plus the complement of all caps.
/// Anything else raises RequiresRasterization.
class Refinement {
public:
    static Refinement build(int dim, std::span<const SphericalRegion> regions);

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] std::size_t atom_count() const { return measures_.size(); }
    [[nodiscard]] double atom_measure(std::size_t a) const { return measures_[a]; }
    [[nodiscard]] std::span<const double> atom_measures() const { return measures_; }
    /// Sorted atom indices whose union is input region `i`.
    [[nodiscard]] std::span<const std::size_t> atoms_of(std::size_t i) const { return members_[i]; }
    /// Region equal to the union of `atoms`. Throws RequiresRasterization when that
    /// union has no finite description in the region vocabulary.
    [[nodiscard]] SphericalRegion assemble(std::span<const std::size_t> atoms) const;

private:
    enum class Kind { Cells, Intervals, Laminar };

    int dim_ = 2;
    Kind kind_ = Kind::Laminar;
    std::vector<double> measures_;
    std::vector<std::vector<std::size_t>> members_;

    std::shared_ptr<const SphereGrid> grid_;  // Cells
    std::vector<double> breaks_;              // Intervals
    std::vector<Cap> caps_;                   // Laminar; atom i <-> caps_[i], last atom = complement
    std::vector<int> parent_;
};

/// H^{n-1}(A_1 cap ... cap A_k), computed on the common refinement.
double intersection_measure(int dim, std::span<const SphericalRegion> regions);

}  // namespace dualmv
