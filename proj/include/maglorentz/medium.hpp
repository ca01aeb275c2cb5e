//---------------------------------------------------------------------------//
//! \file maglorentz/medium.hpp
//! Poisson hard-disk obstacles generated lazily cell by cell.
//---------------------------------------------------------------------------//
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace mlg
{
//---------------------------------------------------------------------------//
/*!
 * Physical parameters of a run under the Boltzmann-Grad scaling.
 *
 * The effective intensity is mu_eff = eta * mu / eps. At B = 0 the Larmor
 * radius and period are +infinity.
 */
struct ScalingParams
{
    double eps = 0;
    double mu = 0;
    double eta = 1;
    double mu_eff = 0;
    double B = 0;
    double R = 0;
    double T_larmor = 0;

    // Regime diagnostics
    double area_fraction = 0;  //!< mu_eff * eps^2
    double inverse_free_path = 0;  //!< mu_eff * eps
    double growth_condition = 0;  //!< eps^{1/2} eta^5
    std::vector<std::string> warnings;
};

//! Throws std::invalid_argument for eps <= 0, mu <= 0, eta < 1 or B < 0.
ScalingParams scaling_from(double eps, double mu, double eta, double B);

//! Obstacle-free medium (mu_eff = 0) with the given disk radius and field.
ScalingParams empty_medium(double eps, double B);

//---------------------------------------------------------------------------//
struct CellIndex
{
    std::int64_t x = 0;
    std::int64_t y = 0;

    friend bool operator==(CellIndex const&, CellIndex const&) = default;
};

//! Stable obstacle identifier: owning cell plus position within the cell.
struct ObstacleId
{
    CellIndex cell;
    std::uint32_t index = 0;

    friend bool operator==(ObstacleId const&, ObstacleId const&) = default;
};

//---------------------------------------------------------------------------//
/*!
 * Infinite Poisson field of disk centers.
 *
 * The content of each square cell is a pure function of (seed, cell), so the
 * field can be queried anywhere without storage. Obstacles may overlap.
 */
class ObstacleField
{
  public:
    //! Cell size of zero selects max(2(R + eps), 10 eps).
    ObstacleField(ScalingParams params, std::uint64_t master_seed, double cell_size = 0);

    ScalingParams const& params() const { return params_; }
    std::uint64_t master_seed() const { return seed_; }
    double cell_size() const { return cell_size_; }

    CellIndex cell_of(PlanarPoint x) const;
    std::vector<PlanarPoint> obstacles_in_cell(CellIndex cell) const;
    PlanarPoint obstacle_center(ObstacleId id) const;

    //! True iff no obstacle center lies within eps of x.
    bool is_admissible_start(PlanarPoint x) const;

    //! Default cell size for the given parameters.
    static double default_cell_size(ScalingParams const& params);

  private:
    ScalingParams params_;
    std::uint64_t seed_;
    double cell_size_;
};

//---------------------------------------------------------------------------//
struct AnnulusEstimate
{
    double estimate = 0;
    double std_error = 0;
    double closed_form = 0;
    std::uint64_t n_samples = 0;
};

//! Closed-form void probability exp(-mu_eff 4 pi R eps) of the orbit annulus.
double circling_probability(ScalingParams const& params);

/*!
 * Fraction of independent fields with no center in the annulus
 * R - eps < |c - center| < R + eps.
 */
AnnulusEstimate empty_annulus_probability_mc(ScalingParams const& params,
                                             PlanarPoint center,
                                             std::uint64_t n_samples,
                                             std::uint64_t seed,
                                             unsigned workers = 1);

}  // namespace mlg
