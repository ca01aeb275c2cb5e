//---------------------------------------------------------------------------//
//! \file maglorentz/operators.hpp
//! Fourier multipliers of the collision operators on the velocity circle.
//---------------------------------------------------------------------------//
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "angular.hpp"

namespace mlg
{
//! sup over nonzero modes of |kappa_m|
inline constexpr double beta_bound = 0.57079632679489661923;  // (pi - 2) / 2

/*!
 * Rotation-invariant operator on L^2 of the circle, stored by its real,
 * even multipliers lambda_m for m = 0 .. max_mode.
 */
struct AngularOperator
{
    std::vector<double> multipliers;
    double mu = 0;
    double T = 0;
    int K_cut = 0;
    int quadrature_order = 0;

    int max_mode() const { return static_cast<int>(multipliers.size()) - 1; }
    //! lambda_m, with lambda_{-m} = lambda_m
    double at(int m) const;
};

//! Raised when a series inverse is not guaranteed to converge.
class SeriesDivergenceRisk : public std::runtime_error
{
  public:
    SeriesDivergenceRisk(std::string const& what, double factor)
        : std::runtime_error(what), contraction(factor)
    {
    }
    double contraction;
};

//! Raised when some nonzero mode has |lambda_m| < 1e-13.
class NearSingularOperator : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr int default_modes = 64;
inline constexpr int default_quadrature_order = 256;
inline constexpr double memory_tolerance = 1e-14;

//! kappa_n = 1/2 int cos(n theta(b)) db by composite Gauss-Legendre.
double deflection_cosine_mean(int n, int quadrature_order = default_quadrature_order);

//! Smallest K with exp(-2 mu K T) < tol; 0 when T is infinite.
int memory_cutoff(double mu, double T, double tol = memory_tolerance);

AngularOperator build_K(int M_modes, int quadrature_order = default_quadrature_order);
AngularOperator
build_L(double mu, int M_modes, int quadrature_order = default_quadrature_order);
//! K_cut = 0 selects memory_cutoff(mu, T).
AngularOperator build_M(double mu,
                        double T,
                        int M_modes,
                        int K_cut = 0,
                        int quadrature_order = default_quadrature_order);
AngularOperator build_LG(double mu,
                         double T,
                         int M_modes,
                         int K_cut = 0,
                         int quadrature_order = default_quadrature_order);

//! Multiplier of the k-th memory term alone, 2 mu q^k (kappa_{m(k+1)} - kappa_{mk}).
std::vector<double> memory_term_multipliers(double mu,
                                            double T,
                                            int k,
                                            int M_modes,
                                            int quadrature_order = default_quadrature_order);

//! Smallest |lambda_m| over m != 0.
double spectral_gap(AngularOperator const& op);

//! Sum of the two operators' multipliers (same mode count required).
AngularOperator operator+(AngularOperator const& a, AngularOperator const& b);

//---------------------------------------------------------------------------//
//! Modewise inverse on coefficients c_0 .. c_M (c_0 must vanish).
std::vector<cdouble>
invert_LG_direct(AngularOperator const& op, std::span<cdouble const> g_hat);

//! Direct inverse of a real grid function (grid size n needs n/2 <= max_mode).
std::vector<double>
invert_LG_direct_grid(AngularOperator const& op, std::span<double const> g);

//! Contraction bound beta + q/(1-q) (beta+1), q = exp(-2 mu T).
double neumann_contraction_factor(double mu, double T);

struct SeriesResult
{
    std::vector<double> h;
    int terms = 0;
    double last_term_norm = 0;
};

//! h = -(1/2mu) sum_n (K + M/2mu)^n g on the angle grid.
SeriesResult invert_LG_neumann(double mu,
                               double T,
                               std::span<double const> g,
                               double tol,
                               int quadrature_order = default_quadrature_order);

//! h = sum_k L^{-1} [M (-L)^{-1}]^k g on the angle grid.
SeriesResult invert_split_series(double mu,
                                 double T,
                                 std::span<double const> g,
                                 double tol,
                                 int quadrature_order = default_quadrature_order);

//---------------------------------------------------------------------------//
struct DiffusionCoefficient
{
    double D_B = 0;  //!< -1/lambda_1
    double D11 = 0;
    double D22 = 0;
    double D12 = 0;
};

DiffusionCoefficient diffusion_coefficient(AngularOperator const& op_LG);

struct InvertibilityThreshold
{
    double beta = beta_bound;
    double T_star = 0;
    double B_star = 0;
    double T_stated = 0.75;
    double B_stated = 0;  //!< 8 pi / 3
    double B_gap = 0;  //!< B_stated - B_star
};

InvertibilityThreshold invertibility_threshold();

struct OperatorSweepRow
{
    double B = 0;
    double T = 0;
    double D_direct = 0;
    double D_markovian_term = 0;
    double D_memory_sum = 0;
    bool series_converged = false;
};

//! D_B over a list of field strengths.
std::vector<OperatorSweepRow> operator_sweep(double mu,
                                             std::span<double const> B_values,
                                             int M_modes = default_modes,
                                             int quadrature_order = default_quadrature_order);

}  // namespace mlg
