//---------------------------------------------------------------------------//
//! \file maglorentz/kinetic_solver.hpp
//! Spectral solver for the generalized Boltzmann equation on a periodic box.
//---------------------------------------------------------------------------//
#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "angular.hpp"
#include "operators.hpp"

namespace mlg
{
//---------------------------------------------------------------------------//
/*!
 * Phase-space density on the torus [0, L_box)^2 times the velocity circle.
 *
 * values[s * N_v + j] is the spatial Fourier coefficient for lattice mode s
 * (see spatial_index) at lab velocity angle 2 pi j / N_v.
 */
struct KineticField
{
    int N_x = 0;
    int N_v = 0;
    double L_box = 2 * std::numbers::pi;
    double time = 0;  //!< macroscopic time
    std::vector<cdouble> values;

    KineticField() = default;
    KineticField(int n_x, int n_v, double l_box = 2 * std::numbers::pi);

    std::size_t n_spatial() const;
    int side() const { return 2 * N_x + 1; }
    //! |xi_i| <= N_x
    std::size_t spatial_index(int xi_x, int xi_y) const;
    cdouble& at(int xi_x, int xi_y, int j);
    cdouble at(int xi_x, int xi_y, int j) const;

    //! Spatial and angular average (real part of the xi = 0 angular mean).
    double mass() const;
    //! max |f(-xi, j) - conj f(xi, j)|
    double reality_defect() const;

    //! Sample f(x, y, angle) on a spatial grid and keep the modes |xi_i| <= N_x.
    static KineticField
    from_function(int n_x,
                  int n_v,
                  double l_box,
                  std::function<double(double, double, double)> const& f);
};

//! Angular average <f>: one coefficient per spatial mode.
std::vector<cdouble> angular_average(KineticField const& f);

//! L^2 distance with normalized measures dx / L^2 and d angle / 2 pi.
double l2_distance(KineticField const& a, KineticField const& b);
//! Distance to an angle-independent field given by its spatial modes.
double l2_distance(KineticField const& a, std::vector<cdouble> const& rho);

//---------------------------------------------------------------------------//
struct KineticParams
{
    double mu = 1;
    double B = 0;  //!< T_delay = 2 pi / B
    double eta = 1;
    bool memory = true;  //!< false drops the delayed terms
    int quadrature_order = default_quadrature_order;

    double T_delay() const
    {
        return B > 0 ? 2 * std::numbers::pi / B : std::numeric_limits<double>::infinity();
    }
};

class KineticInstability : public std::runtime_error
{
  public:
    KineticInstability(std::string const& what, double t, double growth)
        : std::runtime_error(what), time(t), norm_growth(growth)
    {
    }
    double time;
    double norm_growth;
};

//! Largest macroscopic step allowed: 0.1 / (eta^2 2 mu (1 + ||M|| / 2 mu)).
double stability_bound(KineticParams const& p, int n_v);

/*!
 * Integrating-factor Adams-Bashforth 2 stepper.
 *
 * Works in kinetic time s = eta t on the co-rotating angle, where transport
 * along the Larmor circle is an exact diagonal phase and the collision and
 * memory terms are angular multipliers. The state is kept as angular Fourier
 * coefficients so the xi = 0, m = 0 mass mode is never touched. Memory terms
 * read past states at delays k T_delay (k <= min(K_cut, s / T_delay)) by
 * linear interpolation in a ring buffer of per-step snapshots.
 */
class KineticSolver
{
  public:
    //! dt is macroscopic; 0 selects stability_bound.
    KineticSolver(KineticParams params, KineticField const& f0, double dt = 0);

    void step();
    //! Steps until time() >= t - 1e-12 dt; the last step is shortened to land on t.
    void advance_to(double t);

    double time() const { return s_ / params_.eta; }
    double dt() const { return h_ / params_.eta; }
    int K_cut() const { return K_cut_; }
    double mass() const;
    //! || f - <f> ||
    double distance_to_average() const;
    double distance_to(std::vector<cdouble> const& rho) const;
    double reality_defect() const;
    //! Current field on the lab angle grid.
    KineticField field() const;
    //! Largest history delay ever read, relative to the current time.
    double max_history_lookback() const { return max_lookback_; }

  private:
    struct Snapshot
    {
        double s;
        std::vector<cdouble> coef;
    };

    KineticParams params_;
    int N_x_, N_v_;
    double L_box_;
    double h_;
    double s_ = 0;
    double T_;
    int K_cut_ = 0;
    std::vector<double> l_mult_;  // by FFT slot
    std::vector<std::vector<double>> m_mult_;  // [k-1][slot]
    std::vector<double> kx_, ky_;  // wave vector per spatial mode
    std::vector<cdouble> coef_;  // [spatial][slot], co-rotating
    std::vector<cdouble> prev_rhs_;
    double prev_h_ = 0;
    double prev_s_ = 0;
    bool have_prev_ = false;
    std::deque<Snapshot> ring_;
    double initial_norm_ = 0;
    double max_lookback_ = 0;
    ComplexAngularTransform fft_;

    std::vector<cdouble> rhs() const;
    void history_at(double s, std::vector<cdouble>& out) const;
    void push_history();
    void take_step(double h);
};

//---------------------------------------------------------------------------//
//! rho_hat(xi, t) = rho0_hat(xi) exp(-D |2 pi xi / L|^2 t); layout as KineticField.
std::vector<cdouble>
heat_reference(double D, std::vector<cdouble> const& rho0, int N_x, double L_box, double t);

struct HilbertCorrectors
{
    std::vector<cdouble> g0;
    KineticField g1;
    KineticField g2;
};

/*!
 * First two correctors of the expansion h = g0 + g1/eta + g2/eta^2.
 *
 * g1 = (L^G)^{-1} v.grad g0 and
 * g2 = (L^G)^{-1} [D Lap g0 + v.grad g1 + B d/dangle g1], with D = D^{11}.
 */
HilbertCorrectors hilbert_correctors(std::vector<cdouble> const& g0,
                                     int N_x,
                                     int N_v,
                                     double L_box,
                                     AngularOperator const& op_LG,
                                     double B);

struct KineticDiagnosticsRow
{
    double t = 0;
    double mass = 0;
    double dist_to_avg = 0;
    double dist_to_heat = 0;
};

struct KineticRun
{
    std::vector<KineticDiagnosticsRow> rows;
    KineticField final_field;
    std::vector<KineticField> snapshots;
    double D_heat = 0;  //!< D^{11} used by the heat reference
    double dt = 0;
    double max_reality_defect = 0;
};

struct KineticSolveOptions
{
    double dt = 0;  //!< 0 selects the stability bound
    double output_interval = 0;  //!< diagnostics spacing; 0 records every step
    std::vector<double> snapshot_times;
    int M_modes = 0;  //!< operator modes for D; 0 uses N_v / 2
};

KineticRun solve(KineticParams const& params,
                 KineticField const& f0,
                 double t_end,
                 KineticSolveOptions const& options = {});

struct HilbertStudyRow
{
    double eta = 0;
    double dist_heat = 0;
    double dist_hilbert1 = 0;
};

//! Distances at t_probe for each eta; solves run in parallel.
std::vector<HilbertStudyRow> hilbert_residual_study(std::vector<double> const& eta_list,
                                                    KineticParams const& base,
                                                    KineticField const& f0,
                                                    double t_probe,
                                                    double dt_fraction = 1,
                                                    unsigned workers = 1);

}  // namespace mlg
