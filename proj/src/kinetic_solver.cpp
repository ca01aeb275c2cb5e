#include "maglorentz/kinetic_solver.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "maglorentz/parallel.hpp"

namespace mlg
{
namespace
{
constexpr double pi = std::numbers::pi;
constexpr double growth_limit = 10;

double sinc(double x)
{
    return std::abs(x) < 1e-8 ? 1 - x * x / 6 : std::sin(x) / x;
}

double norm2(std::vector<cdouble> const& v)
{
    double s = 0;
    for (auto c : v)
    {
        s += std::norm(c);
    }
    return s;
}

void check_shape(int n_x, int n_v, double l_box)
{
    if (n_x < 0 || n_v < 8 || n_v % 2 != 0 || !(l_box > 0))
    {
        throw std::invalid_argument(fmt::format(
            "KineticField: need N_x >= 0, even N_v >= 8, L_box > 0 (got {}, {}, {})",
            n_x, n_v, l_box));
    }
}

double wave_number(int xi, double l_box)
{
    return 2 * pi * xi / l_box;
}
}  // namespace

//---------------------------------------------------------------------------//
KineticField::KineticField(int n_x, int n_v, double l_box)
    : N_x(n_x), N_v(n_v), L_box(l_box)
{
    check_shape(n_x, n_v, l_box);
    values.assign(n_spatial() * static_cast<std::size_t>(N_v), 0.0);
}

std::size_t KineticField::n_spatial() const
{
    auto s = static_cast<std::size_t>(side());
    return s * s;
}

std::size_t KineticField::spatial_index(int xi_x, int xi_y) const
{
    if (std::abs(xi_x) > N_x || std::abs(xi_y) > N_x)
    {
        throw std::out_of_range("KineticField: spatial mode out of range");
    }
    return static_cast<std::size_t>((xi_x + N_x) * side() + (xi_y + N_x));
}

cdouble& KineticField::at(int xi_x, int xi_y, int j)
{
    return values[spatial_index(xi_x, xi_y) * static_cast<std::size_t>(N_v)
                  + static_cast<std::size_t>(j)];
}

cdouble KineticField::at(int xi_x, int xi_y, int j) const
{
    return values[spatial_index(xi_x, xi_y) * static_cast<std::size_t>(N_v)
                  + static_cast<std::size_t>(j)];
}

double KineticField::mass() const
{
    cdouble s = 0;
    for (int j = 0; j < N_v; ++j)
    {
        s += at(0, 0, j);
    }
    return s.real() / N_v;
}

double KineticField::reality_defect() const
{
    double d = 0;
    for (int a = -N_x; a <= N_x; ++a)
    {
        for (int b = -N_x; b <= N_x; ++b)
        {
            for (int j = 0; j < N_v; ++j)
            {
                d = std::max(d, std::abs(at(-a, -b, j) - std::conj(at(a, b, j))));
            }
        }
    }
    return d;
}

KineticField
KineticField::from_function(int n_x,
                            int n_v,
                            double l_box,
                            std::function<double(double, double, double)> const& f)
{
    KineticField out(n_x, n_v, l_box);
    int S = std::max(8, 4 * n_x + 4);
    double dx = l_box / S;
    std::vector<double> samples(static_cast<std::size_t>(S * S));
    for (int j = 0; j < n_v; ++j)
    {
        double angle = grid_angle(static_cast<std::size_t>(j), static_cast<std::size_t>(n_v));
        for (int a = 0; a < S; ++a)
        {
            for (int b = 0; b < S; ++b)
            {
                samples[static_cast<std::size_t>(a * S + b)] = f(a * dx, b * dx, angle);
            }
        }
        for (int p = -n_x; p <= n_x; ++p)
        {
            for (int q = -n_x; q <= n_x; ++q)
            {
                cdouble c = 0;
                for (int a = 0; a < S; ++a)
                {
                    for (int b = 0; b < S; ++b)
                    {
                        double phase = -2 * pi * (p * a + q * b) / S;
                        c += samples[static_cast<std::size_t>(a * S + b)] * std::polar(1.0, phase);
                    }
                }
                out.at(p, q, j) = c / static_cast<double>(S * S);
            }
        }
    }
    return out;
}

std::vector<cdouble> angular_average(KineticField const& f)
{
    std::vector<cdouble> out(f.n_spatial(), 0.0);
    auto nv = static_cast<std::size_t>(f.N_v);
    for (std::size_t s = 0; s < out.size(); ++s)
    {
        for (std::size_t j = 0; j < nv; ++j)
        {
            out[s] += f.values[s * nv + j];
        }
        out[s] /= static_cast<double>(nv);
    }
    return out;
}

double l2_distance(KineticField const& a, KineticField const& b)
{
    if (a.N_x != b.N_x || a.N_v != b.N_v)
    {
        throw std::invalid_argument("l2_distance: field shapes differ");
    }
    double s = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
    {
        s += std::norm(a.values[i] - b.values[i]);
    }
    return std::sqrt(s / a.N_v);
}

double l2_distance(KineticField const& a, std::vector<cdouble> const& rho)
{
    if (rho.size() != a.n_spatial())
    {
        throw std::invalid_argument("l2_distance: spatial mode count differs");
    }
    auto nv = static_cast<std::size_t>(a.N_v);
    double s = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
    {
        s += std::norm(a.values[i] - rho[i / nv]);
    }
    return std::sqrt(s / a.N_v);
}

//---------------------------------------------------------------------------//
double stability_bound(KineticParams const& p, int n_v)
{
    if (!(p.mu > 0))
    {
        return std::numeric_limits<double>::infinity();
    }
    double norm_M = 0;
    double T = p.T_delay();
    if (p.memory && std::isfinite(T))
    {
        auto M = build_M(p.mu, T, n_v / 2, 0, p.quadrature_order);
        for (double m : M.multipliers)
        {
            norm_M = std::max(norm_M, std::abs(m));
        }
    }
    return 0.1 / (p.eta * p.eta * 2 * p.mu * (1 + norm_M / (2 * p.mu)));
}

KineticSolver::KineticSolver(KineticParams params, KineticField const& f0, double dt)
    : params_(params),
      N_x_(f0.N_x),
      N_v_(f0.N_v),
      L_box_(f0.L_box),
      T_(params.T_delay()),
      fft_(static_cast<std::size_t>(f0.N_v), f0.n_spatial())
{
    check_shape(N_x_, N_v_, L_box_);
    if (!(params_.mu >= 0) || !(params_.eta >= 1) || !(params_.B >= 0))
    {
        throw std::invalid_argument("KineticSolver: need mu >= 0, eta >= 1, B >= 0");
    }
    if (f0.values.size() != f0.n_spatial() * static_cast<std::size_t>(N_v_))
    {
        throw std::invalid_argument("KineticSolver: malformed initial field");
    }
    double bound = stability_bound(params_, N_v_);
    if (dt == 0)
    {
        if (std::isinf(bound))
        {
            throw std::invalid_argument("KineticSolver: dt required when mu = 0");
        }
        dt = bound;
    }
    if (!(dt > 0) || dt > bound * (1 + 1e-12))
    {
        throw std::invalid_argument(fmt::format(
            "KineticSolver: dt = {} outside (0, {}] (stability bound)", dt, bound));
    }
    h_ = dt * params_.eta;

    auto nv = static_cast<std::size_t>(N_v_);
    int modes = N_v_ / 2;
    l_mult_.assign(nv, 0.0);
    if (params_.mu > 0)
    {
        auto L = build_L(params_.mu, modes, params_.quadrature_order);
        for (std::size_t j = 0; j < nv; ++j)
        {
            l_mult_[j] = L.at(fft_mode(j, nv));
        }
        if (params_.memory && std::isfinite(T_))
        {
            K_cut_ = memory_cutoff(params_.mu, T_);
            for (int k = 1; k <= K_cut_; ++k)
            {
                auto mk = memory_term_multipliers(params_.mu, T_, k, modes,
                                                  params_.quadrature_order);
                std::vector<double> by_slot(nv);
                for (std::size_t j = 0; j < nv; ++j)
                {
                    by_slot[j] = mk[static_cast<std::size_t>(std::abs(fft_mode(j, nv)))];
                }
                m_mult_.push_back(std::move(by_slot));
            }
        }
    }

    auto ns = f0.n_spatial();
    kx_.resize(ns);
    ky_.resize(ns);
    for (int a = -N_x_; a <= N_x_; ++a)
    {
        for (int b = -N_x_; b <= N_x_; ++b)
        {
            auto s = f0.spatial_index(a, b);
            kx_[s] = wave_number(a, L_box_);
            ky_[s] = wave_number(b, L_box_);
        }
    }

    coef_ = f0.values;
    fft_.forward(coef_);
    s_ = params_.eta * f0.time;
    if (f0.time != 0)
    {
        throw std::invalid_argument("KineticSolver: initial field must be at t = 0");
    }
    initial_norm_ = std::sqrt(norm2(coef_));
    push_history();
}

std::vector<cdouble> KineticSolver::rhs() const
{
    auto nv = static_cast<std::size_t>(N_v_);
    std::vector<cdouble> out(coef_.size());
    double eta = params_.eta;
    for (std::size_t i = 0; i < coef_.size(); ++i)
    {
        out[i] = eta * l_mult_[i % nv] * coef_[i];
    }
    if (K_cut_ > 0)
    {
        // Sum over k <= [s / T]
        auto k_max = std::min<long>(K_cut_, static_cast<long>(std::floor(s_ / T_ + 1e-12)));
        std::vector<cdouble> past(coef_.size());
        for (long k = 1; k <= k_max; ++k)
        {
            history_at(s_ - static_cast<double>(k) * T_, past);
            auto const& mk = m_mult_[static_cast<std::size_t>(k - 1)];
            for (std::size_t i = 0; i < coef_.size(); ++i)
            {
                out[i] += eta * mk[i % nv] * past[i];
            }
        }
    }
    return out;
}

void KineticSolver::history_at(double s, std::vector<cdouble>& out) const
{
    if (ring_.empty() || s < ring_.front().s - 1e-12 * h_ || s > s_ + 1e-12 * h_)
    {
        throw std::logic_error(
            fmt::format("KineticSolver: history underrun at kinetic time {}", s));
    }
    auto it = std::lower_bound(ring_.begin(), ring_.end(), s,
                               [](Snapshot const& a, double v) { return a.s < v; });
    if (it == ring_.end())
    {
        --it;
    }
    if (it == ring_.begin() || std::abs(it->s - s) <= 1e-12 * h_)
    {
        out = it->coef;
        return;
    }
    auto lo = std::prev(it);
    double w = (s - lo->s) / (it->s - lo->s);
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        out[i] = (1 - w) * lo->coef[i] + w * it->coef[i];
    }
}

void KineticSolver::push_history()
{
    if (K_cut_ == 0)
    {
        return;
    }
    ring_.push_back({s_, coef_});
    // Keep what the largest delay can still reach, plus one bracket
    double keep_from = s_ - K_cut_ * T_;
    while (ring_.size() > 2 && ring_[1].s <= keep_from)
    {
        ring_.pop_front();
    }
}

void KineticSolver::take_step(double h)
{
    auto nv = static_cast<std::size_t>(N_v_);
    auto ns = coef_.size() / nv;
    auto zero = static_cast<std::size_t>(N_x_ * (2 * N_x_ + 1) + N_x_);
    auto N = rhs();
    if (K_cut_ > 0)
    {
        max_lookback_ = std::max(
            max_lookback_,
            std::min<double>(K_cut_, std::floor(s_ / T_ + 1e-12)) * T_);
    }

    // Variable-step AB2 weights; the first step is integrating-factor Euler
    double a = 1, b = 0;
    if (have_prev_)
    {
        double r = h / prev_h_;
        a = 1 + 0.5 * r;
        b = -0.5 * r;
    }
    std::vector<cdouble> A(coef_.size()), Bv(coef_.size(), 0.0);
    for (std::size_t i = 0; i < coef_.size(); ++i)
    {
        A[i] = coef_[i] + h * a * N[i];
        if (have_prev_)
        {
            Bv[i] = h * b * prev_rhs_[i];
        }
    }
    fft_.inverse(A);
    if (have_prev_)
    {
        fft_.inverse(Bv);
    }
    // Path integral of v over [s0, s1] on the co-rotating angle alpha
    auto drift = [&](double s0, double s1, std::vector<double>& vx, std::vector<double>& vy) {
        double d = s1 - s0;
        double B = params_.B;
        double len = d * sinc(0.5 * B * d);
        double mid = 0.5 * B * (s0 + s1);
        vx.resize(nv);
        vy.resize(nv);
        for (std::size_t j = 0; j < nv; ++j)
        {
            double ang = grid_angle(j, nv) + mid;
            vx[j] = len * std::cos(ang);
            vy[j] = len * std::sin(ang);
        }
    };
    std::vector<double> ax, ay, bx, by;
    drift(s_, s_ + h, ax, ay);
    if (have_prev_)
    {
        drift(prev_s_, s_ + h, bx, by);
    }
    for (std::size_t s = 0; s < ns; ++s)
    {
        for (std::size_t j = 0; j < nv; ++j)
        {
            auto i = s * nv + j;
            cdouble v = A[i] * std::polar(1.0, -(kx_[s] * ax[j] + ky_[s] * ay[j]));
            if (have_prev_)
            {
                v += Bv[i] * std::polar(1.0, -(kx_[s] * bx[j] + ky_[s] * by[j]));
            }
            A[i] = v;
        }
    }
    fft_.forward(A);
    // The xi = 0 row has no transport: keep its exact coefficient update
    for (std::size_t j = 0; j < nv; ++j)
    {
        auto i = zero * nv + j;
        A[i] = coef_[i] + h * a * N[i] + (have_prev_ ? h * b * prev_rhs_[i] : cdouble(0));
    }

    prev_rhs_ = std::move(N);
    prev_h_ = h;
    prev_s_ = s_;
    have_prev_ = true;
    coef_ = std::move(A);
    s_ += h;
    push_history();

    double growth = std::sqrt(norm2(coef_)) / std::max(initial_norm_, 1e-300);
    if (!(growth <= growth_limit))
    {
        throw KineticInstability(
            fmt::format("kinetic solver unstable at t = {:.6g}: norm grew by {:.3g}",
                        time(), growth),
            time(), growth);
    }
}

void KineticSolver::step()
{
    take_step(h_);
}

void KineticSolver::advance_to(double t)
{
    double target = t * params_.eta;
    while (target - s_ > 1e-12 * h_)
    {
        take_step(std::min(h_, target - s_));
    }
}

double KineticSolver::mass() const
{
    auto zero = static_cast<std::size_t>(N_x_ * (2 * N_x_ + 1) + N_x_);
    return coef_[zero * static_cast<std::size_t>(N_v_)].real();
}

double KineticSolver::distance_to_average() const
{
    auto nv = static_cast<std::size_t>(N_v_);
    double s = 0;
    for (std::size_t i = 0; i < coef_.size(); ++i)
    {
        if (i % nv != 0)
        {
            s += std::norm(coef_[i]);
        }
    }
    return std::sqrt(s);
}

double KineticSolver::distance_to(std::vector<cdouble> const& rho) const
{
    auto nv = static_cast<std::size_t>(N_v_);
    if (rho.size() * nv != coef_.size())
    {
        throw std::invalid_argument("distance_to: spatial mode count differs");
    }
    double s = 0;
    for (std::size_t i = 0; i < coef_.size(); ++i)
    {
        s += std::norm(i % nv == 0 ? coef_[i] - rho[i / nv] : coef_[i]);
    }
    return std::sqrt(s);
}

double KineticSolver::reality_defect() const
{
    auto nv = static_cast<std::size_t>(N_v_);
    auto ns = coef_.size() / nv;
    double d = 0;
    for (std::size_t s = 0; s < ns; ++s)
    {
        auto mirror = ns - 1 - s;  // (-a, -b) in the row-major lattice
        for (std::size_t j = 0; j < nv; ++j)
        {
            auto jm = (nv - j) % nv;
            d = std::max(d, std::abs(coef_[mirror * nv + jm] - std::conj(coef_[s * nv + j])));
        }
    }
    return d;
}

KineticField KineticSolver::field() const
{
    KineticField f(N_x_, N_v_, L_box_);
    f.time = time();
    auto nv = static_cast<std::size_t>(N_v_);
    f.values = coef_;
    // Lab coefficient: g_m exp(-i m B s)
    for (std::size_t i = 0; i < f.values.size(); ++i)
    {
        auto j = i % nv;
        int m = fft_mode(j, nv);
        // The Nyquist slot stands for both +-n/2; keep the real part of the shift
        f.values[i] *= 2 * j == nv ? cdouble(std::cos(m * params_.B * s_))
                                   : std::polar(1.0, -m * params_.B * s_);
    }
    fft_.inverse(f.values);
    return f;
}

//---------------------------------------------------------------------------//
std::vector<cdouble>
heat_reference(double D, std::vector<cdouble> const& rho0, int N_x, double L_box, double t)
{
    if (!(D > 0))
    {
        throw std::invalid_argument("heat_reference: D must be positive");
    }
    auto side = static_cast<std::size_t>(2 * N_x + 1);
    if (rho0.size() != side * side)
    {
        throw std::invalid_argument("heat_reference: spatial mode count differs");
    }
    std::vector<cdouble> out(rho0.size());
    for (int a = -N_x; a <= N_x; ++a)
    {
        for (int b = -N_x; b <= N_x; ++b)
        {
            auto s = static_cast<std::size_t>((a + N_x)) * side + static_cast<std::size_t>(b + N_x);
            double k2 = std::pow(wave_number(a, L_box), 2) + std::pow(wave_number(b, L_box), 2);
            out[s] = rho0[s] * std::exp(-D * k2 * t);
        }
    }
    return out;
}

HilbertCorrectors hilbert_correctors(std::vector<cdouble> const& g0,
                                     int N_x,
                                     int N_v,
                                     double L_box,
                                     AngularOperator const& op_LG,
                                     double B)
{
    HilbertCorrectors out;
    out.g0 = g0;
    out.g1 = KineticField(N_x, N_v, L_box);
    out.g2 = KineticField(N_x, N_v, L_box);
    if (g0.size() != out.g1.n_spatial())
    {
        throw std::invalid_argument("hilbert_correctors: spatial mode count differs");
    }
    if (op_LG.max_mode() < 2)
    {
        throw std::invalid_argument("hilbert_correctors: operator needs modes up to 2");
    }
    double l1 = op_LG.at(1), l2 = op_LG.at(2);
    if (std::abs(l1) < 1e-13 || std::abs(l2) < 1e-13)
    {
        throw NearSingularOperator("hilbert_correctors: near-singular low mode");
    }
    auto nv = static_cast<std::size_t>(N_v);
    auto slot = [nv](int m) { return static_cast<std::size_t>((m + static_cast<int>(nv)) % static_cast<int>(nv)); };
    for (int a = -N_x; a <= N_x; ++a)
    {
        for (int b = -N_x; b <= N_x; ++b)
        {
            auto s = out.g1.spatial_index(a, b);
            double kx = wave_number(a, L_box), ky = wave_number(b, L_box);
            // i k.v = p e^{i alpha} + pm e^{-i alpha}
            cdouble p(ky / 2, kx / 2), pm(-ky / 2, kx / 2);
            cdouble a1 = p * g0[s] / l1, am1 = pm * g0[s] / l1;
            auto* r1 = &out.g1.values[s * nv];
            r1[slot(1)] = a1;
            r1[slot(-1)] = am1;

            auto* r2 = &out.g2.values[s * nv];
            // D Lap g0 + [i k.v g1]_0 vanishes by the choice D = D^{11}
            r2[slot(2)] = p * a1 / l2;
            r2[slot(-2)] = pm * am1 / l2;
            r2[slot(1)] = cdouble(0, B) * a1 / l1;
            r2[slot(-1)] = cdouble(0, -B) * am1 / l1;
        }
    }
    ComplexAngularTransform fft(nv, out.g1.n_spatial());
    fft.inverse(out.g1.values);
    fft.inverse(out.g2.values);
    return out;
}

//---------------------------------------------------------------------------//
KineticRun solve(KineticParams const& params,
                 KineticField const& f0,
                 double t_end,
                 KineticSolveOptions const& options)
{
    if (!(t_end >= 0))
    {
        throw std::invalid_argument("solve: t_end must be nonnegative");
    }
    KineticSolver solver(params, f0, options.dt);
    KineticRun run;
    run.dt = solver.dt();
    int modes = options.M_modes > 0 ? options.M_modes : f0.N_v / 2;
    run.D_heat = std::numeric_limits<double>::quiet_NaN();
    if (params.mu > 0)
    {
        try
        {
            auto op = build_LG(params.mu, params.T_delay(), modes, 0, params.quadrature_order);
            run.D_heat = diffusion_coefficient(op).D11;
        }
        catch (NearSingularOperator const&)
        {
        }
    }
    auto rho0 = angular_average(f0);
    auto record = [&] {
        KineticDiagnosticsRow r;
        r.t = solver.time();
        r.mass = solver.mass();
        r.dist_to_avg = solver.distance_to_average();
        r.dist_to_heat = std::isnan(run.D_heat)
                             ? run.D_heat
                             : solver.distance_to(heat_reference(
                                 run.D_heat, rho0, f0.N_x, f0.L_box, solver.time()));
        run.rows.push_back(r);
        run.max_reality_defect = std::max(run.max_reality_defect, solver.reality_defect());
    };

    auto snaps = options.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;
    auto take_snapshots = [&] {
        while (next_snap < snaps.size() && snaps[next_snap] <= solver.time() + 1e-12)
        {
            run.snapshots.push_back(solver.field());
            ++next_snap;
        }
    };

    record();
    take_snapshots();
    double out_dt = options.output_interval > 0 ? options.output_interval : run.dt;
    for (long n = 1; solver.time() < t_end - 1e-12 * run.dt; ++n)
    {
        double target = std::min(t_end, n * out_dt);
        // Never step past a pending snapshot
        if (next_snap < snaps.size() && snaps[next_snap] < target)
        {
            solver.advance_to(snaps[next_snap]);
            take_snapshots();
            --n;
            continue;
        }
        solver.advance_to(target);
        record();
        take_snapshots();
    }
    run.final_field = solver.field();
    return run;
}

std::vector<HilbertStudyRow> hilbert_residual_study(std::vector<double> const& eta_list,
                                                    KineticParams const& base,
                                                    KineticField const& f0,
                                                    double t_probe,
                                                    double dt_fraction,
                                                    unsigned workers)
{
    if (eta_list.empty() || !std::is_sorted(eta_list.begin(), eta_list.end())
        || std::adjacent_find(eta_list.begin(), eta_list.end()) != eta_list.end())
    {
        throw std::invalid_argument("hilbert_residual_study: eta list must increase");
    }
    if (!(dt_fraction > 0 && dt_fraction <= 1) || !(t_probe > 0) || !(base.mu > 0))
    {
        throw std::invalid_argument(
            "hilbert_residual_study: need 0 < dt_fraction <= 1, t_probe > 0, mu > 0");
    }
    auto op = build_LG(base.mu, base.T_delay(), f0.N_v / 2, 0, base.quadrature_order);
    double D = diffusion_coefficient(op).D11;
    auto rho = heat_reference(D, angular_average(f0), f0.N_x, f0.L_box, t_probe);
    auto corr = hilbert_correctors(rho, f0.N_x, f0.N_v, f0.L_box, op, base.B);

    std::vector<HilbertStudyRow> rows(eta_list.size());
    parallel_for(eta_list.size(), workers, [&](std::size_t i) {
        auto p = base;
        p.eta = eta_list[i];
        KineticSolver solver(p, f0, dt_fraction * stability_bound(p, f0.N_v));
        solver.advance_to(t_probe);
        auto h = solver.field();
        auto approx = corr.g1;
        auto nv = static_cast<std::size_t>(f0.N_v);
        for (std::size_t k = 0; k < approx.values.size(); ++k)
        {
            approx.values[k] = rho[k / nv] + approx.values[k] / p.eta;
        }
        rows[i].eta = p.eta;
        rows[i].dist_heat = l2_distance(h, rho);
        rows[i].dist_hilbert1 = l2_distance(h, approx);
    });
    return rows;
}

}  // namespace mlg
