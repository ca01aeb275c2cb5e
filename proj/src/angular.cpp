#include "maglorentz/angular.hpp"

#include <algorithm>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <fftw3.h>

namespace mlg
{
namespace
{
// FFTW planning is not thread safe; execution with the new-array API is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

constexpr unsigned plan_flags = FFTW_ESTIMATE | FFTW_UNALIGNED;

fftw_complex* as_fftw(cdouble* p)
{
    return reinterpret_cast<fftw_complex*>(p);
}
}  // namespace

double grid_angle(std::size_t j, std::size_t n)
{
    return 2 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
}

int fft_mode(std::size_t j, std::size_t n)
{
    auto m = static_cast<long>(j);
    return static_cast<int>(2 * j <= n ? m : m - static_cast<long>(n));
}

//---------------------------------------------------------------------------//
struct RealAngularTransform::Plans
{
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
    ~Plans()
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(r2c);
        fftw_destroy_plan(c2r);
    }
};

RealAngularTransform::RealAngularTransform(std::size_t n) : n_(n)
{
    if (n < 2 || n % 2 != 0)
    {
        throw std::invalid_argument("RealAngularTransform: n must be even and >= 2");
    }
    std::vector<double> re(n);
    std::vector<cdouble> co(n / 2 + 1);
    plans_ = std::make_unique<Plans>();
    std::lock_guard lock(planner_mutex());
    int ni = static_cast<int>(n);
    plans_->r2c = fftw_plan_dft_r2c_1d(ni, re.data(), as_fftw(co.data()), plan_flags);
    plans_->c2r = fftw_plan_dft_c2r_1d(ni, as_fftw(co.data()), re.data(), plan_flags);
}

RealAngularTransform::~RealAngularTransform() = default;
RealAngularTransform::RealAngularTransform(RealAngularTransform&&) noexcept = default;
RealAngularTransform& RealAngularTransform::operator=(RealAngularTransform&&) noexcept = default;

std::vector<cdouble> RealAngularTransform::forward(std::span<double const> f) const
{
    if (f.size() != n_)
    {
        throw std::invalid_argument("RealAngularTransform::forward: size mismatch");
    }
    std::vector<double> in(f.begin(), f.end());
    std::vector<cdouble> out(n_ / 2 + 1);
    fftw_execute_dft_r2c(plans_->r2c, in.data(), as_fftw(out.data()));
    double scale = 1.0 / static_cast<double>(n_);
    for (auto& c : out)
    {
        c *= scale;
    }
    return out;
}

std::vector<double> RealAngularTransform::inverse(std::span<cdouble const> c) const
{
    if (c.size() != n_ / 2 + 1)
    {
        throw std::invalid_argument("RealAngularTransform::inverse: size mismatch");
    }
    // c2r overwrites its input
    std::vector<cdouble> in(c.begin(), c.end());
    std::vector<double> out(n_);
    fftw_execute_dft_c2r(plans_->c2r, as_fftw(in.data()), out.data());
    return out;
}

std::vector<double>
RealAngularTransform::apply_multipliers(std::span<double const> f,
                                        std::span<double const> lambda) const
{
    if (lambda.size() < n_ / 2 + 1)
    {
        throw std::invalid_argument("apply_multipliers: too few multipliers");
    }
    auto c = forward(f);
    for (std::size_t m = 0; m < c.size(); ++m)
    {
        c[m] *= lambda[m];
    }
    return inverse(c);
}

//---------------------------------------------------------------------------//
struct ComplexAngularTransform::Plans
{
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    ~Plans()
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
};

ComplexAngularTransform::ComplexAngularTransform(std::size_t n, std::size_t batch)
    : n_(n), batch_(batch)
{
    if (n < 2 || batch < 1)
    {
        throw std::invalid_argument("ComplexAngularTransform: need n >= 2, batch >= 1");
    }
    std::vector<cdouble> buf(n * batch);
    plans_ = std::make_unique<Plans>();
    int ni = static_cast<int>(n);
    int howmany = static_cast<int>(batch);
    std::lock_guard lock(planner_mutex());
    plans_->fwd = fftw_plan_many_dft(1, &ni, howmany, as_fftw(buf.data()), nullptr, 1, ni,
                                     as_fftw(buf.data()), nullptr, 1, ni, FFTW_FORWARD,
                                     plan_flags);
    plans_->bwd = fftw_plan_many_dft(1, &ni, howmany, as_fftw(buf.data()), nullptr, 1, ni,
                                     as_fftw(buf.data()), nullptr, 1, ni, FFTW_BACKWARD,
                                     plan_flags);
}

ComplexAngularTransform::~ComplexAngularTransform() = default;
ComplexAngularTransform::ComplexAngularTransform(ComplexAngularTransform&&) noexcept = default;
ComplexAngularTransform&
ComplexAngularTransform::operator=(ComplexAngularTransform&&) noexcept = default;

void ComplexAngularTransform::forward(std::span<cdouble> data) const
{
    if (data.size() != n_ * batch_)
    {
        throw std::invalid_argument("ComplexAngularTransform::forward: size mismatch");
    }
    fftw_execute_dft(plans_->fwd, as_fftw(data.data()), as_fftw(data.data()));
    double scale = 1.0 / static_cast<double>(n_);
    for (auto& c : data)
    {
        c *= scale;
    }
}

void ComplexAngularTransform::inverse(std::span<cdouble> data) const
{
    if (data.size() != n_ * batch_)
    {
        throw std::invalid_argument("ComplexAngularTransform::inverse: size mismatch");
    }
    fftw_execute_dft(plans_->bwd, as_fftw(data.data()), as_fftw(data.data()));
}

}  // namespace mlg
