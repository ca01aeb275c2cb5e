//---------------------------------------------------------------------------//
//! \file maglorentz/angular.hpp
//! FFT helpers for functions of the velocity angle.
//---------------------------------------------------------------------------//
#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace mlg
{
using cdouble = std::complex<double>;

//! Grid angle 2 pi j / n.
double grid_angle(std::size_t j, std::size_t n);

//! Signed mode number of FFT slot j (0, 1, ..., n/2, -(n/2 - 1), ..., -1).
int fft_mode(std::size_t j, std::size_t n);

/*!
 * Real samples on n equispaced angles <-> coefficients c_0 .. c_{n/2}.
 *
 * Normalized so that f(alpha_j) = sum_m c_m e^{i m alpha_j} with
 * c_{-m} = conj(c_m). Transforms are const and safe to call concurrently.
 */
class RealAngularTransform
{
  public:
    explicit RealAngularTransform(std::size_t n);
    ~RealAngularTransform();
    RealAngularTransform(RealAngularTransform&&) noexcept;
    RealAngularTransform& operator=(RealAngularTransform&&) noexcept;

    std::size_t size() const { return n_; }
    std::size_t n_coefficients() const { return n_ / 2 + 1; }

    std::vector<cdouble> forward(std::span<double const> f) const;
    std::vector<double> inverse(std::span<cdouble const> c) const;

    //! f <- sum_m lambda(|m|) c_m e^{i m alpha}; lambda holds >= n/2 + 1 values.
    std::vector<double>
    apply_multipliers(std::span<double const> f, std::span<double const> lambda) const;

  private:
    struct Plans;
    std::size_t n_;
    std::unique_ptr<Plans> plans_;
};

/*!
 * Batched complex transform: `batch` contiguous rows of n angular samples.
 *
 * Coefficients are stored in FFT order (see fft_mode) with the same
 * normalization as RealAngularTransform.
 */
class ComplexAngularTransform
{
  public:
    ComplexAngularTransform(std::size_t n, std::size_t batch);
    ~ComplexAngularTransform();
    ComplexAngularTransform(ComplexAngularTransform&&) noexcept;
    ComplexAngularTransform& operator=(ComplexAngularTransform&&) noexcept;

    std::size_t size() const { return n_; }
    std::size_t batch() const { return batch_; }

    //! In-place on n * batch values.
    void forward(std::span<cdouble> data) const;
    void inverse(std::span<cdouble> data) const;

  private:
    struct Plans;
    std::size_t n_;
    std::size_t batch_;
    std::unique_ptr<Plans> plans_;
};

}  // namespace mlg
