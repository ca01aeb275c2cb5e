//---------------------------------------------------------------------------//
//! \file maglorentz/stats.hpp
//! Reductions and small estimators shared by the Monte Carlo modules.
//---------------------------------------------------------------------------//
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mlg
{
//! Pairwise (tree) summation; result depends only on the input order.
double pairwise_sum(std::span<const double> values);

//! Sum and sum of squares accumulated in blocks, merged in block order.
struct Moments
{
    double count = 0;
    double sum = 0;
    double sum_sq = 0;

    void add(double x)
    {
        count += 1;
        sum += x;
        sum_sq += x * x;
    }
    void merge(Moments const& other)
    {
        count += other.count;
        sum += other.sum;
        sum_sq += other.sum_sq;
    }
    double mean() const;
    //! Sample variance (n-1 denominator); zero for fewer than two samples.
    double variance() const;
    double std_error() const;
};

//! Merge a sequence of partial moments with a pairwise tree.
Moments pairwise_merge(std::span<const Moments> parts);

//! Standard error of a binomial proportion estimate.
double binomial_std_error(double p, double n);

struct PowerLawFit
{
    double exponent = 0;
    double prefactor = 0;
    double exponent_std_error = 0;
    std::size_t points_used = 0;
    bool valid = false;
};

/*!
 * Least-squares fit of log(y) = log(c) + a log(x) over entries with x, y > 0.
 *
 * Fewer than two usable points give an invalid fit (exponent is NaN).
 */
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y);

//! Slope and intercept of an ordinary least-squares line.
struct LineFit
{
    double slope = 0;
    double intercept = 0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace mlg
