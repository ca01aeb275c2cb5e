#include "maglorentz/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mlg
{
namespace
{
double pairwise_impl(double const* data, std::size_t n)
{
    if (n <= 8)
    {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i)
        {
            s += data[i];
        }
        return s;
    }
    auto half = n / 2;
    return pairwise_impl(data, half) + pairwise_impl(data + half, n - half);
}

Moments merge_impl(Moments const* data, std::size_t n)
{
    if (n == 0)
    {
        return {};
    }
    if (n == 1)
    {
        return data[0];
    }
    auto half = n / 2;
    auto left = merge_impl(data, half);
    left.merge(merge_impl(data + half, n - half));
    return left;
}
}  // namespace

double pairwise_sum(std::span<const double> values)
{
    return pairwise_impl(values.data(), values.size());
}

double Moments::mean() const
{
    return count > 0 ? sum / count : 0.0;
}

double Moments::variance() const
{
    if (count < 2)
    {
        return 0.0;
    }
    double m = mean();
    return std::max(0.0, (sum_sq - count * m * m) / (count - 1));
}

double Moments::std_error() const
{
    return count > 0 ? std::sqrt(variance() / count) : 0.0;
}

Moments pairwise_merge(std::span<const Moments> parts)
{
    return merge_impl(parts.data(), parts.size());
}

double binomial_std_error(double p, double n)
{
    if (n <= 0)
    {
        return 0.0;
    }
    return std::sqrt(std::max(0.0, p * (1 - p)) / n);
}

PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size())
    {
        throw std::invalid_argument("fit_power_law: size mismatch");
    }
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        if (x[i] > 0 && y[i] > 0)
        {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    PowerLawFit result;
    result.points_used = lx.size();
    if (lx.size() < 2)
    {
        result.exponent = std::numeric_limits<double>::quiet_NaN();
        result.prefactor = std::numeric_limits<double>::quiet_NaN();
        result.exponent_std_error = std::numeric_limits<double>::quiet_NaN();
        return result;
    }
    auto line = fit_line(lx, ly);
    result.exponent = line.slope;
    result.prefactor = std::exp(line.intercept);
    result.valid = true;

    auto n = static_cast<double>(lx.size());
    if (lx.size() > 2)
    {
        double mx = 0;
        for (double v : lx)
        {
            mx += v / n;
        }
        double sxx = 0, ssr = 0;
        for (std::size_t i = 0; i < lx.size(); ++i)
        {
            sxx += (lx[i] - mx) * (lx[i] - mx);
            double r = ly[i] - (line.intercept + line.slope * lx[i]);
            ssr += r * r;
        }
        result.exponent_std_error = std::sqrt(ssr / (n - 2) / sxx);
    }
    return result;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2)
    {
        throw std::invalid_argument("fit_line: need at least two paired points");
    }
    auto n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0)
    {
        throw std::invalid_argument("fit_line: degenerate abscissae");
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

}  // namespace mlg
