#include "bwf/curve.hpp"

#include "bwf/error.hpp"

#include <algorithm>

namespace bwf {

TabulatedCurve::TabulatedCurve(std::vector<std::pair<double, double>> points, std::string name)
    : points_(std::move(points)), name_(std::move(name))
{
    if (points_.size() < 2)
        throw InputError("curve '" + name_ + "' needs at least 2 points");
    for (std::size_t i = 1; i < points_.size(); ++i)
        if (!(points_[i].first > points_[i - 1].first))
            throw InputError("curve '" + name_ + "' abscissae must be strictly increasing");
}

std::size_t TabulatedCurve::segment(double x) const
{
    auto it = std::upper_bound(points_.begin(), points_.end(), x,
                               [](double v, const auto& p) { return v < p.first; });
    auto idx = static_cast<std::size_t>(it - points_.begin());
    if (idx == 0)
        return 0;
    return std::min(idx - 1, points_.size() - 2);
}

double TabulatedCurve::value(double x) const
{
    if (!in_domain(x))
        throw ExtrapolationError("query " + std::to_string(x) + " outside curve '" + name_ + "' domain [" +
                                 std::to_string(min_x()) + ", " + std::to_string(max_x()) + "]");
    return value_extended(x);
}

double TabulatedCurve::value_extended(double x) const
{
    std::size_t s = segment(x);
    const auto& [x0, y0] = points_[s];
    const auto& [x1, y1] = points_[s + 1];
    if (x == x0)
        return y0;
    if (x == x1)
        return y1;
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

double TabulatedCurve::slope_extended(double x) const
{
    std::size_t s = segment(x);
    const auto& [x0, y0] = points_[s];
    const auto& [x1, y1] = points_[s + 1];
    return (y1 - y0) / (x1 - x0);
}

bool TabulatedCurve::strictly_decreasing() const
{
    for (std::size_t i = 1; i < points_.size(); ++i)
        if (!(points_[i].second < points_[i - 1].second))
            return false;
    return true;
}

}  // namespace bwf
