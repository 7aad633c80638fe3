#pragma once

#include <string>
#include <utility>
#include <vector>

namespace bwf {

// Piecewise-linear table over strictly increasing abscissae. Queries outside
// [front, back] are rejected; the hydraulic solver uses the extended
// variants internally and checks the final operating point itself.
class TabulatedCurve {
public:
    TabulatedCurve() = default;
    TabulatedCurve(std::vector<std::pair<double, double>> points, std::string name = {});

    const std::vector<std::pair<double, double>>& points() const { return points_; }
    double min_x() const { return points_.front().first; }
    double max_x() const { return points_.back().first; }
    bool in_domain(double x) const { return x >= min_x() && x <= max_x(); }
    bool empty() const { return points_.empty(); }

    double value(double x) const;  // throws ExtrapolationError outside domain
    double value_extended(double x) const;  // linear continuation of end segments
    double slope_extended(double x) const;

    bool strictly_decreasing() const;

    friend bool operator==(const TabulatedCurve&, const TabulatedCurve&) = default;

private:
    std::size_t segment(double x) const;

    std::vector<std::pair<double, double>> points_;
    std::string name_;
};

}  // namespace bwf
