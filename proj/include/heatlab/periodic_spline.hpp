#pragma once

#include <span>
#include <vector>

namespace heatlab {

/// Interpolating cubic spline through samples on a uniform periodic grid
/// x_i = i * period / N.  C2 and exactly periodic.
class PeriodicSpline {
  public:
    struct Jet {
        double value;
        double d1;
        double d2;
    };

    PeriodicSpline() = default;
    PeriodicSpline(std::span<const double> samples, double period);

    double operator()(double x) const { return jet(x).value; }
    Jet jet(double x) const;

    std::size_t size() const { return values_.size(); }
    double period() const { return period_; }
    std::span<const double> samples() const { return values_; }
    std::span<const double> second_derivatives() const { return moments_; }

  private:
    std::vector<double> values_;
    std::vector<double> moments_;
    double period_ = 0.0;
    double step_ = 0.0;
};

}  // namespace heatlab
