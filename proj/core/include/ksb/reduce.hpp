#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace ksb {

/// Neumaier compensated accumulator. All reductions whose values feed
/// identity residuals go through this.
class CompensatedSum {
  public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(const std::vector<double>& v) {
    CompensatedSum s;
    for (double x : v) s.add(x);
    return s.value();
}

}  // namespace ksb
