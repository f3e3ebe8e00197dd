#pragma once

#include <vector>

namespace nlslab {

/// Least-squares line y = slope * x + intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  int n = 0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Fit on (log x, log y); inputs must be positive.
LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace nlslab
