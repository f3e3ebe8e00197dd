#include "nlslab/fitting.hpp"

#include <cmath>

#include "nlslab/errors.hpp"

namespace nlslab {

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const int m = int(x.size());
  if (m < 2 || y.size() != x.size())
    throw ParameterError("fit_line: need at least two matching samples");
  double xm = 0.0, ym = 0.0;
  for (int i = 0; i < m; ++i) {
    xm += x[i];
    ym += y[i];
  }
  xm /= m;
  ym /= m;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < m; ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  if (sxx == 0.0) throw ParameterError("fit_line: degenerate abscissae");
  LineFit out;
  out.n = m;
  out.slope = sxy / sxx;
  out.intercept = ym - out.slope * xm;
  if (m > 2) {
    double ss = 0.0;
    for (int i = 0; i < m; ++i) {
      const double r = y[i] - out.slope * x[i] - out.intercept;
      ss += r * r;
    }
    out.slope_stderr = std::sqrt(ss / (m - 2) / sxx);
  }
  return out;
}

LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw DegenerateInputError("fit_loglog: samples must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_line(lx, ly);
}

}  // namespace nlslab
