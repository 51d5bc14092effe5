#pragma once

// Exact scalar Kalman filter for the discrete linear-Gaussian system
//   x_{n+1} = F x_n + w,  w ~ N(0, Q)
//   m_n     = x_n + v,    v ~ N(0, R)
// used as the posterior oracle in the consistency tests.

#include <vector>

namespace oracle {

struct KalmanResult {
  std::vector<double> mean;  // posterior mean after each measurement
  std::vector<double> var;   // posterior variance after each measurement
};

inline KalmanResult kalman_filter_1d(double prior_mean, double prior_var,
                                     double F, double Q, double R,
                                     const std::vector<double>& measurements) {
  KalmanResult out;
  double m = prior_mean, p = prior_var;
  for (double z : measurements) {
    const double mp = F * m;
    const double pp = F * F * p + Q;
    const double gain = pp / (pp + R);
    m = mp + gain * (z - mp);
    p = (1.0 - gain) * pp;
    out.mean.push_back(m);
    out.var.push_back(p);
  }
  return out;
}

}  // namespace oracle
