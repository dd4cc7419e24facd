#pragma once

// Downhill simplex (Nelder-Mead) with the standard coefficients
// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "nmss/errors.hpp"

namespace nmss {

struct NelderMeadOptions {
  /// Initial simplex edge along each axis.
  Eigen::VectorXd step;
  double f_tol = 1e-10;
  double x_tol = 1e-8;
  int max_evals = 2000;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int evals = 0;
  bool converged = false;
};

template <typename F>
NelderMeadResult nelder_mead(F&& f, const Eigen::VectorXd& x0, const NelderMeadOptions& opts) {
  const Eigen::Index n = x0.size();
  if (n < 1) throw InvalidInput("nelder_mead: empty start point");
  if (opts.step.size() != n) throw InvalidInput("nelder_mead: step size does not match dimension");

  NelderMeadResult res;
  auto eval = [&](const Eigen::VectorXd& x) {
    const double v = f(x);
    ++res.evals;
    if (!std::isfinite(v)) throw NumericalFailure("nelder_mead: objective returned a non-finite value");
    return v;
  };

  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1), x0);
  for (Eigen::Index i = 0; i < n; ++i) pts[static_cast<std::size_t>(i + 1)](i) += opts.step(i);
  std::vector<double> vals;
  for (const auto& p : pts) vals.push_back(eval(p));

  std::vector<std::size_t> idx(pts.size());
  while (true) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = idx.front(), worst = idx.back(), second = idx[idx.size() - 2];

    double spread = 0.0;
    for (const auto& p : pts) spread = std::max(spread, (p - pts[best]).cwiseAbs().maxCoeff());
    if (std::abs(vals[worst] - vals[best]) <= opts.f_tol && spread <= opts.x_tol) {
      res.converged = true;
      break;
    }
    if (res.evals >= opts.max_evals) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (i != worst) centroid += pts[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
    const double fr = eval(xr);
    if (fr < vals[best]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    // Contract toward the better of the reflected and worst points.
    const bool outside = fr < vals[worst];
    const Eigen::VectorXd xc =
        outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid)) : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      vals[i] = eval(pts[i]);
    }
  }

  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = pts[static_cast<std::size_t>(it - vals.begin())];
  res.f = *it;
  return res;
}

}  // namespace nmss
