#include "geoprof/optimizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace geoprof {
namespace {

struct GradientResult {
  Eigen::VectorXd g;
  double value;
};

GradientResult centralGradient(const BatchObjective& f, const Eigen::VectorXd& x, double step,
                               int& calls) {
  const Eigen::Index q = x.size();
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(static_cast<std::size_t>(2 * q + 1));
  pts.push_back(x);
  std::vector<double> h(static_cast<std::size_t>(q));
  for (Eigen::Index i = 0; i < q; ++i) {
    h[i] = step * std::max(1.0, std::abs(x[i]));
    Eigen::VectorXd p = x, m = x;
    p[i] += h[i];
    m[i] -= h[i];
    pts.push_back(p);
    pts.push_back(m);
  }
  const auto v = f(pts);
  calls += static_cast<int>(pts.size());
  GradientResult out{Eigen::VectorXd(q), v[0]};
  for (Eigen::Index i = 0; i < q; ++i) {
    const double fp = v[1 + 2 * i], fm = v[2 + 2 * i];
    if (std::isfinite(fp) && std::isfinite(fm)) {
      out.g[i] = (fp - fm) / (2.0 * h[i]);
    } else if (std::isfinite(fp) && std::isfinite(v[0])) {
      out.g[i] = (fp - v[0]) / h[i];
    } else if (std::isfinite(fm) && std::isfinite(v[0])) {
      out.g[i] = (v[0] - fm) / h[i];
    } else {
      out.g[i] = 0.0;
    }
  }
  return out;
}

double evalOne(const BatchObjective& f, const Eigen::VectorXd& x, int& calls) {
  ++calls;
  return f({x})[0];
}

}  // namespace

OptimizerResult maximizeBox(const BatchObjective& objective, const Eigen::VectorXd& x0,
                            const BoxBounds& bounds, const OptimizerOptions& opts) {
  const Eigen::Index q = x0.size();
  if (bounds.lower.size() != q || bounds.upper.size() != q)
    throw std::invalid_argument("bounds have the wrong dimension");
  if ((bounds.lower.array() > bounds.upper.array()).any())
    throw std::invalid_argument("lower bound exceeds upper bound");

  OptimizerResult res;
  Eigen::VectorXd x = bounds.project(x0);
  auto gr = centralGradient(objective, x, opts.fdStep, res.objectiveCalls);
  double f = gr.value;
  if (!std::isfinite(f)) {
    res.x = x;
    res.value = f;
    res.message = "objective not finite at the starting point";
    return res;
  }
  Eigen::VectorXd g = gr.g;
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(q, q);
  bool fresh = true;  // Hinv is an untrained (scaled) identity

  auto atBoundActive = [&](Eigen::Index i, const Eigen::VectorXd& xx, const Eigen::VectorXd& gg) {
    const double span = 1e-12 * std::max(1.0, std::abs(xx[i]));
    return (xx[i] <= bounds.lower[i] + span && gg[i] < 0.0) ||
           (xx[i] >= bounds.upper[i] - span && gg[i] > 0.0);
  };

  for (int iter = 0; iter < opts.maxIter; ++iter) {
    res.iterations = iter + 1;
    double pgNorm = 0.0;
    Eigen::VectorXd free = Eigen::VectorXd::Ones(q);
    for (Eigen::Index i = 0; i < q; ++i) {
      if (atBoundActive(i, x, g)) {
        free[i] = 0.0;
      } else {
        pgNorm = std::max(pgNorm, std::abs(g[i]) * std::max(1.0, std::abs(x[i])));
      }
    }
    if (pgNorm < opts.gradTol) {
      res.converged = true;
      res.message = "projected gradient below tolerance";
      res.trace.push_back(f);
      break;
    }

    const Eigen::VectorXd gFree = g.cwiseProduct(free);
    Eigen::VectorXd d = Hinv * gFree;
    d = d.cwiseProduct(free);
    if (d.dot(gFree) <= 0.0) {
      Hinv.setIdentity();
      fresh = true;
      d = gFree;
    }
    if (fresh) {
      const double scale = opts.maxStep / std::max(d.cwiseAbs().maxCoeff(), 1e-300);
      d *= std::min(1.0, scale);
    }
    const double dInf = d.cwiseAbs().maxCoeff();
    if (dInf > opts.maxStep) d *= opts.maxStep / dInf;

    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd xNew;
    double fNew = f;
    for (int ls = 0; ls < 40; ++ls) {
      xNew = bounds.project(x + t * d);
      const Eigen::VectorXd s = xNew - x;
      if (s.cwiseAbs().maxCoeff() < 1e-14) break;
      fNew = evalOne(objective, xNew, res.objectiveCalls);
      if (std::isfinite(fNew) && fNew >= f + 1e-4 * g.dot(s)) {
        accepted = true;
        break;
      }
      t *= (std::isfinite(fNew) ? 0.5 : 0.1);
    }

    if (!accepted) {
      if (!fresh) {
        Hinv.setIdentity();
        fresh = true;
        res.trace.push_back(f);
        continue;
      }
      res.converged = pgNorm < 1e3 * opts.gradTol;
      res.message = "line search made no progress";
      res.trace.push_back(f);
      break;
    }

    const auto grNew = centralGradient(objective, xNew, opts.fdStep, res.objectiveCalls);
    const Eigen::VectorXd s = xNew - x;
    const Eigen::VectorXd y = g - grNew.g;  // ascent: curvature pair with sign flipped
    const double sy = s.dot(y);
    const double fOld = f;
    x = xNew;
    f = std::isfinite(grNew.value) ? std::max(grNew.value, fNew) : fNew;
    g = grNew.g;
    if (sy > 1e-10 * s.norm() * y.norm()) {
      if (fresh) {
        Hinv = Eigen::MatrixXd::Identity(q, q) * (sy / y.squaredNorm());
        fresh = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(q, q);
      Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) +
             rho * s * s.transpose();
    }
    res.trace.push_back(f);
    if (std::abs(f - fOld) <= opts.relFTol * std::max(1.0, std::abs(f)) && iter > 2) {
      res.converged = true;
      res.message = "objective change below tolerance";
      break;
    }
  }
  if (res.message.empty()) res.message = "iteration limit reached";
  res.x = x;
  res.value = f;
  return res;
}

}  // namespace geoprof
