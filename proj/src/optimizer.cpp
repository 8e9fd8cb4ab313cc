#include "spred/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <vector>

namespace spred {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct GradientFailure {
  Index coordinate;
};

// Counts evaluations, enforces the budget and remembers the best point.
class Evaluator {
 public:
  Evaluator(const Objective& f, Index max_evals) : f_(f), max_(max_evals) {}

  bool exhausted() const { return evals_ >= max_; }
  Index remaining() const { return max_ - evals_; }
  Index evals() const { return evals_; }

  double operator()(const Vector& x) {
    ++evals_;
    const double v = f_(x);
    const double value = std::isfinite(v) ? v : kInf;
    if (value < best_f_) {
      best_f_ = value;
      best_x_ = x;
    }
    return value;
  }

  void seed(const Vector& x, double f) {
    best_x_ = x;
    best_f_ = f;
  }
  const Vector& best_x() const { return best_x_; }
  double best_f() const { return best_f_; }

 private:
  const Objective& f_;
  Index max_;
  Index evals_ = 0;
  Vector best_x_;
  double best_f_ = kInf;
};

double scale(double v) { return std::max(1.0, std::abs(v)); }

void nelder_mead(Evaluator& eval, const OptimizeOptions& opts,
                 OptimizeResult& out) {
  const Index d = eval.best_x().size();
  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
  out.reason = StopReason::max_evals;
  out.converged = false;

  for (int attempt = 0; attempt <= opts.restarts; ++attempt) {
    const Vector start = eval.best_x();
    const double start_f = eval.best_f();
    std::vector<Vector> pts(static_cast<std::size_t>(d + 1), start);
    std::vector<double> vals(static_cast<std::size_t>(d + 1), start_f);
    Index built = 1;
    for (Index i = 0; i < d && !eval.exhausted(); ++i, ++built) {
      pts[i + 1][i] += opts.initial_step * scale(start[i]);
      vals[i + 1] = eval(pts[i + 1]);
    }
    if (built < d + 1) return;

    std::vector<std::size_t> order(pts.size());
    bool converged = false;
    while (true) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) {
                         return vals[a] < vals[b];
                       });
      const std::size_t best = order.front();
      const std::size_t worst = order.back();
      const std::size_t second = order[order.size() - 2];

      double x_spread = 0.0;
      for (const auto& p : pts)
        x_spread = std::max(x_spread, (p - pts[best]).lpNorm<Eigen::Infinity>());
      const double f_spread = vals[worst] - vals[best];
      if (std::isfinite(f_spread) &&
          f_spread <= opts.f_tol * scale(vals[best]) &&
          x_spread <= opts.x_tol * scale(pts[best].lpNorm<Eigen::Infinity>())) {
        converged = true;
        break;
      }
      if (eval.exhausted()) break;

      Vector centroid = Vector::Zero(d);
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (i != worst) centroid += pts[i];
      centroid /= static_cast<double>(d);

      const Vector xr = centroid + alpha * (centroid - pts[worst]);
      const double fr = eval(xr);
      if (fr < vals[best]) {
        if (eval.exhausted()) {
          pts[worst] = xr;
          vals[worst] = fr;
          continue;
        }
        const Vector xe = centroid + gamma * (xr - centroid);
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
      if (eval.exhausted()) continue;
      if (fr < vals[worst]) {
        const Vector xc = centroid + rho * (xr - centroid);
        const double fc = eval(xc);
        if (fc <= fr) {
          pts[worst] = xc;
          vals[worst] = fc;
          continue;
        }
      } else {
        const Vector xc = centroid + rho * (pts[worst] - centroid);
        const double fc = eval(xc);
        if (fc < vals[worst]) {
          pts[worst] = xc;
          vals[worst] = fc;
          continue;
        }
      }
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i == best || eval.exhausted()) continue;
        pts[i] = pts[best] + sigma * (pts[i] - pts[best]);
        vals[i] = eval(pts[i]);
      }
    }

    if (!converged) return;
    out.converged = true;
    out.reason = StopReason::f_tol;
    if (attempt > 0 &&
        start_f - eval.best_f() <= opts.f_tol * scale(eval.best_f()))
      return;
  }
}

Vector relative_fd_gradient(Evaluator& eval, const Vector& x, double step) {
  Vector g(x.size());
  Vector probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double h = step * scale(x[i]);
    probe[i] = x[i] + h;
    const double fp = eval(probe);
    probe[i] = x[i] - h;
    const double fm = eval(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) throw GradientFailure{i};
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

void quasi_newton(Evaluator& eval, const OptimizeOptions& opts,
                  OptimizeResult& out) {
  const Index d = eval.best_x().size();
  Vector x = eval.best_x();
  double f = eval.best_f();
  out.converged = false;

  auto gradient = [&](const Vector& at, Vector& g) -> bool {
    if (eval.remaining() < 2 * d) {
      out.reason = StopReason::max_evals;
      return false;
    }
    try {
      g = relative_fd_gradient(eval, at, opts.fd_step);
    } catch (const GradientFailure&) {
      out.reason = StopReason::gradient_failed;
      return false;
    }
    return true;
  };

  Vector g;
  if (!gradient(x, g)) return;
  Matrix H = Matrix::Identity(d, d);
  bool scaled = false;

  while (true) {
    if (g.lpNorm<Eigen::Infinity>() <= opts.g_tol) {
      out.converged = true;
      out.reason = StopReason::gradient;
      return;
    }
    Vector p = -H * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      H.setIdentity();
      p = -g;
      slope = -g.squaredNorm();
    }

    bool accepted = false;
    Vector xn;
    double fn = kInf;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double t = 1.0;
      for (int i = 0; i < 60; ++i) {
        if (eval.exhausted()) {
          out.reason = StopReason::max_evals;
          return;
        }
        xn = x + t * p;
        fn = eval(xn);
        if (fn <= f + 1e-4 * t * slope) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) {
        // Retry once along steepest descent with a fresh metric.
        H.setIdentity();
        scaled = false;
        p = -g;
        slope = -g.squaredNorm();
      }
    }
    if (!accepted) {
      out.reason = StopReason::line_search;
      return;
    }

    const Vector s = xn - x;
    const double decrease = f - fn;
    x = xn;
    f = fn;
    if (decrease <= opts.f_tol * scale(f)) {
      out.converged = true;
      out.reason = StopReason::f_tol;
      return;
    }
    if (s.lpNorm<Eigen::Infinity>() <=
        opts.x_tol * scale(x.lpNorm<Eigen::Infinity>())) {
      out.converged = true;
      out.reason = StopReason::x_tol;
      return;
    }

    Vector gn;
    if (!gradient(x, gn)) return;
    const Vector y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        H = Matrix::Identity(d, d) * (sy / y.squaredNorm());
        scaled = true;
      }
      const Vector Hy = H * y;
      const double yHy = y.dot(Hy);
      H.noalias() += ((sy + yHy) / (sy * sy)) * (s * s.transpose());
      H.noalias() -= (Hy * s.transpose() + s * Hy.transpose()) / sy;
    }
    g = gn;
  }
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::automatic: return "automatic";
    case Method::simplex: return "simplex";
    case Method::quasi_newton_fd: return "quasi_newton_fd";
  }
  return "?";
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::f_tol: return "f_tol";
    case StopReason::x_tol: return "x_tol";
    case StopReason::gradient: return "gradient";
    case StopReason::max_evals: return "max_evals";
    case StopReason::line_search: return "line_search";
    case StopReason::gradient_failed: return "gradient_failed";
  }
  return "?";
}

std::size_t default_memory_budget() {
  const std::size_t mib = 1024 * 1024;
  if (const char* env = std::getenv("SPRED_MEMORY_BUDGET_MB")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && v > 0.0) return static_cast<std::size_t>(v * mib);
  }
  return 64 * mib;
}

void OptimizeOptions::validate() const {
  if (max_evals < 1) throw ConfigError("max_evals must be >= 1");
  if (!(x_tol > 0.0) || !(f_tol > 0.0) || !(g_tol > 0.0))
    throw ConfigError("optimizer tolerances must be > 0");
  if (!(fd_step > 0.0)) throw ConfigError("fd_step must be > 0");
  if (!(initial_step > 0.0)) throw ConfigError("initial_step must be > 0");
  if (restarts < 0) throw ConfigError("restarts must be >= 0");
}

Method resolve_method(Index dim, const OptimizeOptions& opts) {
  if (opts.method != Method::automatic) return opts.method;
  return dim <= opts.simplex_max_dim ? Method::simplex
                                     : Method::quasi_newton_fd;
}

std::size_t estimate_memory(Index dim) {
  const auto d = static_cast<std::size_t>(dim);
  return d * d * sizeof(double);
}

OptimizeResult minimize(const Objective& f, const Vector& x0,
                        const OptimizeOptions& opts) {
  opts.validate();
  const std::size_t need = estimate_memory(x0.size());
  if (need > opts.memory_budget) throw MemoryBudgetError(need, opts.memory_budget);

  OptimizeResult out;
  out.method = resolve_method(x0.size(), opts);
  Evaluator eval(f, opts.max_evals);
  const double f0 = eval(x0);
  if (!std::isfinite(f0))
    throw DomainError("objective is not finite at the starting point");
  eval.seed(x0, f0);

  if (x0.size() > 0) {
    if (out.method == Method::simplex)
      nelder_mead(eval, opts, out);
    else
      quasi_newton(eval, opts, out);
  } else {
    out.converged = true;
    out.reason = StopReason::x_tol;
  }
  out.x_best = eval.best_x();
  out.f_best = eval.best_f();
  out.evals = eval.evals();
  return out;
}

Vector fd_gradient(const Objective& f, const Vector& x, double step) {
  if (!(step > 0.0)) throw DomainError("finite-difference step must be > 0");
  Vector g(x.size());
  Vector probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double fp = f(probe);
    probe[i] = x[i] - step;
    const double fm = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw DomainError("non-finite objective sample at coordinate " +
                        std::to_string(i));
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

}  // namespace spred
