#include "carbosound/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "carbosound/error.hpp"

namespace carbosound {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Problem {
  ModelFamily family;
  std::span<const double> x;
  std::span<const double> y;
};

// Row of df/dp at x.
void jacobian_row(ModelFamily f, std::span<const double> p, double x, double* row) {
  switch (f) {
    case ModelFamily::Linear:
      row[0] = x;
      row[1] = 1.0;
      return;
    case ModelFamily::ExpDecay: {
      const double e = std::exp(-p[1] * x);
      row[0] = e;
      row[1] = -p[0] * x * e;
      return;
    }
    case ModelFamily::ExpOffset: {
      const double e = std::exp(-p[2] * x);
      row[0] = 1.0;
      row[1] = -e;
      row[2] = p[1] * x * e;
      return;
    }
    case ModelFamily::TwoTerm: {
      const double e1 = std::exp(p[1] * x);
      const double e2 = std::exp(p[3] * x);
      row[0] = e1;
      row[1] = p[0] * x * e1;
      row[2] = e2;
      row[3] = p[2] * x * e2;
      return;
    }
    case ModelFamily::Saturation:
      row[0] = x * std::exp(-p[0] * x);
      return;
  }
}

double sum_sq_residual(const Problem& pr, std::span<const double> p) {
  double s = 0.0;
  for (std::size_t i = 0; i < pr.x.size(); ++i) {
    const double r = pr.y[i] - evaluate(pr.family, p, pr.x[i]);
    s += r * r;
  }
  return s;
}

double sum_sq_about_mean(std::span<const double> y) {
  const double m = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double s = 0.0;
  for (double v : y) s += (v - m) * (v - m);
  return s;
}

double sum_sq(std::span<const double> y) {
  double s = 0.0;
  for (double v : y) s += v * v;
  return s;
}

// Residuals this small are rounding noise; gradient direction means nothing.
bool at_roundoff(double ss, std::span<const double> y) {
  return ss <= 1e-26 * std::max(sum_sq(y), std::numeric_limits<double>::min());
}

// Cosine between the residual vector and the Jacobian's column space, i.e.
// sqrt of the fraction of SS a full Gauss-Newton step could still remove.
double gradient_cosine(const Eigen::MatrixXd& jac, const Eigen::VectorXd& res) {
  const double rn = res.norm();
  if (rn == 0.0) return 0.0;
  Eigen::MatrixXd scaled = jac;
  for (Eigen::Index j = 0; j < jac.cols(); ++j) {
    const double cn = jac.col(j).norm();
    if (cn > 0.0) scaled.col(j) /= cn;
  }
  const Eigen::VectorXd coef = scaled.colPivHouseholderQr().solve(res);
  return (scaled * coef).norm() / rn;
}

// Stationary when a Gauss-Newton step could remove less than 1e-10 of SS, or
// when the residual's projection is within the rounding floor of evaluating
// y - f (a few ulps of |y| per point).
bool stationary(const Eigen::MatrixXd& jac, const Eigen::VectorXd& res, std::span<const double> y) {
  const double rn = res.norm();
  if (rn == 0.0) return true;
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::sqrt(sum_sq(y)) / rn;
  return gradient_cosine(jac, res) < std::max(1e-5, floor);
}

struct LmOutcome {
  std::vector<double> params;
  double ss{0.0};
  std::size_t n_iter{0};
  bool converged{false};
  std::vector<double> trace;
};

LmOutcome levenberg_marquardt(const Problem& pr, std::vector<double> p, const FitOptions& opts) {
  const std::size_t n = pr.x.size();
  const std::size_t m = p.size();
  LmOutcome out;
  double ss = sum_sq_residual(pr, p);
  if (!std::isfinite(ss)) throw Error(ErrorCode::FitDiverged, "initial guess gives non-finite residuals");
  out.trace.push_back(ss);

  Eigen::MatrixXd jac(n, m);
  Eigen::VectorXd res(n);
  std::vector<double> row(m);
  double lambda = 1e-3;
  bool fresh = true;
  Eigen::MatrixXd jtj;
  Eigen::VectorXd grad;

  while (out.n_iter < opts.max_iter) {
    if (ss == 0.0 || at_roundoff(ss, pr.y)) {
      out.converged = true;
      break;
    }
    if (fresh) {
      for (std::size_t i = 0; i < n; ++i) {
        jacobian_row(pr.family, p, pr.x[i], row.data());
        for (std::size_t j = 0; j < m; ++j) jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
        res(static_cast<Eigen::Index>(i)) = pr.y[i] - evaluate(pr.family, p, pr.x[i]);
      }
      jtj = jac.transpose() * jac;
      grad = jac.transpose() * res;
      fresh = false;
    }
    ++out.n_iter;

    Eigen::VectorXd diag = jtj.diagonal();
    const double dmax = diag.maxCoeff();
    for (Eigen::Index j = 0; j < diag.size(); ++j) diag(j) = std::max(diag(j), 1e-15 * std::max(dmax, 1e-300));
    Eigen::MatrixXd a = jtj;
    a.diagonal() += lambda * diag;
    const Eigen::VectorXd step = a.ldlt().solve(grad);

    std::vector<double> trial(m);
    bool finite = step.allFinite();
    for (std::size_t j = 0; j < m && finite; ++j) {
      trial[j] = p[j] + step(static_cast<Eigen::Index>(j));
      finite = std::isfinite(trial[j]);
    }
    const double ss_new = finite ? sum_sq_residual(pr, trial) : kNaN;

    if (std::isfinite(ss_new) && ss_new < ss) {
      double pnorm = 0.0;
      for (double v : p) pnorm += v * v;
      const double rel_step = step.norm() / (std::sqrt(pnorm) + 1e-300);
      const double rel_ss = (ss - ss_new) / ss;
      p = std::move(trial);
      ss = ss_new;
      out.trace.push_back(ss);
      fresh = true;
      lambda = std::max(lambda * 0.1, 1e-15);
      if (rel_step < opts.step_tol || rel_ss < opts.ss_tol) {
        // Only trust the stopping rule at a stationary point.
        for (std::size_t i = 0; i < n; ++i) {
          jacobian_row(pr.family, p, pr.x[i], row.data());
          for (std::size_t j = 0; j < m; ++j) jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
          res(static_cast<Eigen::Index>(i)) = pr.y[i] - evaluate(pr.family, p, pr.x[i]);
        }
        if (at_roundoff(ss, pr.y) || stationary(jac, res, pr.y)) {
          out.converged = true;
          break;
        }
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e20) {
        // No descent direction left at working precision.
        out.converged = at_roundoff(ss, pr.y) || stationary(jac, res, pr.y);
        break;
      }
    }
  }
  out.params = std::move(p);
  out.ss = ss;
  return out;
}

// y ~ A*exp(rate*x) from a log-linear fit over points sharing the majority sign.
bool log_linear_exp(std::span<const double> x, std::span<const double> y, double& amp, double& rate) {
  double total = 0.0;
  for (double v : y) total += v;
  const double sign = total < 0.0 ? -1.0 : 1.0;
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (sign * y[i] > 0.0) {
      lx.push_back(x[i]);
      ly.push_back(std::log(sign * y[i]));
    }
  }
  if (lx.size() < 2 || std::all_of(lx.begin(), lx.end(), [&](double v) { return v == lx.front(); })) return false;
  const FitResult lf = linear_fit(lx, ly);
  rate = lf.params[0];
  amp = sign * std::exp(lf.params[1]);
  return std::isfinite(rate) && std::isfinite(amp);
}

std::vector<std::vector<double>> default_inits(ModelFamily family, std::span<const double> x,
                                               std::span<const double> y) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> xs(n);
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }
  const double xspan = std::max(xs.back() - xs.front(), 1e-300);
  const auto [ymin_it, ymax_it] = std::minmax_element(ys.begin(), ys.end());
  const double ymin = *ymin_it;
  const double ymax = *ymax_it;

  switch (family) {
    case ModelFamily::Linear:
      return {};
    case ModelFamily::ExpDecay: {
      double a = ys.front();
      double rate = -1.0 / xspan;
      log_linear_exp(xs, ys, a, rate);
      return {{a, -rate}};
    }
    case ModelFamily::Saturation: {
      double num = 0.0;
      double den = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (ys[i] > 0.0 && ys[i] < 1.0) {
          num += xs[i] * -std::log1p(-ys[i]);
          den += xs[i] * xs[i];
        }
      }
      const double mu = (num > 0.0 && den > 0.0) ? num / den : 1.0 / xspan;
      return {{mu}};
    }
    case ModelFamily::ExpOffset: {
      const bool rising = ys.back() >= ys.front();
      const double range = ymax - ymin;
      const double asym = rising ? ymax + 1e-3 * range : ymin - 1e-3 * range;
      const double b_amp = asym - ys.front();
      std::vector<double> lx;
      std::vector<double> ly;
      for (std::size_t i = 0; i < n; ++i) {
        const double gap = rising ? asym - ys[i] : ys[i] - asym;
        if (gap > 0.01 * std::abs(b_amp)) {
          lx.push_back(xs[i]);
          ly.push_back(std::log(gap));
        }
      }
      double c = 1.0 / xspan;
      if (lx.size() >= 2 && lx.front() != lx.back()) {
        const double slope = linear_fit(lx, ly).params[0];
        if (slope < 0.0 && std::isfinite(slope)) c = -slope;
      }
      return {{asym, b_amp, c}};
    }
    case ModelFamily::TwoTerm: {
      std::vector<std::vector<double>> inits;
      // Peeling: the tail fixes the slow term, the early residual the fast one.
      const std::size_t half = std::max<std::size_t>(2, n / 2);
      std::span<const double> xt(xs.data() + (n - half), half);
      std::span<const double> yt(ys.data() + (n - half), half);
      double c_amp = 0.0;
      double d_rate = 0.0;
      if (log_linear_exp(xt, yt, c_amp, d_rate)) {
        std::vector<double> resid(n);
        for (std::size_t i = 0; i < n; ++i) resid[i] = ys[i] - c_amp * std::exp(d_rate * xs[i]);
        const std::size_t head = n - half + 1;
        double a_amp = 0.0;
        double b_rate = 0.0;
        if (log_linear_exp(std::span<const double>(xs.data(), head), std::span<const double>(resid.data(), head),
                           a_amp, b_rate)) {
          inits.push_back({a_amp, b_rate, c_amp, d_rate});
        }
      }
      // Global single exponential plus a refit of what it leaves behind.
      double a1 = ys.front();
      double r1 = -1.0 / xspan;
      if (log_linear_exp(xs, ys, a1, r1)) {
        std::vector<double> resid(n);
        for (std::size_t i = 0; i < n; ++i) resid[i] = ys[i] - a1 * std::exp(r1 * xs[i]);
        double a2 = 0.0;
        double r2 = 0.0;
        if (log_linear_exp(xs, resid, a2, r2) && r2 != r1) {
          inits.push_back({a1, r1, a2, r2});
        } else {
          inits.push_back({a1, r1, 0.1 * a1, 0.1 * r1});
        }
      }
      if (inits.empty()) inits.push_back({ys.front(), -1.0 / xspan, 0.1 * ys.front(), -0.1 / xspan});
      return inits;
    }
  }
  return {};
}

void finish(FitResult& fr, std::span<const double> x, std::span<const double> y) {
  std::vector<double> yhat(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) yhat[i] = fr.predict(x[i]);
  fr.r_squared = sum_sq_about_mean(y) > 0.0 ? r_squared(y, yhat) : kNaN;
  fr.pearson_r = pearson(y, yhat);
}

}  // namespace

std::string_view to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::Linear: return "linear";
    case ModelFamily::ExpDecay: return "exp_decay";
    case ModelFamily::ExpOffset: return "exp_offset";
    case ModelFamily::TwoTerm: return "two_term";
    case ModelFamily::Saturation: return "saturation";
  }
  return "unknown";
}

ModelFamily parse_family(std::string_view name) {
  for (ModelFamily f : {ModelFamily::Linear, ModelFamily::ExpDecay, ModelFamily::ExpOffset, ModelFamily::TwoTerm,
                        ModelFamily::Saturation}) {
    if (name == to_string(f)) return f;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model family '" + std::string(name) + "'");
}

std::size_t param_count(ModelFamily f) {
  switch (f) {
    case ModelFamily::Linear: return 2;
    case ModelFamily::ExpDecay: return 2;
    case ModelFamily::ExpOffset: return 3;
    case ModelFamily::TwoTerm: return 4;
    case ModelFamily::Saturation: return 1;
  }
  return 0;
}

double evaluate(ModelFamily f, std::span<const double> p, double x) {
  switch (f) {
    case ModelFamily::Linear: return p[0] * x + p[1];
    case ModelFamily::ExpDecay: return p[0] * std::exp(-p[1] * x);
    case ModelFamily::ExpOffset: return p[0] - p[1] * std::exp(-p[2] * x);
    case ModelFamily::TwoTerm: return p[0] * std::exp(p[1] * x) + p[2] * std::exp(p[3] * x);
    case ModelFamily::Saturation: return 1.0 - std::exp(-p[0] * x);
  }
  return kNaN;
}

FitResult linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "x and y differ in length");
  if (x.size() < 2) throw Error(ErrorCode::DegenerateX, "need at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::DegenerateX, "all x values are equal");
  FitResult fr;
  fr.family = ModelFamily::Linear;
  const double slope = sxy / sxx;
  fr.params = {slope, my - slope * mx};
  fr.converged = true;
  fr.degenerate = syy == 0.0;
  fr.pearson_r = syy == 0.0 ? 0.0 : sxy / std::sqrt(sxx * syy);
  if (syy == 0.0) {
    fr.r_squared = kNaN;
  } else {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - fr.predict(x[i]);
      ss_res += r * r;
    }
    fr.r_squared = 1.0 - ss_res / syy;
  }
  return fr;
}

FitResult fit(ModelFamily family, std::span<const double> x, std::span<const double> y,
              std::optional<std::vector<double>> init, const FitOptions& opts) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "x and y differ in length");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw Error(ErrorCode::DegenerateData, "non-finite data");
  }
  if (family == ModelFamily::Linear) return linear_fit(x, y);
  const std::size_t m = param_count(family);
  if (x.size() < m + 1) {
    throw Error(ErrorCode::DegenerateData,
                "need at least " + std::to_string(m + 1) + " points for " + std::string(to_string(family)));
  }
  if (init && init->size() != m) throw Error(ErrorCode::InvalidArgument, "initial guess has wrong size");
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); })) {
    throw Error(ErrorCode::DegenerateData, "all x values are equal");
  }

  const bool constant_y = std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); });
  if (constant_y && family != ModelFamily::Saturation) {
    FitResult fr;
    fr.family = family;
    fr.params.assign(m, 0.0);
    fr.params[0] = y.front();
    fr.converged = true;
    fr.degenerate = true;
    fr.ss_trace = {0.0};
    finish(fr, x, y);
    return fr;
  }

  Problem pr{family, x, y};
  std::vector<std::vector<double>> starts;
  if (init) {
    starts.push_back(*init);
  } else {
    starts = default_inits(family, x, y);
  }
  if (opts.multistart > 0 && !starts.empty()) {
    std::mt19937_64 rng(opts.multistart_seed);
    const std::vector<double> base = starts.front();
    for (std::size_t k = 0; k < opts.multistart; ++k) {
      std::vector<double> p = base;
      for (double& v : p) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        v *= std::exp2(2.0 * u - 1.0);
      }
      starts.push_back(std::move(p));
    }
  }

  std::optional<LmOutcome> best;
  std::string last_error = "no usable starting point";
  for (const auto& s : starts) {
    try {
      LmOutcome o = levenberg_marquardt(pr, s, opts);
      if (!o.converged) {
        last_error = "no convergence after " + std::to_string(o.n_iter) + " iterations";
        continue;
      }
      if (!best || o.ss < best->ss) best = std::move(o);
    } catch (const Error& e) {
      last_error = e.context();
    }
  }
  if (!best) throw Error(ErrorCode::FitDiverged, std::string(to_string(family)) + ": " + last_error);

  FitResult fr;
  fr.family = family;
  fr.params = std::move(best->params);
  fr.n_iter = best->n_iter;
  fr.converged = true;
  fr.ss_trace = std::move(best->trace);
  // The two terms are interchangeable; report the faster one first.
  if (family == ModelFamily::TwoTerm && fr.params[3] < fr.params[1]) {
    std::swap(fr.params[0], fr.params[2]);
    std::swap(fr.params[1], fr.params[3]);
  }
  finish(fr, x, y);
  const double scale = std::sqrt(sum_sq(y) / static_cast<double>(y.size()));
  switch (family) {
    case ModelFamily::ExpDecay:
      fr.degenerate = std::abs(fr.params[0]) <= 1e-12 * scale;
      break;
    case ModelFamily::ExpOffset:
      fr.degenerate = std::abs(fr.params[1]) <= 1e-9 * std::max(std::abs(fr.params[0]), scale);
      break;
    case ModelFamily::TwoTerm:
      fr.degenerate = std::abs(fr.params[0]) <= 1e-12 * scale || std::abs(fr.params[2]) <= 1e-12 * scale;
      break;
    default:
      break;
  }
  return fr;
}

double r_squared(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size() || y.size() < 2) throw Error(ErrorCode::InvalidArgument, "need two equal-length series");
  const double ss_tot = sum_sq_about_mean(y);
  if (ss_tot == 0.0) throw Error(ErrorCode::ZeroVariance, "observed values have zero variance");
  double ss_res = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) ss_res += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return 1.0 - ss_res / ss_tot;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw Error(ErrorCode::InvalidArgument, "need two equal-length series");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double correlation_p_value(double r, std::size_t n) {
  if (n < 3 || !std::isfinite(r)) return kNaN;
  const double ar = std::abs(r);
  if (ar >= 1.0) return 0.0;
  const double dof = static_cast<double>(n - 2);
  const double t = ar * std::sqrt(dof / (1.0 - r * r));
  const boost::math::students_t dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, t));
}

std::vector<double> studentized_residuals(const FitResult& fr, std::span<const double> x,
                                          std::span<const double> y) {
  const std::size_t n = x.size();
  const std::size_t m = fr.params.size();
  if (n <= m) return {};
  Eigen::MatrixXd jac(n, m);
  Eigen::VectorXd res(n);
  std::vector<double> row(m);
  for (std::size_t i = 0; i < n; ++i) {
    jacobian_row(fr.family, fr.params, x[i], row.data());
    for (std::size_t j = 0; j < m; ++j) jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    res(static_cast<Eigen::Index>(i)) = y[i] - fr.predict(x[i]);
  }
  const double ss = res.squaredNorm();
  if (at_roundoff(ss, y)) return {};
  if (n <= m + 1) return {};
  const double dof = static_cast<double>(n - m);
  const Eigen::MatrixXd hat = jac * (jac.transpose() * jac).completeOrthogonalDecomposition().pseudoInverse() *
                              jac.transpose();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = std::min(hat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)), 1.0 - 1e-12);
    const double r = res(static_cast<Eigen::Index>(i));
    // Residual variance with point i deleted.
    const double s2_del = std::max((ss - r * r / (1.0 - h)) / (dof - 1.0), 0.0);
    out[i] = s2_del > 0.0 ? r / std::sqrt(s2_del * (1.0 - h)) : std::copysign(std::numeric_limits<double>::infinity(), r);
  }
  return out;
}

std::size_t dominant_term(const FitResult& fr) {
  if (fr.family != ModelFamily::TwoTerm) throw Error(ErrorCode::InvalidArgument, "dominant term needs a two_term fit");
  const double first = std::abs(fr.params[0] * fr.params[1]);
  const double second = std::abs(fr.params[2] * fr.params[3]);
  return second > first ? 1 : 0;
}

double dominant_rate(const FitResult& fr) { return fr.params[2 * dominant_term(fr) + 1]; }

}  // namespace carbosound
