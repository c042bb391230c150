#include "mpemba/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mpemba/kernels.hpp"

namespace mpemba::ode {

namespace {

// Dormand–Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b(5th) − b(4th)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

void combine(CMatrix& out, const CMatrix& y, double h,
             std::initializer_list<std::pair<double, const CMatrix*>> terms) {
  out = y;
  for (const auto& [c, k] : terms)
    if (c != 0.0) out.axpy(h * c, *k);
}

double error_norm(const CMatrix& err, const CMatrix& y0, const CMatrix& y1, double atol,
                  double rtol) {
  const std::size_t n = err.size();
  const double s = kernels::active().scaled_error_sq(n, err.data().data(), y0.data().data(),
                                                     y1.data().data(), atol, rtol);
  return std::sqrt(s / static_cast<double>(2 * n));
}

}  // namespace

Dopri5::Dopri5(Rhs rhs, AdaptiveOptions options) : rhs_(std::move(rhs)), opt_(options) {
  if (!(opt_.rtol > 0.0) || !(opt_.atol > 0.0))
    throw Error(Errc::InvalidArgument, "integrator tolerances must be positive");
}

void Dopri5::eval(double t, const CMatrix& y, CMatrix& out) {
  rhs_(t, y, out);
  ++stats_.rhs_evals;
}

// Hairer–Nørsett–Wanner starting-step heuristic.
double Dopri5::initial_step(double t, const CMatrix& y, const CMatrix& f0, double span) {
  const double d0 = error_norm(y, y, y, opt_.atol, opt_.rtol);
  const double d1 = error_norm(f0, y, y, opt_.atol, opt_.rtol);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span);
  CMatrix y1 = y;
  y1.axpy(h0, f0);
  CMatrix f1;
  eval(t + h0, y1, f1);
  f1 -= f0;
  const double d2 = error_norm(f1, y, y, opt_.atol, opt_.rtol) / h0;
  const double dm = std::max(d1, d2);
  const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
  return std::min({100.0 * h0, h1, span});
}

void Dopri5::advance(double& t, CMatrix& y, double t_end, const StepHook& hook) {
  if (t_end < t) throw Error(Errc::InvalidArgument, "integration must move forward in time");
  if (t_end == t) return;

  if (!have_fsal_) {
    eval(t, y, k_[0]);
    have_fsal_ = true;
  }
  if (h_ <= 0.0) h_ = opt_.h_initial > 0.0 ? opt_.h_initial : initial_step(t, y, k_[0], t_end - t);

  constexpr double safety = 0.9, grow_max = 5.0, shrink_min = 0.2;
  bool last_rejected = false;
  while (t < t_end) {
    if (stats_.accepted + stats_.rejected >= opt_.max_steps)
      throw Error(Errc::StepSizeUnderflow, "step budget exhausted before reaching end time");
    double h = h_;
    if (opt_.h_max > 0.0) h = std::min(h, opt_.h_max);
    bool clipped = false;
    if (t + h >= t_end || t + 1.01 * h >= t_end) {
      h = t_end - t;
      clipped = true;
    }
    if (h < opt_.h_min) {
      std::ostringstream os;
      os << "step size " << h << " below minimum " << opt_.h_min << " at t = " << t;
      throw Error(Errc::StepSizeUnderflow, os.str());
    }

    combine(stage_, y, h, {{a21, &k_[0]}});
    eval(t + c2 * h, stage_, k_[1]);
    combine(stage_, y, h, {{a31, &k_[0]}, {a32, &k_[1]}});
    eval(t + c3 * h, stage_, k_[2]);
    combine(stage_, y, h, {{a41, &k_[0]}, {a42, &k_[1]}, {a43, &k_[2]}});
    eval(t + c4 * h, stage_, k_[3]);
    combine(stage_, y, h, {{a51, &k_[0]}, {a52, &k_[1]}, {a53, &k_[2]}, {a54, &k_[3]}});
    eval(t + c5 * h, stage_, k_[4]);
    combine(stage_, y, h,
            {{a61, &k_[0]}, {a62, &k_[1]}, {a63, &k_[2]}, {a64, &k_[3]}, {a65, &k_[4]}});
    eval(t + h, stage_, k_[5]);
    combine(y_new_, y, h, {{b1, &k_[0]}, {b3, &k_[2]}, {b4, &k_[3]}, {b5, &k_[4]}, {b6, &k_[5]}});
    eval(t + h, y_new_, k_[6]);

    err_ = CMatrix(y.rows(), y.cols());
    for (const auto& [c, k] : {std::pair{e1, &k_[0]}, {e3, &k_[2]}, {e4, &k_[3]},
                               {e5, &k_[4]}, {e6, &k_[5]}, {e7, &k_[6]}})
      err_.axpy(h * c, *k);
    const double en = error_norm(err_, y, y_new_, opt_.atol, opt_.rtol);

    if (!(en <= 1.0)) {
      ++stats_.rejected;
      const double fac = std::isfinite(en)
                             ? std::max(shrink_min, safety * std::pow(en, -0.2))
                             : shrink_min;
      h_ = h * (last_rejected ? std::min(fac, 0.5) : fac);
      last_rejected = true;
      continue;
    }

    ++stats_.accepted;
    stats_.smallest_step = stats_.accepted == 1 ? h : std::min(stats_.smallest_step, h);
    stats_.largest_step = std::max(stats_.largest_step, h);
    t = clipped ? t_end : t + h;
    std::swap(y, y_new_);
    std::swap(k_[0], k_[6]);
    if (hook && hook(t, y)) eval(t, y, k_[0]);

    double fac = en == 0.0 ? grow_max : safety * std::pow(en, -0.2);
    fac = std::clamp(fac, shrink_min, grow_max);
    if (last_rejected) fac = std::min(fac, 1.0);
    // A clipped step says nothing about the natural step; keep the old one.
    if (!clipped || h >= h_) h_ = h * fac;
    last_rejected = false;
  }
}

}  // namespace mpemba::ode
