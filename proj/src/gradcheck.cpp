// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include "scan/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace scan::num {

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckReport finite_diff_check(const ScalarFn& f, const std::vector<Parameter*>& params, double h) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var loss = f(tape);
    tape.backward(loss);
  }
  auto eval = [&f] {
    Tape tape;
    return f(tape).scalar();
  };

  GradCheckReport report;
  for (Parameter* p : params) {
    double worst_here = 0.0;
    for (std::size_t k = 0; k < p->value.size(); ++k) {
      double& x = p->value.data()[k];
      const double saved = x;
      auto at = [&](double offset) {
        x = saved + offset;
        return eval();
      };
      const double wide = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
      const double narrow = (at(0.1 * h) - at(-0.1 * h)) / (0.2 * h);
      x = saved;
      const double analytic = p->grad.data()[k];
      const double err_wide = relative_error(analytic, wide);
      const double err_narrow = relative_error(analytic, narrow);
      const double numeric = err_wide <= err_narrow ? wide : narrow;
      const double err = std::min(err_wide, err_narrow);
      ++report.entries_checked;
      worst_here = std::max(worst_here, err);
      if (err > report.max_rel_err || report.entries_checked == 1) {
        report.max_rel_err = std::max(report.max_rel_err, err);
        report.worst = {p->name, k, analytic, numeric, err};
      }
    }
    report.per_param.emplace_back(p->name, worst_here);
  }
  return report;
}

}  // namespace scan::num
