// Derivative-free minimization through GSL's Nelder-Mead simplex.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "qinstr/operator.hpp"

namespace qinstr {

struct SimplexOptions {
  double initial_step = 0.1;
  double size_tolerance = 1e-9;
  int max_iterations = 4000;
  int max_restarts = 6;
  int stall_iterations = 200;  // best value unchanged this long counts as converged
};

struct SimplexResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

// Restarts from the best point until a restart no longer improves the value.
inline SimplexResult minimize_simplex(const std::function<double(const std::vector<double>&)>& f,
                                      std::vector<double> x0, const SimplexOptions& opt = {}) {
  const size_t n = x0.size();
  SimplexResult best{x0, f(x0), 0, n == 0};
  if (n == 0) return best;

  struct Ctx {
    const std::function<double(const std::vector<double>&)>* f;
    std::vector<double> buf;
  } ctx{&f, std::vector<double>(n)};
  gsl_multimin_function fn;
  fn.n = n;
  fn.params = &ctx;
  fn.f = [](const gsl_vector* v, void* p) -> double {
    auto* c = static_cast<Ctx*>(p);
    for (size_t i = 0; i < v->size; ++i) c->buf[i] = gsl_vector_get(v, i);
    double r = (*c->f)(c->buf);
    return std::isfinite(r) ? r : std::numeric_limits<double>::max();
  };

  gsl_error_handler_t* old = gsl_set_error_handler_off();
  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* step = gsl_vector_alloc(n);
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);

  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    for (size_t i = 0; i < n; ++i) gsl_vector_set(x, i, best.x[i]);
    gsl_vector_set_all(step, restart == 0 ? opt.initial_step : opt.initial_step * 0.25);
    gsl_multimin_fminimizer_set(s, &fn, x, step);
    int status = GSL_CONTINUE, it = 0, stall = 0;
    double last = s->fval;
    while (status == GSL_CONTINUE && it < opt.max_iterations) {
      ++it;
      if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
      status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), opt.size_tolerance);
      stall = s->fval < last ? 0 : stall + 1;
      last = std::min(last, s->fval);
      if (status == GSL_CONTINUE && stall >= opt.stall_iterations) status = GSL_SUCCESS;
    }
    best.iterations += it;
    const double v = s->fval;
    const bool improved = v < best.value - 1e-14 * std::max(1.0, std::abs(best.value));
    if (v <= best.value) {
      for (size_t i = 0; i < n; ++i) best.x[i] = gsl_vector_get(s->x, i);
      best.value = v;
    }
    best.converged = status == GSL_SUCCESS;
    if (!improved && best.converged) break;
  }

  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(step);
  gsl_vector_free(x);
  gsl_set_error_handler(old);
  return best;
}

}  // namespace qinstr
