#pragma once

// Damped (Levenberg-Marquardt style) minimizer for objectives that are sums of
// Euclidean norms. Each norm term ||r|| is replaced by the quadratic surrogate
// w/2 ||r||^2 with w = 1 / max(||r||, eps); the surrogate shares the true
// gradient, so a Gauss-Newton step on it is a descent direction. Steps are
// accepted only if the true objective decreases.

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace poselift::detail {

struct IrlsSettings {
  int max_iterations = 200;
  double relative_tolerance = 1e-10;
  double initial_damping = 1e-3;
  double max_damping = 1e16;
};

template <typename State>
struct IrlsOutcome {
  State state;
  double value;
  std::vector<double> trace;  // objective after each accepted step, trace[0] = initial
  int iterations = 0;
};

// Model must provide:
//   double value(const State&) const;   // +inf when infeasible
//   void normal_equations(const State&, Eigen::MatrixXd& h, Eigen::VectorXd& g) const;
//   State step(const State&, const Eigen::VectorXd& delta) const;
template <typename State, typename Model>
IrlsOutcome<State> damped_irls(State start, double start_value, const Model& model,
                               const IrlsSettings& settings) {
  IrlsOutcome<State> out{std::move(start), start_value, {start_value}, 0};
  double damping = settings.initial_damping;
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  for (int it = 0; it < settings.max_iterations; ++it) {
    if (out.value == 0.0) break;
    model.normal_equations(out.state, h, g);
    if (!g.allFinite() || g.squaredNorm() == 0.0) break;
    out.iterations = it + 1;

    bool accepted = false;
    double next_value = out.value;
    State next = out.state;
    while (damping <= settings.max_damping) {
      Eigen::MatrixXd a = h;
      for (Eigen::Index i = 0; i < a.rows(); ++i) {
        a(i, i) += damping * std::max(h(i, i), 1e-12);
      }
      const Eigen::VectorXd delta = a.ldlt().solve(-g);
      if (delta.allFinite()) {
        next = model.step(out.state, delta);
        next_value = model.value(next);
        if (next_value < out.value) {
          accepted = true;
          damping = std::max(damping * 0.1, 1e-12);
          break;
        }
      }
      damping *= 10.0;
    }
    if (!accepted) break;

    const double decrease = (out.value - next_value) / out.value;
    out.state = std::move(next);
    out.value = next_value;
    out.trace.push_back(next_value);
    if (decrease < settings.relative_tolerance) break;
  }
  return out;
}

}  // namespace poselift::detail
