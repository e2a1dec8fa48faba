#pragma once

#include <cstdint>
#include <vector>

#include "oudrift/types.hpp"

namespace oudrift {

/// Estimation statistics accumulated along one observed path:
/// C = integral of Y Y' dt (left Riemann), S = integral of dY Y' (left-point
/// Ito sum), QV = sum of squared increments.
struct SufficientStats {
  Matrix C;
  Matrix S;
  Matrix QV;
  Vector y_end;
  double T = 0.0;
  double dt = 0.0;
  std::int64_t n_steps = 0;

  Index p() const { return C.rows(); }
};

/// Running accumulator; feed consecutive path points in order.
class StatsAccumulator {
 public:
  StatsAccumulator(Index p, double dt)
      : dt_(dt),
        C_(Matrix::Zero(p, p)),
        S_(Matrix::Zero(p, p)),
        QV_(Matrix::Zero(p, p)),
        last_(Vector::Zero(p)) {}

  void start(const Vector& y0) { last_ = y0; }

  void step(const Vector& y_next) {
    const Vector d = y_next - last_;
    C_.noalias() += (last_ * last_.transpose()) * dt_;
    S_.noalias() += d * last_.transpose();
    QV_.noalias() += d * d.transpose();
    last_ = y_next;
    ++n_;
  }

  SufficientStats snapshot() const {
    SufficientStats st;
    st.C = C_;
    st.S = S_;
    st.QV = QV_;
    st.y_end = last_;
    st.T = static_cast<double>(n_) * dt_;
    st.dt = dt_;
    st.n_steps = n_;
    return st;
  }

  const Vector& current() const { return last_; }
  std::int64_t steps() const { return n_; }

 private:
  double dt_;
  Matrix C_, S_, QV_;
  Vector last_;
  std::int64_t n_ = 0;
};

/// Rebuilds the sufficient statistics from a stored path on a uniform grid.
/// Rejects non-uniform grids: the Riemann/Ito sums assume equal spacing.
inline SufficientStats stats_from_path(const std::vector<double>& times,
                                       const std::vector<Vector>& values) {
  require(times.size() == values.size(), "stats_from_path: times/values length mismatch");
  require(times.size() >= 2, "stats_from_path: need at least two grid points");
  const double dt = times[1] - times[0];
  require(dt > 0.0, "stats_from_path: grid must be strictly increasing");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs((times[i] - times[i - 1]) - dt) > 1e-9 * std::max(1.0, dt))
      throw std::invalid_argument("stats_from_path: non-uniform time grid at index " +
                                  std::to_string(i));
  }
  const Index p = values.front().size();
  StatsAccumulator acc(p, dt);
  acc.start(values.front());
  for (std::size_t i = 1; i < values.size(); ++i) {
    require(values[i].size() == p, "stats_from_path: inconsistent state dimension");
    acc.step(values[i]);
  }
  return acc.snapshot();
}

}  // namespace oudrift
