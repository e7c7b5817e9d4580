#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgres/algebra.hpp"
#include "kgres/fft.hpp"

namespace kgres {

// Uniform periodic grid on [-L, L) with a power-of-two point count.
class Grid1D {
 public:
  Grid1D(double half_length, int points);
  double half_length() const { return L_; }
  int points() const { return M_; }
  double dx() const { return dx_; }
  double node(int i) const { return -L_ + dx_ * i; }

 private:
  double L_;
  int M_;
  double dx_;
};

enum class Shape { Zero, Bump, GaussianTruncated };
Shape shape_from_name(const std::string& name);
std::string shape_name(Shape s);
// Compactly supported profile, identically zero for |x| >= B. The truncated
// Gaussian exp(-18 (x/B)^2) sits at 1.5e-8 of its peak at the cutoff.
double shape_value(Shape s, double x, double B);

struct ComponentData {
  Shape f = Shape::Bump;
  double f_amplitude = 1.0;
  Shape g = Shape::Zero;
  double g_amplitude = 0.0;
};

// Sampled fields (u, dt u) at one time.
struct FieldState {
  double t = 0.0;
  int n_components = 0;
  int points = 0;
  std::vector<double> u;   // row-major [component][grid point]
  std::vector<double> ut;

  FieldState() = default;
  FieldState(double time, int n, int m)
      : t(time), n_components(n), points(m),
        u(static_cast<size_t>(n) * static_cast<size_t>(m), 0.0),
        ut(static_cast<size_t>(n) * static_cast<size_t>(m), 0.0) {}

  std::span<double> u_row(int j) {
    return {u.data() + static_cast<size_t>(j) * static_cast<size_t>(points),
            static_cast<size_t>(points)};
  }
  std::span<const double> u_row(int j) const {
    return {u.data() + static_cast<size_t>(j) * static_cast<size_t>(points),
            static_cast<size_t>(points)};
  }
  std::span<double> ut_row(int j) {
    return {ut.data() + static_cast<size_t>(j) * static_cast<size_t>(points),
            static_cast<size_t>(points)};
  }
  std::span<const double> ut_row(int j) const {
    return {ut.data() + static_cast<size_t>(j) * static_cast<size_t>(points),
            static_cast<size_t>(points)};
  }
  double max_abs() const;
  bool finite() const;
};

struct CauchyData {
  double epsilon = 0.01;
  double support_radius = 1.0;  // B
  std::vector<ComponentData> components;

  FieldState sample(const Grid1D& grid) const;
};

// Exact spectral derivative of the trigonometric interpolant (Nyquist zeroed).
std::vector<double> spatial_derivative(const Grid1D& grid, std::span<const double> field);

// Discrete L^p norm over the grid; p = infinity gives the max.
double lp_norm(const Grid1D& grid, std::span<const double> field, double p);

struct NormTriple {
  double l2 = 0, l4 = 0, linf = 0;
};
// Per component: norms of u, dt u and the spectral dx u.
std::vector<std::array<NormTriple, 3>> observe_norms(const Grid1D& grid, const FieldState& state);

// max |u| over grid points with |x| > t + B + 2 dx; empty when that region
// has collapsed (horizon exhausted, t + B too close to L).
std::optional<double> light_cone_leakage(const Grid1D& grid, const FieldState& state, double B);

// sum_j integral (ut^2 + ux^2 + m^2 u^2) / 2 dx; conserved by the free flow.
double linear_energy(const Grid1D& grid, const MassVector& m, const FieldState& state);

class StepObserver {
 public:
  virtual ~StepObserver() = default;
  virtual void on_start(const Grid1D& grid, const FieldState& state) { (void)grid; (void)state; }
  virtual void on_step(const FieldState& state) = 0;
  virtual void on_finish(const FieldState& state) { (void)state; }
};

// Calls fn whenever at least `stride` of simulated time elapsed since the
// previous call (and at t = 0).
class CallbackObserver : public StepObserver {
 public:
  CallbackObserver(double stride, std::function<void(const FieldState&)> fn)
      : stride_(stride), fn_(std::move(fn)) {}
  void on_start(const Grid1D&, const FieldState& state) override {
    fire(state);
    next_ = state.t + stride_;
  }
  void on_step(const FieldState& state) override {
    if (state.t + 1e-12 >= next_) {
      fire(state);
      next_ += stride_ * std::max(1.0, std::ceil((state.t + 1e-12 - next_) / stride_));
    }
  }
  void on_finish(const FieldState& state) override {
    if (state.t != last_) fire(state);
  }

 private:
  void fire(const FieldState& state) {
    fn_(state);
    last_ = state.t;
  }
  double stride_;
  double next_ = 0.0;
  double last_ = -1.0;
  std::function<void(const FieldState&)> fn_;
};

struct NormRow {
  double t = 0.0;
  std::vector<double> values;
};

// Collects the series.csv payload: per component the {L2, L4, Linf} norms of
// u, dt u, dx u on a fixed time stride.
class NormObserver : public StepObserver {
 public:
  NormObserver(const Grid1D& grid, double stride);
  static std::vector<std::string> columns(int n_components);
  const std::vector<NormRow>& rows() const { return rows_; }
  void on_start(const Grid1D&, const FieldState& state) override;
  void on_step(const FieldState& state) override;
  void on_finish(const FieldState& state) override;

 private:
  void record(const FieldState& state);
  Grid1D grid_;
  double stride_;
  double next_ = 0.0;
  double last_recorded_ = -1.0;
  std::vector<NormRow> rows_;
};

struct FieldProbeRequest {
  double t = 0.0;
  double x = 0.0;
};

struct FieldProbeSample {
  double t = 0.0, x = 0.0;
  bool filled = false;
  std::vector<double> u, ut, ux;  // one entry per component
};

// Interpolates (u, dt u, dx u) at off-grid spacetime points while the run
// advances: degree-4 Lagrange interpolation in time over a ring buffer of
// recent steps, exact trigonometric evaluation in space.
class FieldProbeObserver : public StepObserver {
 public:
  FieldProbeObserver(const Grid1D& grid, int n_components,
                     std::vector<FieldProbeRequest> requests);
  ~FieldProbeObserver() override;
  const std::vector<FieldProbeSample>& samples() const { return samples_; }
  bool complete() const;
  void on_start(const Grid1D&, const FieldState& state) override;
  void on_step(const FieldState& state) override;
  void on_finish(const FieldState& state) override;

 private:
  struct Level;
  void push_level(const FieldState& state);
  void process_ready(bool final_flush);
  void evaluate(size_t request_index);

  Grid1D grid_;
  int n_;
  std::vector<FieldProbeSample> samples_;
  std::vector<size_t> order_;  // request indices sorted by time
  size_t next_pending_ = 0;
  std::vector<std::unique_ptr<Level>> levels_;
  std::unique_ptr<RealFft> fft_;
};

struct EvolveOptions {
  double dt = 0.0;            // 0 selects the default 0.25 min(dx, 1/m_N)
  double t_final = 1.0;
  double cfl_limit = 0.5;     // reject dt above cfl_limit * min(dx, 1/m_N)
  double blowup_factor = 1e3; // ceiling = factor * initial sup norm
};

struct RunRecord {
  FieldState final_state;
  bool blew_up = false;
  double blowup_time = 0.0;
  long steps = 0;
  double dt = 0.0;
};

// Method of lines for dt u = v, dt v = dxx u - m^2 u + F(u, v, dx u):
// classical RK4 in time, Fourier collocation in space, cubic products
// dealiased by zero-padding to twice the mode count.
RunRecord evolve(const MassVector& m, const CubicNonlinearity& F, FieldState initial,
                 const Grid1D& grid, const EvolveOptions& options,
                 std::span<StepObserver* const> observers = {});

// Compact-data entry point; additionally checks that the box is large enough
// that nothing reaches the periodic seam within the horizon, L >= B + T + margin.
RunRecord evolve(const MassVector& m, const CubicNonlinearity& F, const CauchyData& data,
                 const Grid1D& grid, const EvolveOptions& options,
                 std::span<StepObserver* const> observers = {},
                 double light_cone_margin = 1.0);

}  // namespace kgres
