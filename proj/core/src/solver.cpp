#include "kgres/solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace kgres {

using Complex = std::complex<double>;

Grid1D::Grid1D(double half_length, int points) : L_(half_length), M_(points) {
  if (!(half_length > 0.0)) throw std::invalid_argument("grid half length must be positive");
  if (points < 16 || !std::has_single_bit(static_cast<unsigned>(points)))
    throw std::invalid_argument("grid point count must be a power of two (at least 16)");
  dx_ = 2.0 * L_ / M_;
}

Shape shape_from_name(const std::string& name) {
  if (name == "zero") return Shape::Zero;
  if (name == "bump") return Shape::Bump;
  if (name == "gaussian") return Shape::GaussianTruncated;
  throw std::invalid_argument("unknown shape '" + name + "' (use zero, bump or gaussian)");
}

std::string shape_name(Shape s) {
  switch (s) {
    case Shape::Zero: return "zero";
    case Shape::Bump: return "bump";
    case Shape::GaussianTruncated: return "gaussian";
  }
  return "?";
}

double shape_value(Shape s, double x, double B) {
  const double r = x / B;
  if (s == Shape::Zero || std::abs(r) >= 1.0) return 0.0;
  switch (s) {
    case Shape::Bump: return std::exp(1.0 / (r * r - 1.0));
    case Shape::GaussianTruncated: return std::exp(-18.0 * r * r);
    default: return 0.0;
  }
}

double FieldState::max_abs() const {
  double m = 0.0;
  for (double v : u) m = std::max(m, std::abs(v));
  for (double v : ut) m = std::max(m, std::abs(v));
  return m;
}

bool FieldState::finite() const {
  for (double v : u)
    if (!std::isfinite(v)) return false;
  for (double v : ut)
    if (!std::isfinite(v)) return false;
  return true;
}

FieldState CauchyData::sample(const Grid1D& grid) const {
  if (components.empty()) throw std::invalid_argument("Cauchy data needs at least one component");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(support_radius > 0.0)) throw std::invalid_argument("support radius must be positive");
  FieldState s(0.0, static_cast<int>(components.size()), grid.points());
  for (int j = 0; j < s.n_components; ++j) {
    const auto& c = components[static_cast<size_t>(j)];
    auto u = s.u_row(j);
    auto ut = s.ut_row(j);
    for (int i = 0; i < grid.points(); ++i) {
      const double x = grid.node(i);
      u[static_cast<size_t>(i)] = epsilon * c.f_amplitude * shape_value(c.f, x, support_radius);
      ut[static_cast<size_t>(i)] = epsilon * c.g_amplitude * shape_value(c.g, x, support_radius);
    }
  }
  return s;
}

namespace {

void pad_spectrum(std::span<const Complex> coarse, std::span<Complex> fine) {
  const size_t half = coarse.size() - 1;  // M/2
  std::fill(fine.begin(), fine.end(), Complex{});
  std::copy(coarse.begin(), coarse.begin() + static_cast<std::ptrdiff_t>(half), fine.begin());
  // the coarse Nyquist mode is dropped; fields of interest are spectrally tiny there
}

}  // namespace

std::vector<double> spatial_derivative(const Grid1D& grid, std::span<const double> field) {
  const int M = grid.points();
  if (static_cast<int>(field.size()) != M)
    throw std::invalid_argument("spatial_derivative: field size mismatch");
  RealFft fft(M);
  std::vector<Complex> hat(static_cast<size_t>(fft.spectrum_size()));
  fft.forward(field, hat);
  const double k1 = std::numbers::pi / grid.half_length();
  for (int k = 0; k < fft.spectrum_size(); ++k) {
    const double xi = (k == M / 2) ? 0.0 : k1 * k;  // Nyquist derivative zeroed
    hat[static_cast<size_t>(k)] *= Complex(0.0, xi);
  }
  std::vector<double> out(static_cast<size_t>(M));
  fft.backward(hat, out);
  for (auto& v : out) v /= M;
  return out;
}

double lp_norm(const Grid1D& grid, std::span<const double> field, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : field) m = std::max(m, std::abs(v));
    return m;
  }
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1 or infinity");
  double acc = 0.0;
  for (double v : field) acc += std::pow(std::abs(v), p);
  return std::pow(acc * grid.dx(), 1.0 / p);
}

namespace {

NormTriple norms_of(const Grid1D& grid, std::span<const double> f) {
  NormTriple t;
  double s2 = 0.0, s4 = 0.0, m = 0.0;
  for (double v : f) {
    const double a = std::abs(v);
    const double a2 = v * v;
    s2 += a2;
    s4 += a2 * a2;
    m = std::max(m, a);
  }
  t.l2 = std::sqrt(s2 * grid.dx());
  t.l4 = std::pow(s4 * grid.dx(), 0.25);
  t.linf = m;
  return t;
}

}  // namespace

std::vector<std::array<NormTriple, 3>> observe_norms(const Grid1D& grid, const FieldState& state) {
  std::vector<std::array<NormTriple, 3>> out(static_cast<size_t>(state.n_components));
  for (int j = 0; j < state.n_components; ++j) {
    const auto ux = spatial_derivative(grid, state.u_row(j));
    out[static_cast<size_t>(j)][0] = norms_of(grid, state.u_row(j));
    out[static_cast<size_t>(j)][1] = norms_of(grid, state.ut_row(j));
    out[static_cast<size_t>(j)][2] = norms_of(grid, ux);
  }
  return out;
}

std::optional<double> light_cone_leakage(const Grid1D& grid, const FieldState& state, double B) {
  const double limit = state.t + B + 2.0 * grid.dx();
  if (limit >= grid.half_length()) return std::nullopt;
  double worst = 0.0;
  for (int i = 0; i < grid.points(); ++i) {
    if (std::abs(grid.node(i)) <= limit) continue;
    for (int j = 0; j < state.n_components; ++j)
      worst = std::max(worst, std::abs(state.u_row(j)[static_cast<size_t>(i)]));
  }
  return worst;
}

double linear_energy(const Grid1D& grid, const MassVector& m, const FieldState& state) {
  double e = 0.0;
  const auto md = m.as_doubles();
  for (int j = 0; j < state.n_components; ++j) {
    const auto ux = spatial_derivative(grid, state.u_row(j));
    const auto u = state.u_row(j);
    const auto ut = state.ut_row(j);
    const double m2 = md[static_cast<size_t>(j)] * md[static_cast<size_t>(j)];
    double acc = 0.0;
    for (int i = 0; i < grid.points(); ++i) {
      const size_t p = static_cast<size_t>(i);
      acc += ut[p] * ut[p] + ux[p] * ux[p] + m2 * u[p] * u[p];
    }
    e += 0.5 * acc * grid.dx();
  }
  return e;
}

NormObserver::NormObserver(const Grid1D& grid, double stride) : grid_(grid), stride_(stride) {
  if (!(stride > 0.0)) throw std::invalid_argument("norm observer stride must be positive");
}

std::vector<std::string> NormObserver::columns(int n_components) {
  std::vector<std::string> cols;
  for (int j = 1; j <= n_components; ++j) {
    for (const char* field : {"u", "dtu", "dxu"}) {
      for (const char* p : {"l2", "l4", "linf"}) {
        cols.push_back(std::string(field) + std::to_string(j) + "_" + p);
      }
    }
  }
  return cols;
}

void NormObserver::record(const FieldState& state) {
  const auto norms = observe_norms(grid_, state);
  NormRow row;
  row.t = state.t;
  for (const auto& comp : norms)
    for (const auto& triple : comp) {
      row.values.push_back(triple.l2);
      row.values.push_back(triple.l4);
      row.values.push_back(triple.linf);
    }
  rows_.push_back(std::move(row));
  last_recorded_ = state.t;
}

void NormObserver::on_start(const Grid1D&, const FieldState& state) {
  record(state);
  next_ = state.t + stride_;
}

void NormObserver::on_step(const FieldState& state) {
  if (state.t + 1e-12 >= next_) {
    record(state);
    next_ += stride_ * std::max(1.0, std::ceil((state.t + 1e-12 - next_) / stride_));
  }
}

void NormObserver::on_finish(const FieldState& state) {
  if (state.t != last_recorded_) record(state);
}

// ---------------------------------------------------------------------------
// Off-grid probes

struct FieldProbeObserver::Level {
  double t = 0.0;
  std::vector<std::vector<double>> u, ut;           // [comp][M]
  std::vector<std::vector<Complex>> u_hat, ut_hat;  // lazily filled
  bool have_spectra = false;
};

FieldProbeObserver::FieldProbeObserver(const Grid1D& grid, int n_components,
                                       std::vector<FieldProbeRequest> requests)
    : grid_(grid), n_(n_components) {
  samples_.reserve(requests.size());
  for (const auto& r : requests) {
    if (!(r.t >= 0.0)) throw std::invalid_argument("probe request before the initial time");
    if (std::abs(r.x) >= grid.half_length())
      throw std::invalid_argument("probe request outside the spatial domain");
    FieldProbeSample s;
    s.t = r.t;
    s.x = r.x;
    samples_.push_back(std::move(s));
  }
  order_.resize(samples_.size());
  for (size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  std::sort(order_.begin(), order_.end(),
            [&](size_t a, size_t b) { return samples_[a].t < samples_[b].t; });
  fft_ = std::make_unique<RealFft>(grid.points());
}

FieldProbeObserver::~FieldProbeObserver() = default;

bool FieldProbeObserver::complete() const {
  return next_pending_ >= order_.size();
}

void FieldProbeObserver::push_level(const FieldState& state) {
  auto level = std::make_unique<Level>();
  level->t = state.t;
  level->u.resize(static_cast<size_t>(n_));
  level->ut.resize(static_cast<size_t>(n_));
  for (int j = 0; j < n_; ++j) {
    level->u[static_cast<size_t>(j)].assign(state.u_row(j).begin(), state.u_row(j).end());
    level->ut[static_cast<size_t>(j)].assign(state.ut_row(j).begin(), state.ut_row(j).end());
  }
  levels_.push_back(std::move(level));
  if (levels_.size() > 6) levels_.erase(levels_.begin());
}

void FieldProbeObserver::on_start(const Grid1D&, const FieldState& state) {
  push_level(state);
}

void FieldProbeObserver::on_step(const FieldState& state) {
  if (next_pending_ >= order_.size()) return;
  const double t_next = samples_[order_[next_pending_]].t;
  const double dt_hint = levels_.empty() ? 0.0 : state.t - levels_.back()->t;
  // far from the next request: skip the copies, remember only the latest step
  if (dt_hint > 0.0 && t_next > state.t + 6.0 * dt_hint) {
    levels_.clear();
    push_level(state);
    return;
  }
  push_level(state);
  process_ready(false);
}

void FieldProbeObserver::on_finish(const FieldState&) { process_ready(true); }

void FieldProbeObserver::process_ready(bool final_flush) {
  while (next_pending_ < order_.size()) {
    const size_t idx = order_[next_pending_];
    const double t_req = samples_[idx].t;
    if (final_flush) {
      if (levels_.empty() || t_req > levels_.back()->t + 1e-9) break;
    } else {
      if (levels_.size() < 5) break;
      if (t_req > levels_[levels_.size() - 3]->t) break;
    }
    evaluate(idx);
    ++next_pending_;
  }
}

namespace {

// Value of the trigonometric interpolant and its derivative at x, from the
// unnormalized r2c spectrum. The incremental phase is renormalized in blocks.
void trig_eval(std::span<const Complex> hat, int M, double L, double x, double* value,
               double* derivative) {
  const Complex r = std::polar(1.0, std::numbers::pi * (x + L) / L);
  Complex ph{1.0, 0.0};
  Complex su{};
  Complex sd{};
  const int half = M / 2;
  for (int k = 1; k < half; ++k) {
    ph *= r;
    if ((k & 1023) == 0) ph /= std::abs(ph);
    const Complex term = hat[static_cast<size_t>(k)] * ph;
    su += term;
    if (derivative) sd += static_cast<double>(k) * term;
  }
  if (value) *value = (hat[0].real() + 2.0 * su.real()) / M;
  if (derivative) *derivative = -(2.0 * std::numbers::pi / (L * M)) * sd.imag();
}

}  // namespace

void FieldProbeObserver::evaluate(size_t request_index) {
  auto& sample = samples_[request_index];
  // choose 5 consecutive levels around the request time
  size_t hi = levels_.size();
  for (size_t i = 0; i < levels_.size(); ++i) {
    if (levels_[i]->t > sample.t) {
      hi = i;
      break;
    }
  }
  size_t start = hi >= 3 ? hi - 3 : 0;
  if (start + 5 > levels_.size()) start = levels_.size() >= 5 ? levels_.size() - 5 : 0;
  const size_t count = std::min<size_t>(5, levels_.size());

  const int M = grid_.points();
  const double L = grid_.half_length();
  sample.u.assign(static_cast<size_t>(n_), 0.0);
  sample.ut.assign(static_cast<size_t>(n_), 0.0);
  sample.ux.assign(static_cast<size_t>(n_), 0.0);

  // Lagrange weights in time
  std::array<double, 5> w{};
  for (size_t l = 0; l < count; ++l) {
    double p = 1.0;
    for (size_t q = 0; q < count; ++q) {
      if (q == l) continue;
      p *= (sample.t - levels_[start + q]->t) / (levels_[start + l]->t - levels_[start + q]->t);
    }
    w[l] = p;
  }

  for (size_t l = 0; l < count; ++l) {
    Level& level = *levels_[start + l];
    if (!level.have_spectra) {
      level.u_hat.resize(static_cast<size_t>(n_));
      level.ut_hat.resize(static_cast<size_t>(n_));
      for (int j = 0; j < n_; ++j) {
        level.u_hat[static_cast<size_t>(j)].resize(static_cast<size_t>(fft_->spectrum_size()));
        level.ut_hat[static_cast<size_t>(j)].resize(static_cast<size_t>(fft_->spectrum_size()));
        fft_->forward(level.u[static_cast<size_t>(j)], level.u_hat[static_cast<size_t>(j)]);
        fft_->forward(level.ut[static_cast<size_t>(j)], level.ut_hat[static_cast<size_t>(j)]);
      }
      level.have_spectra = true;
    }
    for (int j = 0; j < n_; ++j) {
      double uval = 0.0, uxval = 0.0, utval = 0.0;
      trig_eval(level.u_hat[static_cast<size_t>(j)], M, L, sample.x, &uval, &uxval);
      trig_eval(level.ut_hat[static_cast<size_t>(j)], M, L, sample.x, &utval, nullptr);
      sample.u[static_cast<size_t>(j)] += w[l] * uval;
      sample.ux[static_cast<size_t>(j)] += w[l] * uxval;
      sample.ut[static_cast<size_t>(j)] += w[l] * utval;
    }
  }
  sample.filled = true;
}

// ---------------------------------------------------------------------------
// Time integration

namespace {

// Workspace for one right-hand-side evaluation: spectra, dealiased products,
// and the flattened term list.
class SpectralWorkspace {
 public:
  SpectralWorkspace(const MassVector& m, const CubicNonlinearity& F, const Grid1D& grid)
      : n_(m.size()),
        M_(grid.points()),
        L_(grid.half_length()),
        fft_m_(grid.points()),
        fft_2m_(2 * grid.points()) {
    const auto md = m.as_doubles();
    m2_.resize(static_cast<size_t>(n_));
    for (int j = 0; j < n_; ++j) m2_[static_cast<size_t>(j)] = md[static_cast<size_t>(j)] * md[static_cast<size_t>(j)];

    xi_.resize(static_cast<size_t>(M_ / 2 + 1));
    const double k1 = std::numbers::pi / L_;
    for (int k = 0; k <= M_ / 2; ++k) xi_[static_cast<size_t>(k)] = k1 * k;

    reads_u_.assign(static_cast<size_t>(n_), false);
    reads_ut_.assign(static_cast<size_t>(n_), false);
    reads_ux_.assign(static_cast<size_t>(n_), false);
    has_force_.assign(static_cast<size_t>(n_), false);
    for (const auto& t : F.terms()) {
      has_force_[static_cast<size_t>(t.target - 1)] = true;
      TermOp op;
      op.target = t.target - 1;
      op.coeff = t.coeff;
      for (int l = 0; l < 3; ++l) {
        op.comp[l] = t.factors[static_cast<size_t>(l)].component - 1;
        op.field[l] = static_cast<int>(t.factors[static_cast<size_t>(l)].deriv);
        switch (t.factors[static_cast<size_t>(l)].deriv) {
          case Deriv::None: reads_u_[static_cast<size_t>(op.comp[l])] = true; break;
          case Deriv::Dt: reads_ut_[static_cast<size_t>(op.comp[l])] = true; break;
          case Deriv::Dx: reads_ux_[static_cast<size_t>(op.comp[l])] = true; break;
        }
      }
      terms_.push_back(op);
    }
    nonlinear_ = !terms_.empty();

    u_hat_.assign(static_cast<size_t>(n_),
                  std::vector<Complex>(static_cast<size_t>(M_ / 2 + 1)));
    scratch_m_.resize(static_cast<size_t>(M_ / 2 + 1));
    scratch_2m_.resize(static_cast<size_t>(M_ + 1));
    if (nonlinear_) {
      fine_u_.assign(static_cast<size_t>(n_), {});
      fine_ut_.assign(static_cast<size_t>(n_), {});
      fine_ux_.assign(static_cast<size_t>(n_), {});
      for (int j = 0; j < n_; ++j) {
        if (reads_u_[static_cast<size_t>(j)]) fine_u_[static_cast<size_t>(j)].resize(static_cast<size_t>(2 * M_));
        if (reads_ut_[static_cast<size_t>(j)]) fine_ut_[static_cast<size_t>(j)].resize(static_cast<size_t>(2 * M_));
        if (reads_ux_[static_cast<size_t>(j)]) fine_ux_[static_cast<size_t>(j)].resize(static_cast<size_t>(2 * M_));
      }
      fine_f_.resize(static_cast<size_t>(2 * M_));
      f_hat_.assign(static_cast<size_t>(n_),
                    std::vector<Complex>(static_cast<size_t>(M_ / 2 + 1)));
    }
  }

  // du = ut; dut = dxx u - m^2 u + F(u, ut, dx u)
  void rhs(const FieldState& s, std::vector<double>& du, std::vector<double>& dut) {
    du = s.ut;

    for (int j = 0; j < n_; ++j) fft_m_.forward(s.u_row(j), u_hat_[static_cast<size_t>(j)]);

    if (nonlinear_) {
      for (int j = 0; j < n_; ++j) {
        const size_t js = static_cast<size_t>(j);
        if (reads_u_[js]) {
          pad_spectrum(u_hat_[js], scratch_2m_);
          fft_2m_.backward(scratch_2m_, fine_u_[js]);
          for (auto& v : fine_u_[js]) v /= M_;
        }
        if (reads_ut_[js]) {
          fft_m_.forward(s.ut_row(j), scratch_m_);
          pad_spectrum(scratch_m_, scratch_2m_);
          fft_2m_.backward(scratch_2m_, fine_ut_[js]);
          for (auto& v : fine_ut_[js]) v /= M_;
        }
        if (reads_ux_[js]) {
          for (int k = 0; k <= M_ / 2; ++k)
            scratch_m_[static_cast<size_t>(k)] =
                Complex(0.0, k == M_ / 2 ? 0.0 : xi_[static_cast<size_t>(k)]) *
                u_hat_[js][static_cast<size_t>(k)];
          pad_spectrum(scratch_m_, scratch_2m_);
          fft_2m_.backward(scratch_2m_, fine_ux_[js]);
          for (auto& v : fine_ux_[js]) v /= M_;
        }
      }
      for (int j = 0; j < n_; ++j) {
        const size_t js = static_cast<size_t>(j);
        if (!has_force_[js]) continue;
        std::fill(fine_f_.begin(), fine_f_.end(), 0.0);
        for (const auto& op : terms_) {
          if (op.target != j) continue;
          const double* a = field_ptr(op, 0);
          const double* b = field_ptr(op, 1);
          const double* c = field_ptr(op, 2);
          const double coeff = op.coeff;
          for (int p = 0; p < 2 * M_; ++p)
            fine_f_[static_cast<size_t>(p)] += coeff * a[p] * b[p] * c[p];
        }
        fft_2m_.forward(fine_f_, scratch_2m_);
        for (int k = 0; k <= M_ / 2; ++k)
          f_hat_[js][static_cast<size_t>(k)] =
              (k == M_ / 2) ? Complex{} : 0.5 * scratch_2m_[static_cast<size_t>(k)];
      }
    }

    for (int j = 0; j < n_; ++j) {
      const size_t js = static_cast<size_t>(j);
      for (int k = 0; k <= M_ / 2; ++k) {
        const size_t ks = static_cast<size_t>(k);
        Complex v = -(xi_[ks] * xi_[ks] + m2_[js]) * u_hat_[js][ks];
        if (nonlinear_ && has_force_[js]) v += f_hat_[js][ks];
        scratch_m_[ks] = v;
      }
      std::span<double> row(dut.data() + js * static_cast<size_t>(M_), static_cast<size_t>(M_));
      fft_m_.backward(scratch_m_, row);
      for (auto& v : row) v /= M_;
    }
  }

 private:
  struct TermOp {
    int target;
    int comp[3];
    int field[3];  // 0 none, 1 dt, 2 dx
    double coeff;
  };

  const double* field_ptr(const TermOp& op, int l) const {
    const size_t c = static_cast<size_t>(op.comp[l]);
    switch (op.field[l]) {
      case 0: return fine_u_[c].data();
      case 1: return fine_ut_[c].data();
      default: return fine_ux_[c].data();
    }
  }

  int n_, M_;
  double L_;
  RealFft fft_m_, fft_2m_;
  std::vector<double> m2_;
  std::vector<double> xi_;
  std::vector<char> reads_u_, reads_ut_, reads_ux_, has_force_;
  bool nonlinear_ = false;
  std::vector<TermOp> terms_;
  std::vector<std::vector<Complex>> u_hat_;
  std::vector<Complex> scratch_m_;
  std::vector<Complex> scratch_2m_;
  std::vector<std::vector<double>> fine_u_, fine_ut_, fine_ux_;
  std::vector<double> fine_f_;
  std::vector<std::vector<Complex>> f_hat_;
};

void axpy(std::vector<double>& out, const std::vector<double>& base, double a,
          const std::vector<double>& k) {
  const size_t n = out.size();
  for (size_t i = 0; i < n; ++i) out[i] = base[i] + a * k[i];
}

}  // namespace

RunRecord evolve(const MassVector& m, const CubicNonlinearity& F, FieldState initial,
                 const Grid1D& grid, const EvolveOptions& options,
                 std::span<StepObserver* const> observers) {
  if (m.size() != F.n_components())
    throw std::invalid_argument("mass vector and nonlinearity component count mismatch");
  if (initial.n_components != m.size() || initial.points != grid.points())
    throw std::invalid_argument("initial state shape does not match grid/system");

  const double dt_limit = options.cfl_limit * std::min(grid.dx(), 1.0 / m.largest());
  double dt = options.dt > 0.0 ? options.dt : 0.5 * dt_limit;
  if (dt > dt_limit * (1.0 + 1e-12))
    throw std::invalid_argument("time step violates the CFL limit " + std::to_string(dt_limit));
  if (!(options.t_final > initial.t))
    throw std::invalid_argument("t_final must exceed the initial time");

  const double ceiling = options.blowup_factor * std::max(initial.max_abs(), 1e-30);

  SpectralWorkspace ws(m, F, grid);
  FieldState state = std::move(initial);
  const size_t total = state.u.size();
  std::vector<double> k1u(total), k1v(total), k2u(total), k2v(total), k3u(total), k3v(total),
      k4u(total), k4v(total);
  FieldState stage = state;

  for (auto* obs : observers) obs->on_start(grid, state);

  RunRecord record;
  record.dt = dt;

  const double span_t = options.t_final - state.t;
  const long n_steps = static_cast<long>(std::ceil(span_t / dt - 1e-9));

  for (long step = 0; step < n_steps; ++step) {
    const double h = std::min(dt, options.t_final - state.t);
    ws.rhs(state, k1u, k1v);
    axpy(stage.u, state.u, h / 2, k1u);
    axpy(stage.ut, state.ut, h / 2, k1v);
    stage.t = state.t + h / 2;
    ws.rhs(stage, k2u, k2v);
    axpy(stage.u, state.u, h / 2, k2u);
    axpy(stage.ut, state.ut, h / 2, k2v);
    ws.rhs(stage, k3u, k3v);
    axpy(stage.u, state.u, h, k3u);
    axpy(stage.ut, state.ut, h, k3v);
    stage.t = state.t + h;
    ws.rhs(stage, k4u, k4v);
    for (size_t i = 0; i < total; ++i) {
      state.u[i] += h / 6.0 * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]);
      state.ut[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
    }
    state.t += h;
    ++record.steps;

    if (!state.finite() || state.max_abs() > ceiling) {
      record.blew_up = true;
      record.blowup_time = state.t;
      break;
    }
    for (auto* obs : observers) obs->on_step(state);
  }

  for (auto* obs : observers) obs->on_finish(state);
  record.final_state = std::move(state);
  return record;
}

RunRecord evolve(const MassVector& m, const CubicNonlinearity& F, const CauchyData& data,
                 const Grid1D& grid, const EvolveOptions& options,
                 std::span<StepObserver* const> observers, double light_cone_margin) {
  if (static_cast<int>(data.components.size()) != m.size())
    throw std::invalid_argument("Cauchy data component count mismatch");
  const double needed = data.support_radius + options.t_final + light_cone_margin;
  if (grid.half_length() < needed)
    throw std::invalid_argument("grid half length " + std::to_string(grid.half_length()) +
                                " too small for the light cone; need at least " +
                                std::to_string(needed));
  return evolve(m, F, data.sample(grid), grid, options, observers);
}

}  // namespace kgres
