#include "kgres/condition.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace kgres {

namespace {

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

Eigen::VectorXcd to_eigen(std::span<const Complex> Y) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(Y.size()));
  for (size_t i = 0; i < Y.size(); ++i) v[static_cast<Eigen::Index>(i)] = Y[i];
  return v;
}

double halton(std::uint64_t index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
    index /= static_cast<std::uint64_t>(base);
  }
  return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

// Deterministic unit-sphere sample set: Halton-driven complex Gaussians
// normalized to the sphere, plus every coordinate/phase extreme point.
std::vector<ComplexVec> sphere_samples(int n, int count) {
  std::vector<ComplexVec> out;
  out.reserve(static_cast<size_t>(count) + static_cast<size_t>(4 * n * n));

  for (int i = 1; i <= count; ++i) {
    ComplexVec y(static_cast<size_t>(n));
    double norm2 = 0.0;
    for (int kdim = 0; kdim < n; ++kdim) {
      const double u1 = halton(static_cast<std::uint64_t>(i), kPrimes[2 * kdim]);
      const double u2 = halton(static_cast<std::uint64_t>(i), kPrimes[2 * kdim + 1]);
      const double rad = std::sqrt(-2.0 * std::log(std::max(u1, 1e-16)));
      const double ang = 2.0 * std::numbers::pi * u2;
      y[static_cast<size_t>(kdim)] = Complex(rad * std::cos(ang), rad * std::sin(ang));
      norm2 += std::norm(y[static_cast<size_t>(kdim)]);
    }
    if (norm2 == 0.0) continue;
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& c : y) c *= inv;
    out.push_back(std::move(y));
  }

  const Complex units[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (int j = 0; j < n; ++j) {
    for (const auto& p : {units[0], units[1]}) {
      ComplexVec y(static_cast<size_t>(n), Complex{});
      y[static_cast<size_t>(j)] = p;
      out.push_back(std::move(y));
    }
  }
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < n; ++j)
    for (int l = j + 1; l < n; ++l)
      for (const auto& p : units) {
        ComplexVec y(static_cast<size_t>(n), Complex{});
        y[static_cast<size_t>(j)] = inv_sqrt2;
        y[static_cast<size_t>(l)] = p * inv_sqrt2;
        out.push_back(std::move(y));
      }
  return out;
}

// Maximizes the ratio by cyclic pattern search over (z, Re Y_k, Im Y_k).
void polish_worst_point(const ConditionMatrix& A, const ReducedSystem& sys, int k,
                        double z_max, double& z, ComplexVec& Y, double& ratio) {
  const int n = sys.n_components();
  auto eval = [&](double zz, const ComplexVec& yy) {
    return condition_ratio(A, sys, k, zz, yy);
  };
  double step = 0.05;
  for (int sweep = 0; sweep < 200 && step > 1e-13; ++sweep) {
    bool improved = false;
    for (int coord = 0; coord < 2 * n + 1; ++coord) {
      for (double dir : {1.0, -1.0}) {
        while (true) {
          double zz = z;
          ComplexVec yy = Y;
          if (coord == 0) {
            zz = std::clamp(z + dir * step, -z_max, z_max);
          } else {
            const size_t comp = static_cast<size_t>((coord - 1) / 2);
            const Complex delta = ((coord - 1) % 2 == 0) ? Complex(dir * step, 0)
                                                         : Complex(0, dir * step);
            yy[comp] += delta;
          }
          const double r = eval(zz, yy);
          if (r > ratio + 1e-18) {
            ratio = r;
            z = zz;
            Y = std::move(yy);
            improved = true;
          } else {
            break;
          }
        }
      }
    }
    if (!improved) step *= 0.5;
    // keep Y on the unit sphere for conditioning; the ratio is scale free
    double norm2 = 0.0;
    for (auto& c : Y) norm2 += std::norm(c);
    if (norm2 > 0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (auto& c : Y) c *= inv;
      ratio = eval(z, Y);
    }
  }
}

}  // namespace

ConditionMatrix::ConditionMatrix(Eigen::MatrixXcd entries) : a_(std::move(entries)) {
  if (a_.rows() != a_.cols() || a_.rows() < 1)
    throw std::invalid_argument("condition matrix must be square and nonempty");
  const double scale = std::max(1.0, a_.cwiseAbs().maxCoeff());
  const double herm_defect = (a_ - a_.adjoint()).cwiseAbs().maxCoeff();
  if (herm_defect > 1e-12 * scale)
    throw std::invalid_argument("condition matrix is not Hermitian (defect " +
                                std::to_string(herm_defect) + ")");
  a_ = ((a_ + a_.adjoint()) / 2.0).eval();  // kill roundoff asymmetry
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a_, Eigen::EigenvaluesOnly);
  lambda_min_ = es.eigenvalues().minCoeff();
  lambda_max_ = es.eigenvalues().maxCoeff();
  if (!(lambda_min_ > 0.0))
    throw std::invalid_argument("condition matrix is not positive definite (lambda_min = " +
                                std::to_string(lambda_min_) + ")");
}

ConditionMatrix ConditionMatrix::diagonal(const std::vector<double>& d) {
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d.size()),
                                              static_cast<Eigen::Index>(d.size()));
  for (size_t i = 0; i < d.size(); ++i)
    a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = d[i];
  return ConditionMatrix(std::move(a));
}

double condition_value(const ConditionMatrix& A, const ReducedSystem& sys,
                       const HyperbolaPoint& w, std::span<const Complex> Y) {
  if (A.size() != sys.n_components())
    throw std::invalid_argument("condition matrix size does not match the system");
  const auto f = sys.eval_reduced(w, Y);
  const Eigen::VectorXcd ay = A.entries() * to_eigen(Y);
  Complex pairing{};
  for (int j = 0; j < sys.n_components(); ++j)
    pairing += std::conj(ay[j]) * f[static_cast<size_t>(j)];
  return pairing.imag();
}

double condition_ratio(const ConditionMatrix& A, const ReducedSystem& sys, int k,
                       double z, std::span<const Complex> Y) {
  double norm2 = 0.0;
  for (const auto& c : Y) norm2 += std::norm(c);
  if (norm2 == 0.0) return 0.0;
  const HyperbolaPoint w(z);
  return condition_value(A, sys, w, Y) / (ipow(w.w0, k) * norm2 * norm2);
}

std::string ConditionReport::summary() const {
  std::ostringstream os;
  os << (pass ? "PASS" : "FAIL") << " k=" << k << " worst_ratio=" << worst_ratio;
  if (k > 0) os << " C~=" << c_tilde;
  os << " (samples=" << samples_used << ", tol=" << tolerance << ")";
  return os.str();
}

ConditionReport check_condition(const ConditionMatrix& A, const ReducedSystem& sys, int k,
                                const SamplingSpec& spec, double tolerance) {
  if (k != 0 && k != 1 && k != 3)
    throw std::invalid_argument("condition exponent k must be 0, 1 or 3");
  if (A.size() != sys.n_components())
    throw std::invalid_argument("condition matrix size does not match the system");

  const auto ys = sphere_samples(sys.n_components(), spec.sphere_count);
  ConditionReport report;
  report.k = k;
  report.tolerance = tolerance;
  report.worst_ratio = -std::numeric_limits<double>::infinity();

  // pure evaluations: split the z grid across workers, reduce by
  // (ratio, z index, y index) so the winner is timing independent
  struct Local {
    double ratio = -std::numeric_limits<double>::infinity();
    int iz = 0;
    size_t iy = 0;
  };
  auto scan = [&](int z_begin, int z_end) {
    Local best;
    for (int iz = z_begin; iz < z_end; ++iz) {
      const double z = spec.z_count == 1
                           ? 0.0
                           : -spec.z_max + 2.0 * spec.z_max * iz / (spec.z_count - 1);
      for (size_t iy = 0; iy < ys.size(); ++iy) {
        const double r = condition_ratio(A, sys, k, z, ys[iy]);
        if (r > best.ratio || (r == best.ratio && std::tie(iz, iy) < std::tie(best.iz, best.iy))) {
          best = {r, iz, iy};
        }
      }
    }
    return best;
  };

  const int workers = std::max(1, std::min<int>(spec.z_count,
                                                static_cast<int>(std::thread::hardware_concurrency())));
  std::vector<std::future<Local>> futures;
  for (int w = 0; w < workers; ++w) {
    const int lo = spec.z_count * w / workers;
    const int hi = spec.z_count * (w + 1) / workers;
    futures.push_back(std::async(std::launch::async, scan, lo, hi));
  }
  Local best;
  for (auto& f : futures) {
    const Local local = f.get();
    if (local.ratio > best.ratio ||
        (local.ratio == best.ratio && std::tie(local.iz, local.iy) < std::tie(best.iz, best.iy)))
      best = local;
  }
  report.samples_used = static_cast<long>(spec.z_count) * static_cast<long>(ys.size());
  report.worst_ratio = best.ratio;
  report.worst_point.z =
      spec.z_count == 1 ? 0.0 : -spec.z_max + 2.0 * spec.z_max * best.iz / (spec.z_count - 1);
  report.worst_point.Y = ys[best.iy];

  polish_worst_point(A, sys, k, spec.z_max, report.worst_point.z, report.worst_point.Y,
                     report.worst_ratio);

  report.c_tilde = k > 0 ? -report.worst_ratio : 0.0;
  report.pass = k == 0 ? report.worst_ratio <= tolerance : report.worst_ratio <= -tolerance;
  return report;
}

namespace {

// Nelder-Mead on max-of-samples objectives; good enough at these dimensions.
struct NelderMead {
  int dim;
  int max_iterations;
  double f_tol = 1e-14;

  template <typename F>
  std::pair<std::vector<double>, double> minimize(F&& f, std::vector<double> x0,
                                                  double scale) const {
    const int n = dim;
    std::vector<std::vector<double>> pts(static_cast<size_t>(n) + 1, x0);
    std::vector<double> fv(static_cast<size_t>(n) + 1);
    for (int i = 1; i <= n; ++i) pts[static_cast<size_t>(i)][static_cast<size_t>(i - 1)] += scale;
    for (int i = 0; i <= n; ++i) fv[static_cast<size_t>(i)] = f(pts[static_cast<size_t>(i)]);

    auto order = [&] {
      std::vector<int> idx(static_cast<size_t>(n) + 1);
      for (int i = 0; i <= n; ++i) idx[static_cast<size_t>(i)] = i;
      std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return fv[static_cast<size_t>(a)] < fv[static_cast<size_t>(b)];
      });
      std::vector<std::vector<double>> p2;
      std::vector<double> f2;
      for (int i : idx) {
        p2.push_back(pts[static_cast<size_t>(i)]);
        f2.push_back(fv[static_cast<size_t>(i)]);
      }
      pts = std::move(p2);
      fv = std::move(f2);
    };

    for (int iter = 0; iter < max_iterations; ++iter) {
      order();
      if (std::abs(fv.back() - fv.front()) < f_tol * (1.0 + std::abs(fv.front()))) break;
      std::vector<double> centroid(static_cast<size_t>(n), 0.0);
      for (int i = 0; i < n; ++i)
        for (int d = 0; d < n; ++d)
          centroid[static_cast<size_t>(d)] += pts[static_cast<size_t>(i)][static_cast<size_t>(d)] / n;
      auto blend = [&](double t) {
        std::vector<double> x(static_cast<size_t>(n));
        for (int d = 0; d < n; ++d)
          x[static_cast<size_t>(d)] = centroid[static_cast<size_t>(d)] +
                                      t * (centroid[static_cast<size_t>(d)] -
                                           pts.back()[static_cast<size_t>(d)]);
        return x;
      };
      auto xr = blend(1.0);
      const double fr = f(xr);
      if (fr < fv.front()) {
        auto xe = blend(2.0);
        const double fe = f(xe);
        if (fe < fr) {
          pts.back() = xe;
          fv.back() = fe;
        } else {
          pts.back() = xr;
          fv.back() = fr;
        }
      } else if (fr < fv[static_cast<size_t>(n - 1)]) {
        pts.back() = xr;
        fv.back() = fr;
      } else {
        auto xc = blend(fr < fv.back() ? 0.5 : -0.5);
        const double fc = f(xc);
        if (fc < std::min(fr, fv.back())) {
          pts.back() = xc;
          fv.back() = fc;
        } else {
          for (int i = 1; i <= n; ++i) {
            for (int d = 0; d < n; ++d)
              pts[static_cast<size_t>(i)][static_cast<size_t>(d)] =
                  0.5 * (pts[static_cast<size_t>(i)][static_cast<size_t>(d)] +
                         pts[0][static_cast<size_t>(d)]);
            fv[static_cast<size_t>(i)] = f(pts[static_cast<size_t>(i)]);
          }
        }
      }
    }
    order();
    return {pts.front(), fv.front()};
  }
};

Eigen::MatrixXcd matrix_from_params(const std::vector<double>& p, int n, bool diagonal_only,
                                    double lambda_floor) {
  Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(n, n);
  size_t idx = 0;
  for (int i = 0; i < n; ++i) L(i, i) = p[idx++];
  if (!diagonal_only) {
    for (int i = 1; i < n; ++i)
      for (int j = 0; j < i; ++j) {
        const double re = p[idx++];
        const double im = p[idx++];
        L(i, j) = Complex(re, im);
      }
  }
  Eigen::MatrixXcd A = L * L.adjoint();
  A += lambda_floor * Eigen::MatrixXcd::Identity(n, n);
  // normalize to smallest eigenvalue 1 so reported strengths are comparable
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A, Eigen::EigenvaluesOnly);
  A /= es.eigenvalues().minCoeff();
  return A;
}

}  // namespace

std::string SearchResult::summary() const {
  std::ostringstream os;
  switch (status) {
    case Status::Found: os << "found matrix: "; break;
    case Status::CertifiedFailure: os << "no matrix; certified counterexample: "; break;
    case Status::NoConvergence: os << "search did not converge: "; break;
  }
  os << report.summary();
  return os.str();
}

SearchResult search_matrix(const ReducedSystem& sys, const SearchOptions& options) {
  const int n = sys.n_components();
  const int dim = options.diagonal_only ? n : n * n;

  // F^{c,red} does not depend on A: precompute it on the sample cloud once.
  struct Sample {
    double w0k;
    Eigen::VectorXcd Y;
    Eigen::VectorXcd f;
  };
  std::vector<Sample> cloud;
  const auto ys = sphere_samples(n, options.search_samples.sphere_count);
  for (int iz = 0; iz < options.search_samples.z_count; ++iz) {
    const double z = options.search_samples.z_count == 1
                         ? 0.0
                         : -options.search_samples.z_max +
                               2.0 * options.search_samples.z_max * iz /
                                   (options.search_samples.z_count - 1);
    const HyperbolaPoint w(z);
    for (const auto& y : ys) {
      Sample s;
      s.w0k = ipow(w.w0, options.k);
      s.Y = to_eigen(y);
      s.f = to_eigen(sys.eval_reduced(w, y));
      cloud.push_back(std::move(s));
    }
  }

  auto objective = [&](const std::vector<double>& p) {
    const Eigen::MatrixXcd A = matrix_from_params(p, n, options.diagonal_only, options.lambda_floor);
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& s : cloud) {
      const Complex pairing = (A * s.Y).dot(s.f);  // Eigen dot conjugates the left factor
      worst = std::max(worst, pairing.imag() / s.w0k);
    }
    return worst;
  };

  // restarts are independent; run them concurrently and pick the winner by
  // (value, restart index) so the outcome is deterministic
  std::mt19937 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> starts;
  for (int restart = 0; restart < options.restarts; ++restart) {
    std::vector<double> x0(static_cast<size_t>(dim));
    if (restart == 0) {
      for (int i = 0; i < n; ++i) x0[static_cast<size_t>(i)] = 1.0;  // L = identity
    } else {
      for (auto& v : x0) v = gauss(rng);
    }
    starts.push_back(std::move(x0));
  }
  NelderMead nm{dim, options.max_iterations};
  std::vector<std::future<std::pair<std::vector<double>, double>>> futures;
  for (const auto& x0 : starts)
    futures.push_back(std::async(std::launch::async, [&, x0] { return nm.minimize(objective, x0, 0.5); }));
  std::vector<double> best_params;
  double best_value = std::numeric_limits<double>::infinity();
  for (auto& f : futures) {
    auto [params, value] = f.get();
    if (value < best_value) {
      best_value = value;
      best_params = std::move(params);
    }
  }

  ConditionMatrix best(matrix_from_params(best_params, n, options.diagonal_only, options.lambda_floor));
  ConditionReport verdict =
      check_condition(best, sys, options.k, options.verify_samples, options.tolerance);

  SearchResult result{SearchResult::Status::NoConvergence, std::move(best), std::move(verdict)};
  if (result.report.pass) {
    result.status = SearchResult::Status::Found;
  } else if (result.report.worst_ratio > 100.0 * options.tolerance) {
    result.status = SearchResult::Status::CertifiedFailure;
  }
  return result;
}

}  // namespace kgres
