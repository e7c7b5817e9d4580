#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "kgres/reduced.hpp"

namespace kgres {

// Positive Hermitian matrix with cached extreme eigenvalues.
class ConditionMatrix {
 public:
  explicit ConditionMatrix(Eigen::MatrixXcd entries);
  static ConditionMatrix diagonal(const std::vector<double>& d);

  const Eigen::MatrixXcd& entries() const { return a_; }
  int size() const { return static_cast<int>(a_.rows()); }
  double smallest_eigenvalue() const { return lambda_min_; }
  double largest_eigenvalue() const { return lambda_max_; }

 private:
  Eigen::MatrixXcd a_;
  double lambda_min_ = 0.0;
  double lambda_max_ = 0.0;
};

// Im <A Y, F^{c,red}(w, Y)> with the scalar product conjugate-linear in its
// first slot, <P, Q> = sum_k conj(P_k) Q_k. Only this convention reproduces
// the worked dissipative example, where the pairing collapses onto
// -w0^3 (3 m1^4 |Y1|^4 + 3 m2^4 |Y2|^4 + 4 m1^2 m2^2 |Y1|^2 |Y2|^2).
double condition_value(const ConditionMatrix& A, const ReducedSystem& sys,
                       const HyperbolaPoint& w, std::span<const Complex> Y);

// Normalized ratio value / (w0^k |Y|^4); the quantity whose sign the
// structural conditions constrain.
double condition_ratio(const ConditionMatrix& A, const ReducedSystem& sys, int k,
                       double z, std::span<const Complex> Y);

struct SamplingSpec {
  double z_max = 5.0;
  int z_count = 21;
  int sphere_count = 256;  // low-discrepancy draws on the unit sphere of C^N
};

struct WorstPoint {
  double z = 0.0;
  ComplexVec Y;
};

struct ConditionReport {
  int k = 0;                  // 0: nonpositivity; 1 or 3: strict w0^k-weighted dissipativity
  bool pass = false;
  double worst_ratio = 0.0;   // max over samples (after polish) of the normalized ratio
  double c_tilde = 0.0;       // -worst_ratio, reported for k in {1,3}
  WorstPoint worst_point;
  long samples_used = 0;
  double tolerance = 1e-9;
  std::string summary() const;
};

// Samples the normalized ratio on a z-grid times deterministic unit-sphere
// points (low-discrepancy plus coordinate/phase extremes), then refines the
// worst point by coordinate ascent. A pass is "no violation found at this
// resolution", not a proof.
ConditionReport check_condition(const ConditionMatrix& A, const ReducedSystem& sys, int k,
                                const SamplingSpec& spec, double tolerance = 1e-9);

struct SearchOptions {
  int k = 0;
  bool diagonal_only = false;
  int restarts = 4;
  int max_iterations = 500;
  double lambda_floor = 1e-3;    // A = L L^H + floor * I before normalization
  SamplingSpec search_samples{5.0, 9, 96};
  SamplingSpec verify_samples{5.0, 21, 256};
  double tolerance = 1e-9;
  unsigned seed = 12345;
};

struct SearchResult {
  enum class Status { Found, CertifiedFailure, NoConvergence };
  Status status = Status::NoConvergence;
  ConditionMatrix matrix;   // best candidate, normalized to smallest eigenvalue 1
  ConditionReport report;   // verification report for `matrix`
  std::string summary() const;
};

// Derivative-free search for a matrix satisfying the structural condition:
// Nelder-Mead over the Cholesky-like parametrization with restarts. On
// failure the report's worst_point is a counterexample certificate for the
// returned candidate.
SearchResult search_matrix(const ReducedSystem& sys, const SearchOptions& options);

}  // namespace kgres
