#pragma once

#include <complex>
#include <span>

namespace kgres {

// RAII wrapper around double-precision FFTW r2c/c2r plans of a fixed size.
// Plan creation/destruction is serialized behind a global mutex; execution
// uses per-instance buffers, so distinct instances are safe concurrently.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return n_; }
  int spectrum_size() const { return n_ / 2 + 1; }

  // Unnormalized transforms: forward computes sum_j in_j e^{-2 pi i j k / n};
  // backward is its adjoint, so backward(forward(x)) = n * x.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  void backward(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  int n_;
  void* plan_fwd_;
  void* plan_bwd_;
  double* real_buf_;
  void* cplx_buf_;
};

}  // namespace kgres
