#include "kgres/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>
#include <stdexcept>

namespace kgres {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(int n) : n_(n) {
  if (n < 2) throw std::invalid_argument("transform size must be at least 2");
  std::lock_guard<std::mutex> lock(planner_mutex());
  real_buf_ = fftw_alloc_real(static_cast<size_t>(n));
  cplx_buf_ = fftw_alloc_complex(static_cast<size_t>(n / 2 + 1));
  // FFTW_ESTIMATE keeps planning deterministic run to run.
  plan_fwd_ = fftw_plan_dft_r2c_1d(n, real_buf_, static_cast<fftw_complex*>(cplx_buf_),
                                   FFTW_ESTIMATE);
  plan_bwd_ = fftw_plan_dft_c2r_1d(n, static_cast<fftw_complex*>(cplx_buf_), real_buf_,
                                   FFTW_ESTIMATE);
  if (!plan_fwd_ || !plan_bwd_) throw std::runtime_error("fftw plan creation failed");
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
  fftw_free(real_buf_);
  fftw_free(cplx_buf_);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  if (static_cast<int>(in.size()) != n_ || static_cast<int>(out.size()) != spectrum_size())
    throw std::invalid_argument("forward transform size mismatch");
  std::memcpy(real_buf_, in.data(), sizeof(double) * static_cast<size_t>(n_));
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  std::memcpy(out.data(), cplx_buf_, sizeof(fftw_complex) * static_cast<size_t>(spectrum_size()));
}

void RealFft::backward(std::span<const std::complex<double>> in, std::span<double> out) {
  if (static_cast<int>(in.size()) != spectrum_size() || static_cast<int>(out.size()) != n_)
    throw std::invalid_argument("backward transform size mismatch");
  std::memcpy(cplx_buf_, in.data(), sizeof(fftw_complex) * static_cast<size_t>(spectrum_size()));
  fftw_execute(static_cast<fftw_plan>(plan_bwd_));
  std::memcpy(out.data(), real_buf_, sizeof(double) * static_cast<size_t>(n_));
}

}  // namespace kgres
