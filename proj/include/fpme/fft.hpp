#pragma once

// Thin RAII wrapper over FFTW's real-to-complex transforms for the 1d/2d
// lattices used here. Plans are created with FFTW_ESTIMATE, which is
// deterministic (no runtime measurement), and planning is serialized behind a
// mutex because the FFTW planner is not thread-safe. Each instance owns its
// aligned buffers; execution copies in and out, so a const instance may be
// shared across threads only if calls are externally serialized. The library
// runs single-threaded; plan objects are shared via shared_ptr by the
// operator plans, which never execute one instance concurrently.

#include <complex>
#include <cstddef>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace fpme {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealTransform {
 public:
  // logical real shape: n0 (x 1d) or n0 x n1 (2d, row-major)
  RealTransform(int dim, std::size_t n0, std::size_t n1 = 0)
      : dim_(dim), n0_(n0), n1_(dim == 2 ? n1 : 1) {
    if (dim != 1 && dim != 2) throw std::invalid_argument("RealTransform: dim must be 1 or 2");
    if (n0_ == 0 || (dim_ == 2 && n1_ == 0))
      throw std::invalid_argument("RealTransform: empty shape");
    real_size_ = n0_ * n1_;
    complex_size_ = dim_ == 1 ? n0_ / 2 + 1 : n0_ * (n1_ / 2 + 1);
    rbuf_ = static_cast<double*>(fftw_malloc(sizeof(double) * real_size_));
    cbuf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * complex_size_));
    if (!rbuf_ || !cbuf_) {
      release();
      throw std::bad_alloc();
    }
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    if (dim_ == 1) {
      fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n0_), rbuf_, cbuf_, FFTW_ESTIMATE);
      bwd_ = fftw_plan_dft_c2r_1d(static_cast<int>(n0_), cbuf_, rbuf_, FFTW_ESTIMATE);
    } else {
      fwd_ = fftw_plan_dft_r2c_2d(static_cast<int>(n0_), static_cast<int>(n1_), rbuf_, cbuf_,
                                  FFTW_ESTIMATE);
      bwd_ = fftw_plan_dft_c2r_2d(static_cast<int>(n0_), static_cast<int>(n1_), cbuf_, rbuf_,
                                  FFTW_ESTIMATE);
    }
    if (!fwd_ || !bwd_) {
      release();
      throw std::runtime_error("RealTransform: FFTW planning failed");
    }
  }

  RealTransform(const RealTransform&) = delete;
  RealTransform& operator=(const RealTransform&) = delete;

  ~RealTransform() { release(); }

  std::size_t real_size() const { return real_size_; }
  std::size_t complex_size() const { return complex_size_; }
  std::size_t rows() const { return n0_; }
  std::size_t packed_cols() const { return dim_ == 1 ? complex_size_ : n1_ / 2 + 1; }

  // unnormalized forward transform
  void forward(const double* in, std::complex<double>* out) const {
    for (std::size_t i = 0; i < real_size_; ++i) rbuf_[i] = in[i];
    fftw_execute(fwd_);
    for (std::size_t i = 0; i < complex_size_; ++i)
      out[i] = std::complex<double>(cbuf_[i][0], cbuf_[i][1]);
  }

  // inverse transform including the 1/(n0*n1) normalization
  void backward(const std::complex<double>* in, double* out) const {
    for (std::size_t i = 0; i < complex_size_; ++i) {
      cbuf_[i][0] = in[i].real();
      cbuf_[i][1] = in[i].imag();
    }
    fftw_execute(bwd_);
    const double scale = 1.0 / static_cast<double>(real_size_);
    for (std::size_t i = 0; i < real_size_; ++i) out[i] = rbuf_[i] * scale;
  }

 private:
  void release() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    if (fwd_) fftw_destroy_plan(fwd_);
    if (bwd_) fftw_destroy_plan(bwd_);
    if (rbuf_) fftw_free(rbuf_);
    if (cbuf_) fftw_free(cbuf_);
    fwd_ = bwd_ = nullptr;
    rbuf_ = nullptr;
    cbuf_ = nullptr;
  }

  int dim_;
  std::size_t n0_, n1_, real_size_ = 0, complex_size_ = 0;
  double* rbuf_ = nullptr;
  fftw_complex* cbuf_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

}  // namespace fpme
