#pragma once

#include <complex>
#include <vector>

namespace fput {

using cplx = std::complex<double>;

/// Complex-to-complex FFT of fixed size, backed by FFTW. Plan creation is
/// serialized internally; instances are independent and safe to use from
/// different threads.
class Fft {
  public:
    explicit Fft(std::size_t n);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    std::size_t size() const { return n_; }
    // out = sum_j in[j] e^{-2 pi i j m / N}
    void forward(const std::vector<cplx>& in, std::vector<cplx>& out);
    // out = (1/N) sum_m in[m] e^{+2 pi i j m / N}
    void inverse(const std::vector<cplx>& in, std::vector<cplx>& out);

  private:
    std::size_t n_;
    void* plan_fwd_;
    void* plan_bwd_;
    cplx* buf_in_;
    cplx* buf_out_;
};

}  // namespace fput
