#include "fput/spectral.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

namespace fput {

namespace {
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

Fft::Fft(std::size_t n) : n_(n) {
    std::lock_guard<std::mutex> lk(plan_mutex());
    buf_in_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * n));
    buf_out_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * n));
    plan_fwd_ = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(buf_in_),
                                 reinterpret_cast<fftw_complex*>(buf_out_), FFTW_FORWARD,
                                 FFTW_ESTIMATE);
    plan_bwd_ = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(buf_in_),
                                 reinterpret_cast<fftw_complex*>(buf_out_), FFTW_BACKWARD,
                                 FFTW_ESTIMATE);
}

Fft::~Fft() {
    std::lock_guard<std::mutex> lk(plan_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
    fftw_free(buf_in_);
    fftw_free(buf_out_);
}

void Fft::forward(const std::vector<cplx>& in, std::vector<cplx>& out) {
    std::memcpy(buf_in_, in.data(), sizeof(cplx) * n_);
    fftw_execute(static_cast<fftw_plan>(plan_fwd_));
    out.resize(n_);
    std::memcpy(out.data(), buf_out_, sizeof(cplx) * n_);
}

void Fft::inverse(const std::vector<cplx>& in, std::vector<cplx>& out) {
    std::memcpy(buf_in_, in.data(), sizeof(cplx) * n_);
    fftw_execute(static_cast<fftw_plan>(plan_bwd_));
    out.resize(n_);
    const double inv = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = buf_out_[i] * inv;
}

}  // namespace fput
