#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fput {

// Error kinds map 1:1 onto CLI exit codes.
enum class ErrorKind {
    config = 2,
    solver_failure = 3,
    coherence_lost = 4,
    convergence_failure = 5,
    invalid_window = 6,
    diverged = 7,
    domain = 8,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }
    int exit_code() const { return static_cast<int>(kind_) <= 8 ? code_table(kind_) : 1; }

  private:
    static int code_table(ErrorKind k) {
        switch (k) {
            case ErrorKind::config: return 2;
            case ErrorKind::solver_failure: return 3;
            case ErrorKind::coherence_lost: return 4;
            case ErrorKind::convergence_failure: return 5;
            default: return 1;
        }
    }
    ErrorKind kind_;
};

// 2x2 real matrix, row-major.
struct Mat2 {
    double a11 = 0, a12 = 0, a21 = 0, a22 = 0;

    double det() const { return a11 * a22 - a12 * a21; }

    Mat2 inverse() const {
        const double d = det();
        if (d == 0.0) throw Error(ErrorKind::coherence_lost, "singular 2x2 matrix");
        return {a22 / d, -a12 / d, -a21 / d, a11 / d};
    }

    friend Mat2 operator*(const Mat2& m, const Mat2& n) {
        return {m.a11 * n.a11 + m.a12 * n.a21, m.a11 * n.a12 + m.a12 * n.a22,
                m.a21 * n.a11 + m.a22 * n.a21, m.a21 * n.a12 + m.a22 * n.a22};
    }
    friend Mat2 operator-(const Mat2& m, const Mat2& n) {
        return {m.a11 - n.a11, m.a12 - n.a12, m.a21 - n.a21, m.a22 - n.a22};
    }
};

struct Vec2 {
    double x = 0, y = 0;
    friend Vec2 operator*(const Mat2& m, const Vec2& v) {
        return {m.a11 * v.x + m.a12 * v.y, m.a21 * v.x + m.a22 * v.y};
    }
    friend Vec2 operator+(const Vec2& a, const Vec2& b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(const Vec2& a, const Vec2& b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, const Vec2& a) { return {s * a.x, s * a.y}; }
};

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks; results must be
// written by index so the outcome is independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads);

// Least-squares slope/intercept of y against x.
struct LineFit {
    double slope = 0, intercept = 0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

inline double sq(double x) { return x * x; }

}  // namespace fput
