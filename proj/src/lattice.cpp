#include "fput/lattice.hpp"

#include <algorithm>
#include <cmath>

namespace fput {

double LatticeField::boundary_mass(std::size_t pad) const {
    const std::size_t n = size();
    pad = std::min(pad, n);
    double m = 0.0;
    for (std::size_t i = 0; i < pad; ++i) {
        m = std::max({m, std::abs(r[i]), std::abs(p[i]), std::abs(r[n - 1 - i]),
                      std::abs(p[n - 1 - i])});
    }
    return m;
}

double LatticeField::l2_norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += r[i] * r[i] + p[i] * p[i];
    return std::sqrt(s);
}

double LatticeField::sup_norm() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) m = std::max({m, std::abs(r[i]), std::abs(p[i])});
    return m;
}

SpringCoefficients::SpringCoefficients(long jmin, std::vector<double> k, double sig, double alpha)
    : j_min(jmin), kappa(std::move(k)), sigma(sig), alpha_support(alpha) {
    if (sigma < 0 || alpha_support <= 0)
        throw Error(ErrorKind::config, "sigma must be >= 0 and alpha_support > 0");
    if (sigma * alpha_support >= 1.0)
        throw Error(ErrorKind::config, "sigma * alpha_support must be < 1");
    for (double v : kappa) {
        if (std::abs(v) > alpha_support * (1.0 + 1e-12))
            throw Error(ErrorKind::config, "kappa value outside its support interval");
    }
}

std::vector<double> diff_forward(const std::vector<double>& f) {
    if (f.size() < 2) throw Error(ErrorKind::invalid_window, "diff_forward needs length >= 2");
    std::vector<double> out(f.size());
    for (std::size_t j = 0; j + 1 < f.size(); ++j) out[j] = f[j + 1] - f[j];
    out[f.size() - 1] = -f[f.size() - 1];
    return out;
}

std::vector<double> diff_backward(const std::vector<double>& f) {
    if (f.size() < 2) throw Error(ErrorKind::invalid_window, "diff_backward needs length >= 2");
    std::vector<double> out(f.size());
    out[0] = f[0];
    for (std::size_t j = 1; j < f.size(); ++j) out[j] = f[j] - f[j - 1];
    return out;
}

LatticeField apply_J(const LatticeField& u) {
    LatticeField out(u.j_min, u.size());
    out.r = diff_forward(u.p);
    out.p = diff_backward(u.r);
    return out;
}

std::vector<double> prefix_sum_inclusive(const std::vector<double>& f) {
    std::vector<double> out(f.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        acc += f[j];
        out[j] = acc;
    }
    return out;
}

std::vector<double> prefix_sum_strict(const std::vector<double>& f) {
    std::vector<double> out(f.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        out[j] = acc;
        acc += f[j];
    }
    return out;
}

LatticeField apply_J_inverse(const LatticeField& u, double boundary_tol) {
    const std::size_t guard = std::min<std::size_t>(3, u.size());
    double left = 0.0;
    for (std::size_t i = 0; i < guard; ++i)
        left = std::max({left, std::abs(u.r[i]), std::abs(u.p[i])});
    if (left > boundary_tol)
        throw Error(ErrorKind::invalid_window,
                    "apply_J_inverse: left-boundary mass above tolerance, prefix sums truncated");
    LatticeField out(u.j_min, u.size());
    out.r = prefix_sum_inclusive(u.p);
    out.p = prefix_sum_strict(u.r);
    return out;
}

void fput_rhs(const LatticeField& u, const SpringCoefficients& coeffs, LatticeField& out) {
    const std::size_t n = u.size();
    if (coeffs.j_min != u.j_min || coeffs.size() != n)
        throw Error(ErrorKind::invalid_window, "fput_rhs: window mismatch between field and coefficients");
    out.j_min = u.j_min;
    out.r.resize(n);
    out.p.resize(n);
    const double sigma = coeffs.sigma;
    // rdot = d+ p
    for (std::size_t j = 0; j + 1 < n; ++j) out.r[j] = u.p[j + 1] - u.p[j];
    out.r[n - 1] = -u.p[n - 1];
    // pdot = d-[(1 + sigma kappa) r + r^2]
    double prev = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double g = (1.0 + sigma * coeffs.kappa[j]) * u.r[j] + u.r[j] * u.r[j];
        out.p[j] = g - prev;
        prev = g;
    }
}

LatticeField fput_rhs(const LatticeField& u, const SpringCoefficients& coeffs) {
    LatticeField out;
    fput_rhs(u, coeffs, out);
    return out;
}

double hamiltonian(const LatticeField& u, const SpringCoefficients& coeffs) {
    const std::size_t n = u.size();
    if (coeffs.j_min != u.j_min || coeffs.size() != n)
        throw Error(ErrorKind::invalid_window, "hamiltonian: window mismatch");
    double h = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double r = u.r[j];
        h += 0.5 * u.p[j] * u.p[j] + 0.5 * (1.0 + coeffs.sigma * coeffs.kappa[j]) * r * r +
             r * r * r / 3.0;
    }
    if (!std::isfinite(h)) throw Error(ErrorKind::diverged, "hamiltonian is not finite");
    return h;
}

namespace {

void axpy(LatticeField& y, double a, const LatticeField& x) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        y.r[i] += a * x.r[i];
        y.p[i] += a * x.p[i];
    }
}

void rk4_step(LatticeField& u, const SpringCoefficients& coeffs, double dt, LatticeField& k1,
              LatticeField& k2, LatticeField& k3, LatticeField& k4, LatticeField& tmp) {
    fput_rhs(u, coeffs, k1);
    tmp = u;
    axpy(tmp, 0.5 * dt, k1);
    fput_rhs(tmp, coeffs, k2);
    tmp = u;
    axpy(tmp, 0.5 * dt, k2);
    fput_rhs(tmp, coeffs, k3);
    tmp = u;
    axpy(tmp, dt, k3);
    fput_rhs(tmp, coeffs, k4);
    const double w = dt / 6.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        u.r[i] += w * (k1.r[i] + 2.0 * k2.r[i] + 2.0 * k3.r[i] + k4.r[i]);
        u.p[i] += w * (k1.p[i] + 2.0 * k2.p[i] + 2.0 * k3.p[i] + k4.p[i]);
    }
}

}  // namespace

LatticeField integrate(const LatticeField& u0, const SpringCoefficients& coeffs,
                       const IntegrateOptions& opt, const Observer& observer) {
    if (!(std::abs(opt.dt) > 0.0) || std::abs(opt.dt) > 0.5)
        throw Error(ErrorKind::domain, "integrate: |dt| must be in (0, 0.5]");
    if (opt.t_end < 0.0) throw Error(ErrorKind::domain, "integrate: t_end must be >= 0");

    LatticeField u = u0;
    LatticeField k1(u.j_min, u.size()), k2(u.j_min, u.size()), k3(u.j_min, u.size()),
        k4(u.j_min, u.size()), tmp(u.j_min, u.size());

    std::vector<double> events = opt.event_times;
    std::sort(events.begin(), events.end());
    std::size_t next_event = 0;

    // dt < 0 integrates the time-reversed system over the same duration.
    const double dir = opt.dt < 0 ? -1.0 : 1.0;
    const double adt = std::abs(opt.dt);

    double t = 0.0;
    std::size_t step = 0;
    if (observer) observer(t, u);
    const double eps = 1e-12;
    while (t < opt.t_end - eps) {
        double h = std::min(adt, opt.t_end - t);
        bool at_event = false;
        if (next_event < events.size() && events[next_event] <= t + eps) ++next_event;
        if (next_event < events.size() && t + h > events[next_event] - eps) {
            h = events[next_event] - t;
            at_event = true;
            ++next_event;
        }
        rk4_step(u, coeffs, dir * h, k1, k2, k3, k4, tmp);
        t += h;
        ++step;
        if (step % opt.nan_check_stride == 0 || t >= opt.t_end - eps) {
            if (!std::isfinite(u.r[u.size() / 2]) || !std::isfinite(u.sup_norm()))
                throw Error(ErrorKind::diverged, "integrate: state diverged (NaN/overflow)");
        }
        if (observer && (at_event || step % opt.observer_stride == 0 || t >= opt.t_end - eps))
            observer(t, u);
    }
    return u;
}

Window simulation_window(double c_star, double t_end, long pad) {
    Window w;
    w.j_min = -static_cast<long>(std::ceil(t_end)) - pad;
    const long j_max = static_cast<long>(std::ceil(c_star * t_end)) + pad;
    w.width = static_cast<std::size_t>(j_max - w.j_min + 1);
    return w;
}

double inner(const LatticeField& f, const LatticeField& g) {
    if (f.j_min != g.j_min || f.size() != g.size())
        throw Error(ErrorKind::invalid_window, "inner: window mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f.r[i] * g.r[i] + f.p[i] * g.p[i];
    return s;
}

}  // namespace fput
