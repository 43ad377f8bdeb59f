#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fput/io.hpp"
#include "fput/modulation.hpp"
#include "fput/pipelines.hpp"

using namespace fput;

namespace {

struct Common {
    std::string config_file;
    std::vector<std::string> sets;
    std::string out;
    // dedicated flags; NaN / sentinel = not given
    double c = 0, sigma = -1, t_end = -1, dt = -1, tau_end = -1;
    long seed = -1, realizations = -1, threads = -1, c_grid = -1, p_samples = -1;
    std::string variant, snapshots, pipeline, rate_table_path;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_file, "key=value configuration file");
    cmd->add_option("--set", c.sets, "override a configuration key (key=value)")
        ->take_all();
    cmd->add_option("-o,--out", c.out, "output directory");
    cmd->add_option("--threads", c.threads, "worker cap for parallel stages");
}

Config build_config(const Common& cm, const std::string& subcommand) {
    Config cfg;
    if (!cm.config_file.empty()) cfg.load_file(cm.config_file);
    for (const auto& kv : cm.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::config, "--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    auto setnum = [&](const char* key, double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        cfg.set(key, buf);
    };
    if (cm.c > 0) setnum("c_star", cm.c);
    if (cm.sigma >= 0) setnum("sigma", cm.sigma);
    if (cm.t_end >= 0) setnum("t_end", cm.t_end);
    if (cm.dt > 0) setnum("dt", cm.dt);
    if (cm.tau_end > 0) setnum("tau_end", cm.tau_end);
    if (cm.seed >= 0) cfg.set("seed", std::to_string(cm.seed));
    if (cm.realizations >= 0) cfg.set("realizations", std::to_string(cm.realizations));
    if (cm.threads >= 0) cfg.set("threads", std::to_string(cm.threads));
    if (cm.c_grid >= 0) cfg.set("c_grid", std::to_string(cm.c_grid));
    if (cm.p_samples >= 0) cfg.set("p_samples", std::to_string(cm.p_samples));
    if (!cm.variant.empty()) cfg.set("variant", cm.variant);
    if (!cm.snapshots.empty()) cfg.set("snapshots", cm.snapshots);
    if (!cm.pipeline.empty()) cfg.set("pipeline", cm.pipeline);
    if (!cm.out.empty()) cfg.set("out", cm.out);
    if (cfg.get_string("out").empty()) {
        const char* root = std::getenv("FPUT_OUT_ROOT");
        cfg.set("out", (root ? std::string(root) : std::string(".")) + "/out-" + subcommand);
    }
    return cfg;
}

EnsembleConfig ensemble_config(const Config& cfg) {
    EnsembleConfig ec;
    const std::string law = cfg.get_string("distribution");
    if (law == "uniform")
        ec.law = KappaLaw::uniform_pm_sqrt3;
    else if (law == "rademacher")
        ec.law = KappaLaw::rademacher;
    else if (law == "truncated_gaussian")
        ec.law = KappaLaw::truncated_gaussian;
    else
        throw Error(ErrorKind::config, "unknown distribution '" + law + "'");
    ec.trunc_alpha = cfg.get_double("trunc_alpha");
    ec.sigma = cfg.get_double("sigma");
    ec.c_star = cfg.get_double("c_star");
    ec.realizations = static_cast<std::size_t>(cfg.get_long("realizations"));
    ec.master_seed = static_cast<std::uint64_t>(cfg.get_long("seed"));
    return ec;
}

std::vector<TailVariant> variants_of(const Config& cfg) {
    const std::string v = cfg.get_string("variant");
    if (v == "full") return {TailVariant::full};
    if (v == "homogeneous") return {TailVariant::homogeneous};
    if (v == "both") return {TailVariant::full, TailVariant::homogeneous};
    throw Error(ErrorKind::config, "variant must be full | homogeneous | both");
}

Window padded_window(const Config& cfg) {
    const double c_star = cfg.get_double("c_star");
    const double t_end = cfg.get_double("t_end");
    Window win = simulation_window(c_star, t_end, cfg.get_long("pad"));
    // widen by the wave-frame support so fits near the edges stay clean
    const long extra = static_cast<long>(std::ceil(46.0 / ProfileFamily::epsilon_of(c_star))) + 10;
    win.j_min -= extra;
    win.width += static_cast<std::size_t>(2 * extra);
    return win;
}

int cmd_profile(const Config& cfg) {
    const std::string out = cfg.get_string("out");
    ensure_dir(out);
    const double c = cfg.get_double("c_star");
    ProfileSolution prof;
    if (cfg.get_long("profile_n") > 0 && cfg.get_double("profile_l") > 0)
        prof = solve_profile(c, static_cast<std::size_t>(cfg.get_long("profile_n")),
                             cfg.get_double("profile_l"));
    else
        prof = solve_profile(c);
    const auto der = profile_derivatives(c);
    const auto alphas = compute_alphas(c);
    write_profile_csv(out + "/profile.csv", prof, der);
    CsvWriter summary(out + "/profile_summary.csv",
                      {"c", "epsilon", "L", "N", "residual", "max_r", "alpha0", "alpha1",
                       "iterations"});
    summary.row({prof.c, prof.epsilon, prof.L, static_cast<double>(prof.N), prof.residual,
                 prof.max_r(), alphas.alpha0, alphas.alpha1,
                 static_cast<double>(prof.iterations)});
    write_manifest(out, cfg, "profile");
    std::printf("profile c=%.6g residual=%.3e alpha0=%.8g alpha1=%.8g -> %s\n", c, prof.residual,
                alphas.alpha0, alphas.alpha1, out.c_str());
    return 0;
}

int cmd_simulate(const Config& cfg, bool with_fit) {
    const std::string out = cfg.get_string("out");
    ensure_dir(out);
    const double c_star = cfg.get_double("c_star");
    const Window win = padded_window(cfg);
    auto ec = ensemble_config(cfg);
    auto coeffs = sample_kappa(ec, 0, win);
    auto fam = make_family(c_star, cfg.get_double("family_margin"), cfg.get_double("family_up"),
                           static_cast<int>(cfg.get_long("family_nodes")));
    auto prof = solve_profile(c_star);

    SimulateOptions sopt;
    sopt.dt = cfg.get_double("dt");
    sopt.t_end = cfg.get_double("t_end");
    sopt.fit_stride = cfg.get_double("fit_stride");
    sopt.snapshot_times = cfg.get_list("snapshots");
    sopt.snapshot_sink = [&](double t, const LatticeField& u) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s/snapshot_t%g.csv", out.c_str(), t);
        CsvWriter snap(name, {"j", "r", "p"});
        for (std::size_t i = 0; i < u.size(); ++i)
            snap.row({static_cast<double>(u.j_min + static_cast<long>(i)), u.r[i], u.p[i]});
    };

    if (!with_fit) {
        // plain integration with snapshots and an energy log
        LatticeField u0 = prof.sample_lattice(0.0, win);
        const double h0 = hamiltonian(u0, coeffs);
        CsvWriter energy(out + "/energy.csv", {"t", "H", "H_rel_drift"});
        IntegrateOptions iopt;
        iopt.dt = sopt.dt;
        iopt.t_end = sopt.t_end;
        iopt.observer_stride = static_cast<std::size_t>(cfg.get_long("observer_stride")) * 10;
        iopt.event_times = sopt.snapshot_times;
        integrate(u0, coeffs, iopt, [&](double t, const LatticeField& u) {
            for (double ts : sopt.snapshot_times)
                if (std::abs(ts - t) < 1e-9) sopt.snapshot_sink(t, u);
            const double h = hamiltonian(u, coeffs);
            energy.row({t, h, std::abs(h - h0) / std::abs(h0)});
        });
        write_manifest(out, cfg, "simulate");
        std::printf("simulate t_end=%g window=[%ld,%ld] -> %s\n", sopt.t_end, win.j_min,
                    win.j_min + static_cast<long>(win.width) - 1, out.c_str());
        return 0;
    }

    auto traj = simulate_and_fit(fam, prof, coeffs, c_star, sopt);
    CsvWriter tcsv(out + "/trajectory.csv",
                   {"t", "gamma", "c", "xi", "eta_l2", "eta_weighted_l2", "ortho_resid_1",
                    "ortho_resid_2"});
    for (std::size_t i = 0; i < traj.t.size(); ++i)
        tcsv.row({traj.t[i], traj.gamma[i], traj.c[i], traj.xi[i], traj.eta_l2[i],
                  traj.eta_weighted[i], traj.ortho_dxi[i], traj.ortho_dc[i]});
    write_manifest(out, cfg, "fit");
    std::printf("fit t_end=%g final c=%.8g -> %s\n", sopt.t_end, traj.c.back(), out.c_str());
    return 0;
}

int cmd_modulate(const Config& cfg) {
    const std::string out = cfg.get_string("out");
    ensure_dir(out);
    const double c_star = cfg.get_double("c_star");
    const Window win = padded_window(cfg);
    auto ec = ensemble_config(cfg);
    auto coeffs = sample_kappa(ec, 0, win);
    auto fam = make_family(c_star, cfg.get_double("family_margin"), cfg.get_double("family_up"),
                           static_cast<int>(cfg.get_long("family_nodes")));

    ModulationState init;
    init.c = c_star;
    init.eta = LatticeField(win.j_min, win.width);
    CsvWriter tcsv(out + "/trajectory_mod.csv",
                   {"t", "gamma", "c", "xi", "eta_l2", "eta_weighted_l2", "ortho_resid_1",
                    "ortho_resid_2"});
    integrate_modulation(init, coeffs, fam, cfg.get_double("dt"), cfg.get_double("t_end"),
                         [&](const ModObserverPoint& p) {
                             tcsv.row({p.t, p.gamma, p.c, p.xi, p.eta_l2, p.eta_weighted,
                                       p.ortho_dxi, p.ortho_dc});
                         },
                         static_cast<std::size_t>(cfg.get_long("observer_stride")));
    write_manifest(out, cfg, "modulate");
    std::printf("modulate t_end=%g -> %s\n", cfg.get_double("t_end"), out.c_str());
    return 0;
}

int cmd_expand(const Config& cfg) {
    const std::string out = cfg.get_string("out");
    ensure_dir(out);
    const double c_star = cfg.get_double("c_star");
    const Window win = padded_window(cfg);
    auto ec = ensemble_config(cfg);
    auto coeffs = sample_kappa(ec, 0, win);
    auto fam = make_family(c_star, cfg.get_double("family_margin"), cfg.get_double("family_up"),
                           static_cast<int>(cfg.get_long("family_nodes")));

    CsvWriter csv(out + "/expansion.csv",
                  {"t", "c1", "gamma1_I", "gamma1_II", "gamma2", "c2", "variant"});
    for (auto variant : variants_of(cfg)) {
        auto run = second_order_path(fam, coeffs, c_star, variant, cfg.get_double("dt"),
                                     cfg.get_double("t_end"),
                                     static_cast<std::size_t>(cfg.get_long("observer_stride")));
        for (std::size_t i = 0; i < run.second.t.size(); ++i)
            csv.row({run.second.t[i], run.first.c1[i], run.first.gamma1_I[i],
                     run.first.gamma1_II[i], run.second.gamma2[i], run.second.c2[i],
                     variant == TailVariant::full ? 0.0 : 1.0});
    }
    write_manifest(out, cfg, "expand");
    std::printf("expand t_end=%g -> %s (variant column: 0=full, 1=homogeneous)\n",
                cfg.get_double("t_end"), out.c_str());
    return 0;
}

int cmd_tail(const Config& cfg) {
    const std::string out = cfg.get_string("out");
    ensure_dir(out);
    const double c_star = cfg.get_double("c_star");
    const Window win = padded_window(cfg);
    auto ec = ensemble_config(cfg);
    auto coeffs = sample_kappa(ec, 0, win);
    auto fam = make_family(c_star, cfg.get_double("family_margin"), cfg.get_double("family_up"),
                           static_cast<int>(cfg.get_long("family_nodes")));
    auto tab = fam.tables_at(c_star);
    const double dt = cfg.get_double("dt"), t_end = cfg.get_double("t_end");
    const std::size_t stride = static_cast<std::size_t>(cfg.get_long("observer_stride"));

    std::vector<double> grid;
    std::vector<LatticeField> full_snaps;
    integrate_tail(*tab, coeffs, c_star, TailVariant::full, dt, t_end, win,
                   [&](double t, const LatticeField& eta) {
                       grid.push_back(t);
                       full_snaps.push_back(eta);
                   },
                   stride);
    CsvWriter csv(out + "/tail.csv", {"t", "eta1_l2", "eta1h_l2", "rel_diff"});
    std::size_t k = 0;
    integrate_tail(*tab, coeffs, c_star, TailVariant::homogeneous, dt, t_end, win,
                   [&](double t, const LatticeField& etah) {
                       if (k >= grid.size() || std::abs(grid[k] - t) > 1e-9) return;
                       const LatticeField& eta = full_snaps[k];
                       double d2 = 0;
                       for (std::size_t i = 0; i < eta.size(); ++i)
                           d2 += sq(eta.r[i] - etah.r[i]) + sq(eta.p[i] - etah.p[i]);
                       const double n1 = eta.l2_norm(), n2 = etah.l2_norm();
                       csv.row({t, n1, n2,
                                (n1 + n2) > 0 ? std::sqrt(d2) / (n1 + n2) : 0.0});
                       ++k;
                   },
                   stride);
    write_manifest(out, cfg, "tail");
    std::printf("tail t_end=%g -> %s\n", t_end, out.c_str());
    return 0;
}

void write_limit_response(const std::string& path, const LimitResponse& L) {
    std::ofstream f(path);
    if (!f) throw Error(ErrorKind::config, "cannot open " + path);
    f << "# variant=" << variant_name(L.variant) << " c_star=" << L.c_star << " p=" << L.p
      << " a=" << L.a << " Jmax=" << L.Jmax << " rate_q=" << L.rate_q
      << " n_converged=" << L.n_converged << "\n";
    f << "j,m,R_r,R_p\n";
    char buf[160];
    for (long m = -L.Jmax; m <= L.Jmax; ++m)
        for (long j = -L.Jmax; j <= L.Jmax; ++j) {
            std::snprintf(buf, sizeof(buf), "%ld,%ld,%.17g,%.17g\n", j, m, L.R_r(j, m),
                          L.R_p(j, m));
            f << buf;
        }
}

int cmd_response(const Config& cfg) {
    const std::string out = cfg.get_string("out");
    ensure_dir(out);
    const double c_star = cfg.get_double("c_star");
    auto fam = make_family(c_star, 0.002, 0.002, 7);
    auto tab = fam.tables_at(c_star);
    const int P = static_cast<int>(cfg.get_long("p_samples"));
    std::vector<double> p_grid;
    for (int k = 0; k < P; ++k) p_grid.push_back(static_cast<double>(k) / P);
    LimitOptions lopt;
    lopt.tol = cfg.get_double("limit_tol");
    lopt.n0 = static_cast<int>(cfg.get_long("n0"));
    lopt.dn = static_cast<int>(cfg.get_long("dn"));
    lopt.n_cap = static_cast<int>(cfg.get_long("n_cap"));
    lopt.Jmax = cfg.get_long("jmax");
    lopt.dt = cfg.get_double("dt");

    CsvWriter conv(out + "/convergence.csv", {"variant", "p", "n", "distance"});
    std::vector<LimitResponse> for_tail;
    for (auto variant : variants_of(cfg)) {
        auto lims = response_limit_grid(*tab, c_star, variant, p_grid, lopt);
        for (std::size_t i = 0; i < lims.size(); ++i) {
            char name[128];
            std::snprintf(name, sizeof(name), "%s/rinf_%s_p%02zu.csv", out.c_str(),
                          variant_name(variant), i);
            write_limit_response(name, lims[i]);
            for (std::size_t q = 0; q < lims[i].distances.size(); ++q)
                conv.row({variant == TailVariant::full ? 0.0 : 1.0, lims[i].p,
                          lims[i].shift_n[q], lims[i].distances[q]});
        }
        if (variant == variants_of(cfg).front()) for_tail = lims;
    }

    // limiting-tail sample and standard deviation on the phase-aligned x-grid
    auto ec = ensemble_config(cfg);
    EnsembleConfig zc = ec;
    zc.master_seed = static_cast<std::uint64_t>(cfg.get_long("zeta_seed"));
    auto zeta = [&](long q) { return kappa_value(zc, 0, q); };
    const long x_lo = cfg.get_long("x_lo"), x_hi = cfg.get_long("x_hi");
    auto curves = limiting_tail(for_tail, zeta, x_lo, x_hi);
    CsvWriter tailcsv(out + "/eta_inf.csv", {"x", "r", "p", "std_r", "std_p"});
    for (std::size_t i = 0; i < curves.x.size(); ++i)
        tailcsv.row({curves.x[i], curves.r[i], curves.p[i], curves.std_r[i], curves.std_p[i]});

    write_manifest(out, cfg, "response");
    std::printf("response c=%.6g %d phases -> %s\n", c_star, P, out.c_str());
    return 0;
}

int cmd_rate(const Config& cfg) {
    const std::string out = cfg.get_string("out");
    ensure_dir(out);
    const int nc = static_cast<int>(cfg.get_long("c_grid"));
    const double c_min = cfg.get_double("c_min"), c_max = cfg.get_double("c_max");
    const int P = static_cast<int>(cfg.get_long("p_samples"));
    const int threads = static_cast<int>(cfg.get_long("threads"));
    const auto variants = variants_of(cfg);

    std::vector<double> cs;
    for (int i = 0; i < nc; ++i) {
        const double f = nc == 1 ? 0.0 : static_cast<double>(i) / (nc - 1);
        cs.push_back(1.0 + (c_min - 1.0) * std::pow((c_max - 1.0) / (c_min - 1.0), f));
    }

    struct Job {
        double c;
        TailVariant variant;
    };
    std::vector<Job> jobs;
    for (double c : cs)
        for (auto v : variants) jobs.push_back({c, v});
    std::vector<AttenuationRate> rates(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) {
        auto fam = make_family(jobs[i].c, 0.002, 0.002, 7);
        LimitOptions lopt;
        lopt.tol = cfg.get_double("limit_tol");
        rates[i] = attenuation_rate(fam, jobs[i].c, jobs[i].variant, P, lopt);
    }, threads);

    CsvWriter csv(out + "/rate_table.csv", {"c", "Q_gamma", "Q_c", "variant", "p_samples"});
    CsvWriter diag(out + "/p_integrand.csv", {"c", "variant", "p", "integrand_gamma",
                                              "integrand_c"});
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        csv.row({rates[i].c, rates[i].Q_gamma, rates[i].Q_c,
                 rates[i].variant == TailVariant::full ? 0.0 : 1.0,
                 static_cast<double>(rates[i].p_samples)});
        for (std::size_t k = 0; k < rates[i].p_grid.size(); ++k)
            diag.row({rates[i].c, rates[i].variant == TailVariant::full ? 0.0 : 1.0,
                      rates[i].p_grid[k], rates[i].integrand_gamma[k],
                      rates[i].integrand_c[k]});
    }
    write_manifest(out, cfg, "rate");
    std::printf("rate table: %d speeds x %zu variants -> %s\n", nc, variants.size(), out.c_str());
    return 0;
}

RateTable load_rate_table(const std::string& path, TailVariant variant) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorKind::config, "cannot open rate table " + path);
    std::string line;
    std::getline(f, line);  // header
    RateTable table;
    while (std::getline(f, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() < 5) continue;
        const TailVariant v = row[3] == 0.0 ? TailVariant::full : TailVariant::homogeneous;
        if (v != variant) continue;
        table.c.push_back(row[0]);
        table.Q_c.push_back(row[2]);
    }
    // ascending in c
    std::vector<std::size_t> idx(table.c.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return table.c[a] < table.c[b]; });
    RateTable sorted;
    for (auto i : idx) {
        sorted.c.push_back(table.c[i]);
        sorted.Q_c.push_back(table.Q_c[i]);
    }
    return sorted;
}

int cmd_limit_ode(const Config& cfg, const std::string& rate_path) {
    const std::string out = cfg.get_string("out");
    ensure_dir(out);
    const double c_star = cfg.get_double("c_star");
    const double tau_end = cfg.get_double("tau_end");
    const std::string path = rate_path.empty() ? out + "/rate_table.csv" : rate_path;

    auto full = load_rate_table(path, TailVariant::full);
    auto homog = load_rate_table(path, TailVariant::homogeneous);
    if (full.c.empty() && homog.c.empty())
        throw Error(ErrorKind::config, "rate table has no rows: " + path);
    LimitOdePath pf, ph;
    if (!full.c.empty()) pf = integrate_limit_ode(full, c_star, tau_end, cfg.get_double("dtau"));
    if (!homog.c.empty()) ph = integrate_limit_ode(homog, c_star, tau_end, cfg.get_double("dtau"));
    CsvWriter csv(out + "/c_lim.csv", {"tau", "c_lim", "c_lim_h"});
    const std::size_t n = std::max(pf.tau.size(), ph.tau.size());
    for (std::size_t i = 0; i < n; ++i)
        csv.row({i < pf.tau.size() ? pf.tau[i] : ph.tau[i],
                 i < pf.c_lim.size() ? pf.c_lim[i] : std::nan(""),
                 i < ph.c_lim.size() ? ph.c_lim[i] : std::nan("")});
    write_manifest(out, cfg, "limit-ode");
    std::printf("limit-ode tau_end=%g -> %s\n", tau_end, out.c_str());
    return 0;
}

int cmd_ensemble(const Config& cfg) {
    const std::string out = cfg.get_string("out");
    ensure_dir(out);
    const double c_star = cfg.get_double("c_star");
    const double sigma = cfg.get_double("sigma");
    const double dt = cfg.get_double("dt"), t_end = cfg.get_double("t_end");
    const double stride = cfg.get_double("fit_stride");
    const int threads = static_cast<int>(cfg.get_long("threads"));
    auto ec = ensemble_config(cfg);
    const Window win = padded_window(cfg);
    const std::string pipeline = cfg.get_string("pipeline");

    std::vector<double> grid;
    for (double t = 0; t <= t_end + 1e-9; t += stride) grid.push_back(t);

    EnsembleStats stats;
    if (pipeline == "direct-fit") {
        auto fam = make_family(c_star, cfg.get_double("family_margin"),
                               cfg.get_double("family_up"),
                               static_cast<int>(cfg.get_long("family_nodes")));
        auto prof = solve_profile(c_star);
        SimulateOptions sopt;
        sopt.dt = dt;
        sopt.t_end = t_end;
        sopt.fit_stride = stride;
        stats = run_ensemble(ec, grid, {"c_fit", "gamma_fit"},
                             [&](std::uint64_t q) {
                                 auto coeffs = sample_kappa(ec, q, win);
                                 auto traj = simulate_and_fit(fam, prof, coeffs, c_star, sopt);
                                 return std::vector<std::vector<double>>{traj.c, traj.gamma};
                             },
                             threads);
    } else if (pipeline == "first-order") {
        auto fam = make_family(c_star, 0.003, 0.003, 9);
        auto tab = fam.tables_at(c_star);
        stats = run_ensemble(ec, grid, {"c1", "gamma1"},
                             [&](std::uint64_t q) {
                                 auto coeffs = sample_kappa(ec, q, win);
                                 FirstOrderEval ev(tab, coeffs, c_star);
                                 std::vector<double> c1, g1;
                                 for (double t : grid) {
                                     c1.push_back(ev.c1(t));
                                     g1.push_back(ev.gamma1_I(t) + ev.gamma1_II(t));
                                 }
                                 return std::vector<std::vector<double>>{c1, g1};
                             },
                             threads);
    } else {
        throw Error(ErrorKind::config, "pipeline must be direct-fit | first-order");
    }

    std::vector<std::string> cols = {"t", "tau"};
    for (const auto& nm : stats.names) {
        cols.push_back("mean_" + nm);
        cols.push_back("var_" + nm);
        cols.push_back("se_" + nm);
    }
    CsvWriter csv(out + "/stats.csv", cols);
    for (std::size_t ti = 0; ti < grid.size(); ++ti) {
        std::vector<double> row = {grid[ti], sigma * sigma * grid[ti]};
        for (std::size_t qi = 0; qi < stats.names.size(); ++qi) {
            row.push_back(stats.stat[qi][ti].mean);
            row.push_back(stats.stat[qi][ti].variance());
            row.push_back(stats.stat[qi][ti].stderror());
        }
        csv.row(row);
    }
    write_manifest(out, cfg, "ensemble");
    std::printf("ensemble %zu realizations (%zu failed) -> %s\n", ec.realizations, stats.failed,
                out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solitary waves in FPUT lattices with random spring coefficients"};
    app.require_subcommand(1);

    std::map<std::string, Common> commons;
    const std::vector<std::string> names = {"profile",  "simulate", "fit",      "modulate",
                                            "expand",   "tail",     "response", "rate",
                                            "limit-ode", "ensemble"};
    std::map<std::string, CLI::App*> cmds;
    for (const auto& nm : names) {
        auto* cmd = app.add_subcommand(nm);
        auto& cm = commons[nm];
        add_common(cmd, cm);
        cmd->add_option("--c", cm.c, "wave speed c*");
        cmd->add_option("--sigma", cm.sigma, "heterogeneity strength");
        cmd->add_option("--t-end", cm.t_end, "integration horizon");
        cmd->add_option("--dt", cm.dt, "RK4 step");
        cmd->add_option("--seed", cm.seed, "master seed");
        cmd->add_option("--variant", cm.variant, "full | homogeneous | both");
        cmds[nm] = cmd;
    }
    cmds["simulate"]->add_option("--snapshots", commons["simulate"].snapshots,
                                 "comma-separated snapshot times");
    cmds["rate"]->add_option("--c-grid", commons["rate"].c_grid, "number of rate-table speeds");
    cmds["rate"]->add_option("--p-samples", commons["rate"].p_samples, "phase samples");
    cmds["response"]->add_option("--p-samples", commons["response"].p_samples, "phase samples");
    cmds["ensemble"]->add_option("--realizations", commons["ensemble"].realizations,
                                 "ensemble size");
    cmds["ensemble"]->add_option("--pipeline", commons["ensemble"].pipeline,
                                 "direct-fit | first-order");
    cmds["limit-ode"]->add_option("--tau-end", commons["limit-ode"].tau_end,
                                  "slow-time horizon");
    cmds["limit-ode"]->add_option("--rate-table", commons["limit-ode"].rate_table_path,
                                  "rate table CSV produced by the rate subcommand");

    CLI11_PARSE(app, argc, argv);

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        Config cfg = build_config(commons[sub], sub);
        if (sub == "profile") return cmd_profile(cfg);
        if (sub == "simulate") return cmd_simulate(cfg, false);
        if (sub == "fit") return cmd_simulate(cfg, true);
        if (sub == "modulate") return cmd_modulate(cfg);
        if (sub == "expand") return cmd_expand(cfg);
        if (sub == "tail") return cmd_tail(cfg);
        if (sub == "response") return cmd_response(cfg);
        if (sub == "rate") return cmd_rate(cfg);
        if (sub == "limit-ode") return cmd_limit_ode(cfg, commons[sub].rate_table_path);
        if (sub == "ensemble") return cmd_ensemble(cfg);
    } catch (const Error& e) {
        std::fprintf(stderr, "error code=%d msg=%s\n", e.exit_code(), e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error code=1 msg=%s\n", e.what());
        return 1;
    }
    return 0;
}
