#include "fput/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fput {

const std::map<std::string, std::string>& Config::defaults() {
    static const std::map<std::string, std::string> d = {
        {"c_star", "1.015"},        // initial wave speed
        {"sigma", "0.07"},          // heterogeneity strength
        {"distribution", "uniform"},// uniform | rademacher | truncated_gaussian
        {"trunc_alpha", "2.0"},     // support of the truncated gaussian
        {"dt", "0.05"},             // RK4 step
        {"t_end", "100"},           // integration horizon
        {"pad", "50"},              // window padding beyond the radiation cone
        {"seed", "20240901"},       // master seed
        {"realizations", "100"},
        {"variant", "full"},        // full | homogeneous | both
        {"p_samples", "8"},         // phase-average quadrature points
        {"c_grid", "8"},            // rate-table size
        {"c_min", "1.004"},
        {"c_max", "1.03"},
        {"tau_end", "1.0"},         // slow-time horizon of the limiting ODE
        {"dtau", "1e-3"},
        {"threads", "2"},
        {"fit_stride", "0.5"},      // time between modulation fits
        {"observer_stride", "10"},
        {"snapshots", ""},          // comma-separated times for field dumps
        {"family_margin", "0.012"}, // speed range of the profile family below c_star
        {"family_up", "0.004"},     // and above
        {"family_nodes", "13"},
        {"limit_tol", "1e-8"},      // response-limit convergence tolerance
        {"n0", "6"},
        {"dn", "4"},
        {"n_cap", "0"},             // 0 = automatic
        {"jmax", "0"},              // 0 = 40/eps + margin
        {"profile_n", "0"},         // 0 = automatic grid
        {"profile_l", "0"},
        {"x_lo", "-60"},            // limiting-tail sample range
        {"x_hi", "20"},
        {"zeta_seed", "7"},
        {"pipeline", "direct-fit"}, // ensemble pipeline: direct-fit | first-order
        {"out", ""},                // output directory (default derived per subcommand)
    };
    return d;
}

Config::Config() : values_(defaults()) {}

void Config::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end())
        throw Error(ErrorKind::config, "unknown configuration key '" + key + "'");
    it->second = value;
}

void Config::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::config, "cannot open config file " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto notspace = line.find_first_not_of(" \t\r\n");
        if (notspace == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::config,
                        path + ":" + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r\n");
            const auto e = s.find_last_not_of(" \t\r\n");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        try {
            set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const Error& e) {
            throw Error(ErrorKind::config,
                        path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

const std::string& Config::raw(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
        throw Error(ErrorKind::config, "unknown configuration key '" + key + "'");
    return it->second;
}

double Config::get_double(const std::string& key) const {
    try {
        return std::stod(raw(key));
    } catch (const std::exception&) {
        throw Error(ErrorKind::config, "key '" + key + "' is not a number: " + raw(key));
    }
}

long Config::get_long(const std::string& key) const {
    try {
        return std::stol(raw(key));
    } catch (const std::exception&) {
        throw Error(ErrorKind::config, "key '" + key + "' is not an integer: " + raw(key));
    }
}

bool Config::get_bool(const std::string& key) const {
    const std::string& v = raw(key);
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw Error(ErrorKind::config, "key '" + key + "' is not a boolean: " + v);
}

std::vector<double> Config::get_list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(raw(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

std::string Config::echo() const {
    std::string s;
    for (const auto& [k, v] : values_) {
        s += k;
        s += '=';
        s += v;
        s += '\n';
    }
    return s;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns) {
    auto* f = new std::ofstream(path);
    if (!*f) {
        delete f;
        throw Error(ErrorKind::config, "cannot open output file " + path);
    }
    out_ = f;
    std::string header;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) header += ',';
        header += columns[i];
    }
    *f << header << '\n';
}

CsvWriter::~CsvWriter() {
    delete static_cast<std::ofstream*>(out_);
}

void CsvWriter::row(const std::vector<double>& values) {
    auto& f = *static_cast<std::ofstream*>(out_);
    char buf[64];
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
        if (i) f << ',';
        f << buf;
    }
    f << '\n';
}

void CsvWriter::raw_row(const std::string& line) {
    *static_cast<std::ofstream*>(out_) << line << '\n';
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw Error(ErrorKind::config, "cannot create directory " + path);
}

void write_manifest(const std::string& outdir, const Config& cfg, const std::string& subcommand) {
    std::ofstream out(outdir + "/manifest.txt");
    if (!out) throw Error(ErrorKind::config, "cannot write manifest in " + outdir);
    out << "subcommand=" << subcommand << '\n';
    out << "code_version=fputrand-0.1.0\n";
    out << cfg.echo();
}

}  // namespace fput
