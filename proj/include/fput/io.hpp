#pragma once

#include <map>
#include <string>
#include <vector>

#include "fput/util.hpp"

namespace fput {

/// Flat key=value run configuration. Unknown keys are rejected; every key has
/// a documented default and the full set is echoed into the run manifest.
class Config {
  public:
    Config();

    void set(const std::string& key, const std::string& value);
    void load_file(const std::string& path);

    const std::string& raw(const std::string& key) const;
    double get_double(const std::string& key) const;
    long get_long(const std::string& key) const;
    std::string get_string(const std::string& key) const { return raw(key); }
    bool get_bool(const std::string& key) const;
    std::vector<double> get_list(const std::string& key) const;  // comma separated

    /// key=value lines, sorted; the manifest body.
    std::string echo() const;

    static const std::map<std::string, std::string>& defaults();

  private:
    std::map<std::string, std::string> values_;
};

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns);
    ~CsvWriter();
    void row(const std::vector<double>& values);
    void raw_row(const std::string& line);

  private:
    void* out_;
};

void ensure_dir(const std::string& path);
void write_manifest(const std::string& outdir, const Config& cfg, const std::string& subcommand);

}  // namespace fput
