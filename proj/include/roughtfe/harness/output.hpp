#pragma once

// Report (key=value lines), CSV tables and the run manifest.

#include "roughtfe/frac_kernel.hpp"
#include "roughtfe/harness/config.hpp"
#include "roughtfe/paths.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#ifndef ROUGHTFE_VERSION
#define ROUGHTFE_VERSION "0.1.0"
#endif

namespace roughtfe::harness {

inline constexpr const char* kVersion = ROUGHTFE_VERSION;

// Ordered key=value report.
class Report {
 public:
  void set(const std::string& key, const std::string& value) {
    for (auto& kv : entries_)
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    entries_.emplace_back(key, value);
  }
  void set(const std::string& key, double value) { set(key, format_double(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  template <class I>
    requires std::is_integral_v<I>
  void set(const std::string& key, I value) {
    set(key, std::to_string(value));
  }

  const std::string* find(const std::string& key) const {
    for (const auto& kv : entries_)
      if (kv.first == key) return &kv.second;
    return nullptr;
  }
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  void write(std::ostream& os) const {
    for (const auto& [k, v] : entries_) os << k << '=' << v << '\n';
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  // Numbers use 17 significant digits; strings are written verbatim.
  CsvTable& row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw std::logic_error("csv row width differs from header");
    rows_.push_back(std::move(cells));
    return *this;
  }

  std::size_t size() const noexcept { return rows_.size(); }

  void write(std::ostream& os) const {
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t k = 0; k < cells.size(); ++k) os << (k ? "," : "") << cells[k];
      os << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string cell(double x) { return format_double(x); }
inline std::string cell(std::size_t x) { return std::to_string(x); }
inline std::string cell(const std::string& s) { return s; }

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw resource_error("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  const std::filesystem::path& path() const noexcept { return dir_; }

  template <class W>
  void write(const std::string& name, const W& writer) const {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw resource_error("cannot open " + (dir_ / name).string());
    writer.write(os);
    if (!os) throw resource_error("write failed for " + (dir_ / name).string());
  }

  void write_path(const std::string& name, const StatePath& p) const {
    write_path_csv((dir_ / name).string(), p);
  }

 private:
  std::filesystem::path dir_;
};

// Everything needed to reproduce the outputs; no timestamps or host data.
inline Report manifest(const ExperimentConfig& c, const std::string& subcommand) {
  Report m;
  m.set("subcommand", subcommand);
  m.set("artifact_version", kVersion);
  m.set("config_hash", config_hash(c));
  m.set("seed", static_cast<std::uint64_t>(c.seed));
  m.set("alpha", c.alpha);
  m.set("T", c.T);
  m.set("n", c.n);
  m.set("h", c.T / static_cast<double>(c.n));
  m.set("model", c.family);
  m.set("sigma", c.sigma);
  m.set("dtheta", c.dtheta);
  m.set("theta_star", detail::join(c.theta_star));
  m.set("box_lower", detail::join(c.lower));
  m.set("box_upper", detail::join(c.upper));
  m.set("epsilons", detail::join(c.epsilons));
  m.set("replications", c.replications);
  m.set("gamma_implementation", kGammaImplementation);
  m.set("rng", "philox4x32-10 keyed on (seed, replicate, step, component), box-muller");
  m.set("noise_scheme", "averaged-kernel euler, left-point diffusion");
  return m;
}

}  // namespace roughtfe::harness
