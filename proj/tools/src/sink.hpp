#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace crystab::workbench {

using ojson = nlohmann::ordered_json;

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& preamble, const std::vector<std::string>& columns)
      : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << preamble << '\n';
    row(columns);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

// All output files of one command; each carries the config hash and the version.
class OutputSink {
 public:
  OutputSink(std::filesystem::path dir, std::string hash) : dir_(std::move(dir)), hash_(std::move(hash)) {
    std::filesystem::create_directories(dir_);
  }

  ojson header(const std::string& command) const {
    return ojson{{"version", CRYSTAB_VERSION}, {"config_hash", hash_}, {"command", command}};
  }

  void write_json(const std::string& name, const ojson& j) const {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    out << j.dump(2) << '\n';
  }

  CsvWriter csv(const std::string& name, const std::vector<std::string>& columns) const {
    return CsvWriter(dir_ / name, "# crystab " CRYSTAB_VERSION " config " + hash_, columns);
  }

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  std::string hash_;
};

}  // namespace crystab::workbench
