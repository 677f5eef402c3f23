#pragma once

// Report writers: key-value text (one `key = value` per line, insertion
// order), columnar batch rows, and filesystem helpers. Data files carry no
// timestamps so goldens stay diffable; volatile metadata lives only in the
// run manifest.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "sbmlab/common.hpp"

namespace sbmlab {

class KvReport {
 public:
  void add(const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    rows_.emplace_back(key, buf);
  }
  void add(const std::string& key, const std::string& value) { rows_.emplace_back(key, value); }
  void add_group(const std::string& heading) { rows_.emplace_back("# " + heading, ""); }

  std::string to_string() const {
    std::string out;
    for (const auto& [k, v] : rows_) {
      out += k;
      if (!v.empty()) {
        out += " = ";
        out += v;
      }
      out += "\n";
    }
    return out;
  }

  void write_file(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw ValidationError("kv report: cannot open " + path);
    os << to_string();
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

// Columnar batch rows: `# columns: ...` header then space-separated rows.
class ColumnarBatch {
 public:
  ColumnarBatch(std::string kind, std::vector<std::string> columns)
      : kind_(std::move(kind)), columns_(std::move(columns)) {}

  void add_row(const std::vector<double>& row) {
    if (row.size() != columns_.size())
      throw ValidationError("columnar batch: row width mismatch");
    rows_.push_back(row);
  }

  void write_file(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw ValidationError("columnar batch: cannot open " + path);
    os << "# " << kind_ << "\n# columns:";
    for (const auto& c : columns_) os << " " << c;
    os << "\n";
    char buf[64];
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", row[i]);
        os << (i ? " " : "") << buf;
      }
      os << "\n";
    }
  }

 private:
  std::string kind_;
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

inline void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw ValidationError("cannot create output directory " + path);
}

}  // namespace sbmlab
