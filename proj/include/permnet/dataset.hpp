#pragma once

// On-disk formats (documented in docs/formats.md):
//
//  * datasets: line-delimited JSON. Line 1 is a header record carrying the
//    format version, config hash and seed; every following line is one
//    scenario or plan record.
//  * results: CSV with a leading `# config_hash=... seed=...` comment,
//    then a column header, numbers printed with %.17g.
//
// All writers stage into `<path>.partial` and rename on commit, so a failed
// run never leaves a truncated file behind.

#include "permnet/lp.hpp"
#include "permnet/wireless.hpp"

#include <cstdint>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace permnet {

inline constexpr int kDatasetVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RecordHeader {
  std::string kind;  // "scenarios" or "plans"
  int version = kDatasetVersion;
  std::string config_hash;
  std::uint64_t seed = 0;
};

/// Output file that only appears at its final path after commit().
class AtomicFile {
 public:
  explicit AtomicFile(std::string path);
  ~AtomicFile();
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;

  std::ofstream& stream() { return out_; }
  void commit();

 private:
  std::string path_;
  std::string staging_;
  std::ofstream out_;
  bool committed_ = false;
};

void write_scenarios(const std::string& path, const RecordHeader& header,
                     const std::vector<Scenario>& scenarios);
/// Rebuilds masks from the stored association. Throws FormatError.
std::vector<Scenario> read_scenarios(const std::string& path,
                                     RecordHeader* header = nullptr);

void write_plans(const std::string& path, const RecordHeader& header,
                 const std::vector<PlanSolution>& plans);
/// Reads plan, objective and status (LP diagnostics are not persisted).
std::vector<PlanSolution> read_plans(const std::string& path,
                                     RecordHeader* header = nullptr);

using CsvCell = std::variant<std::string, double, long long>;

/// Streams CSV rows into an AtomicFile.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& config_hash,
            std::uint64_t seed, const std::vector<std::string>& columns);
  void row(const std::vector<CsvCell>& cells);
  void commit() { file_.commit(); }

 private:
  AtomicFile file_;
  std::size_t columns_;
};

/// %.17g, which round-trips every double.
std::string format_double(double v);

}  // namespace permnet
